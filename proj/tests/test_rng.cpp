#include "nids/rng.hpp"

#include <algorithm>
#include <vector>

#include "doctest.h"

using namespace nids;

TEST_CASE("rng is deterministic under a seed") {
    Rng a(7), b(7), c(8);
    bool all_equal = true;
    bool any_differs = false;
    for (int i = 0; i < 100; ++i) {
        const uint64_t va = a.next_u64();
        all_equal = all_equal && va == b.next_u64();
        any_differs = any_differs || va != c.next_u64();
    }
    CHECK(all_equal);
    CHECK(any_differs);
}

TEST_CASE("uniform stays in [0,1) and below(n) in range") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(rng.below(17) < 17);
    }
    CHECK(rng.below(0) == 0);
    CHECK(rng.below(1) == 0);
}

TEST_CASE("shuffle permutes") {
    Rng rng(11);
    std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
    auto orig = v;
    rng.shuffle(v);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == orig);
}

TEST_CASE("sample_indices draws distinct indices") {
    Rng rng(5);
    auto idx = rng.sample_indices(100, 30);
    CHECK(idx.size() == 30);
    std::sort(idx.begin(), idx.end());
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
    CHECK(idx.back() < 100);
}

TEST_CASE("normal draws have roughly standard moments") {
    Rng rng(91);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("derived sub-streams differ from each other and the base") {
    CHECK(derive_seed(42, "balance") != derive_seed(42, "forest"));
    CHECK(derive_seed(42, "forest") != derive_seed(43, "forest"));
    CHECK(derive_seed(42, "tree", 0) != derive_seed(42, "tree", 1));
}
