#include "nids/metrics.hpp"

#include <cmath>

#include "doctest.h"
#include "nids/errors.hpp"
#include "nids/rng.hpp"
#include "testutil.hpp"

using namespace nids;

namespace {

// brute-force pair-counting oracle, ties worth one half
double auc_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    double correct = 0.0;
    uint64_t pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) {
                correct += 1.0;
            } else if (scores[i] == scores[j]) {
                correct += 0.5;
            }
        }
    }
    return correct / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("roc_auc on the worked example") {
    std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
    std::vector<int> labels{0, 0, 1, 1};
    auto [auc, points] = roc_auc(scores, labels);
    CHECK(auc == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(auc == doctest::Approx(auc_oracle(scores, labels)).epsilon(1e-12));
    CHECK(points.front().fpr == 0.0);
    CHECK(points.front().tpr == 0.0);
    CHECK(points.back().fpr == 1.0);
    CHECK(points.back().tpr == 1.0);
}

TEST_CASE("roc_auc edge behavior") {
    std::vector<double> separated{0.9, 0.8, 0.1, 0.2};
    std::vector<int> labels{1, 1, 0, 0};
    CHECK(roc_auc(separated, labels).first == doctest::Approx(1.0));

    std::vector<double> equal(6, 0.5);
    std::vector<int> labels2{1, 0, 1, 0, 1, 0};
    CHECK(roc_auc(equal, labels2).first == doctest::Approx(0.5));

    std::vector<double> single{0.5, 0.7};
    std::vector<int> one_class{1, 1};
    CHECK_THROWS_AS(roc_auc(single, one_class), DataError);
}

TEST_CASE("roc_auc equals pair counting on random instances with ties") {
    Rng rng(113);
    for (int trial = 0; trial < 60; ++trial) {
        const size_t n = 2 + rng.below(199);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (size_t i = 0; i < n; ++i) {
            scores[i] = rng.below(20) / 10.0;  // coarse grid forces ties
            labels[i] = rng.chance(0.5) ? 1 : 0;
        }
        labels[0] = 1;
        labels[1] = 0;
        auto [auc, points] = roc_auc(scores, labels);
        CHECK(std::abs(auc - auc_oracle(scores, labels)) < 1e-9);
        for (size_t i = 1; i < points.size(); ++i) {
            CHECK(points[i].fpr >= points[i - 1].fpr);
            CHECK(points[i].tpr >= points[i - 1].tpr);
        }
    }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
    Rng rng(211);
    std::vector<double> scores(80);
    std::vector<int> labels(80);
    for (size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.uniform();
        labels[i] = rng.chance(0.4) ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    std::vector<double> mapped(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) mapped[i] = std::exp(3.0 * scores[i]) + 7.0;
    CHECK(roc_auc(scores, labels).first ==
          doctest::Approx(roc_auc(mapped, labels).first).epsilon(1e-12));
}

TEST_CASE("confusion metrics reproduce published recall values") {
    // tp=1859, fn=59 -> recall 0.9692 at four decimals
    std::vector<int> preds, labels;
    auto add = [&](int pred, int label, int count) {
        for (int i = 0; i < count; ++i) {
            preds.push_back(pred);
            labels.push_back(label);
        }
    };
    add(1, 1, 1859);
    add(0, 1, 59);
    add(0, 0, 100);
    EvalReport r = confusion_metrics(preds, labels);
    CHECK(r.counts.tp == 1859);
    CHECK(r.counts.fn == 59);
    CHECK(std::round(r.recall1 * 10000.0) / 10000.0 == doctest::Approx(0.9692));

    preds.clear();
    labels.clear();
    add(1, 1, 1470);
    add(0, 1, 448);
    add(0, 0, 10);
    r = confusion_metrics(preds, labels);
    CHECK(std::round(r.recall1 * 10000.0) / 10000.0 == doctest::Approx(0.7664));

    preds.clear();
    labels.clear();
    add(1, 1, 5);
    add(0, 0, 5);
    r = confusion_metrics(preds, labels);
    CHECK(r.f1 == 1.0);
    CHECK(r.counts.total() == 10);
}

TEST_CASE("evaluate_verdicts fills the per-class breakdown") {
    std::vector<int> preds{1, 0, 1, 0, 1};
    std::vector<ClassLabel> truth{ClassLabel::dos, ClassLabel::dos, ClassLabel::scan11,
                                  ClassLabel::background, ClassLabel::background};
    EvalReport r = evaluate_verdicts(preds, truth);
    CHECK(r.per_class_recall[ClassLabel::dos] == doctest::Approx(0.5));
    CHECK(r.per_class_recall[ClassLabel::scan11] == doctest::Approx(1.0));
    CHECK(r.per_class_recall[ClassLabel::background] == doctest::Approx(0.5));
    CHECK(r.counts.tp == 2);
    CHECK(r.counts.fp == 1);
    CHECK(r.counts.fn == 1);
    CHECK(r.counts.tn == 1);
}

TEST_CASE("kernel density estimation") {
    SUBCASE("single kernel peaks at the score and integrates to one") {
        std::map<std::string, std::vector<double>> groups{{"g", {0.5}}};
        auto curves = export_score_density(groups);
        const DensityCurve& c = curves.at("g");
        REQUIRE(c.x.size() == 512);
        size_t peak = 0;
        double integral = 0.0;
        for (size_t i = 0; i < c.x.size(); ++i) {
            if (c.density[i] > c.density[peak]) peak = i;
            if (i > 0) {
                integral +=
                    (c.x[i] - c.x[i - 1]) * (c.density[i] + c.density[i - 1]) / 2.0;
            }
        }
        CHECK(std::abs(c.x[peak] - 0.5) < 0.01);
        CHECK(integral == doctest::Approx(1.0).epsilon(0.05));
    }

    SUBCASE("scores equal to 1.0 are excluded") {
        std::map<std::string, std::vector<double>> groups{{"g", {1.0, 1.0, 1.0}}};
        CHECK_THROWS_WITH_AS(export_score_density(groups), doctest::Contains("after excluding"),
                             DataError);
    }

    SUBCASE("densities integrate to roughly one per group") {
        Rng rng(5);
        std::map<std::string, std::vector<double>> groups;
        for (int i = 0; i < 400; ++i) groups["a"].push_back(rng.normal(0.3, 0.05));
        for (int i = 0; i < 150; ++i) groups["b"].push_back(rng.normal(0.7, 0.1));
        groups["b"].push_back(1.0);  // excluded
        auto curves = export_score_density(groups);
        for (const auto& [name, c] : curves) {
            double integral = 0.0;
            for (size_t i = 1; i < c.x.size(); ++i) {
                integral +=
                    (c.x[i] - c.x[i - 1]) * (c.density[i] + c.density[i - 1]) / 2.0;
            }
            CHECK(integral == doctest::Approx(1.0).epsilon(0.05));
        }
    }

    SUBCASE("empty group is an error") {
        std::map<std::string, std::vector<double>> groups{{"g", {}}};
        CHECK_THROWS_AS(export_score_density(groups), DataError);
    }

    SUBCASE("density export is byte-deterministic") {
        Rng rng(6);
        std::map<std::string, std::vector<double>> groups;
        for (int i = 0; i < 100; ++i) groups["s"].push_back(rng.uniform());
        testutil::TempDir dir("kde");
        write_density_csv(dir.file("a.csv"), export_score_density(groups));
        write_density_csv(dir.file("b.csv"), export_score_density(groups));
        CHECK(testutil::read_text(dir.file("a.csv")) ==
              testutil::read_text(dir.file("b.csv")));
    }
}
