#include "nids/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "nids/errors.hpp"

namespace nids {

namespace {

std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double silverman_bandwidth(const std::vector<double>& values) {
    const size_t n = values.size();
    if (n == 0) return 1e-3;
    double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

    double spread;
    if (sd > 0.0 && iqr > 0.0) {
        spread = std::min(sd, iqr / 1.34);
    } else if (sd > 0.0) {
        spread = sd;
    } else if (iqr > 0.0) {
        spread = iqr / 1.34;
    } else {
        spread = 1e-3 * std::max(1.0, std::abs(mean));  // degenerate sample
    }
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

}  // namespace

std::pair<double, std::vector<RocPoint>> roc_auc(std::span<const double> scores,
                                                 std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw DataError("roc_auc: scores/labels length mismatch");
    }
    uint64_t positives = 0, negatives = 0;
    for (int l : labels) {
        if (l == 1) {
            ++positives;
        } else if (l == 0) {
            ++negatives;
        } else {
            throw DataError("roc_auc: labels must be 0 or 1");
        }
    }
    if (positives == 0 || negatives == 0) {
        throw DataError("roc_auc: both classes must be present");
    }

    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    std::vector<RocPoint> points;
    points.push_back({0.0, 0.0});
    double auc = 0.0;
    uint64_t tp = 0, fp = 0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        // advance over one tie group so tied scores contribute a single
        // diagonal segment (half credit per tied positive/negative pair)
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]] == 1) {
                ++tp;
            } else {
                ++fp;
            }
            ++i;
        }
        const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
        const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        points.push_back({fpr, tpr});
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    return {auc, std::move(points)};
}

ConfusionCounts confusion_counts(std::span<const int> preds, std::span<const int> labels) {
    if (preds.size() != labels.size()) {
        throw DataError("confusion_counts: preds/labels length mismatch");
    }
    ConfusionCounts c;
    for (size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == 1;
        const bool t = labels[i] == 1;
        if (p && t) {
            ++c.tp;
        } else if (p && !t) {
            ++c.fp;
        } else if (!p && t) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

EvalReport confusion_metrics(std::span<const int> preds, std::span<const int> labels) {
    EvalReport r;
    r.counts = confusion_counts(preds, labels);
    const auto& c = r.counts;
    r.recall1 = (c.tp + c.fn) > 0
                    ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn)
                    : 0.0;
    r.f1 = (2 * c.tp + c.fp + c.fn) > 0
               ? 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn)
               : 0.0;
    return r;
}

EvalReport evaluate_verdicts(std::span<const int> preds,
                             std::span<const ClassLabel> true_labels) {
    if (preds.size() != true_labels.size()) {
        throw DataError("evaluate_verdicts: preds/labels length mismatch");
    }
    std::vector<int> binary(true_labels.size());
    for (size_t i = 0; i < true_labels.size(); ++i) {
        binary[i] = is_attack(true_labels[i]) ? 1 : 0;
    }
    EvalReport r = confusion_metrics(preds, binary);

    std::vector<double> scores(preds.size());
    for (size_t i = 0; i < preds.size(); ++i) scores[i] = preds[i];
    auto [auc, points] = roc_auc(scores, binary);
    r.auc = auc;
    r.roc_points = std::move(points);

    std::map<ClassLabel, std::pair<uint64_t, uint64_t>> hits;  // correct, total
    for (size_t i = 0; i < preds.size(); ++i) {
        auto& [correct, total] = hits[true_labels[i]];
        ++total;
        const int want = is_attack(true_labels[i]) ? 1 : 0;
        if (preds[i] == want) ++correct;
    }
    for (const auto& [label, ct] : hits) {
        r.per_class_recall[label] =
            static_cast<double>(ct.first) / static_cast<double>(ct.second);
    }
    return r;
}

std::map<std::string, DensityCurve> export_score_density(
    const std::map<std::string, std::vector<double>>& groups, std::optional<double> bandwidth,
    size_t grid_points) {
    if (grid_points < 2) throw DataError("export_score_density: grid too small");

    std::map<std::string, std::vector<double>> included;
    for (const auto& [name, scores] : groups) {
        if (scores.empty()) {
            throw DataError("export_score_density: group '" + name + "' is empty");
        }
        std::vector<double> keep;
        keep.reserve(scores.size());
        for (double s : scores) {
            if (s != 1.0) keep.push_back(s);  // filtered verdicts carry score 1.0
        }
        if (keep.empty()) {
            throw DataError("export_score_density: group '" + name +
                            "' is empty after excluding scores equal to 1.0");
        }
        included[name] = std::move(keep);
    }

    std::map<std::string, double> bandwidths;
    double max_bw = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& [name, scores] : included) {
        double h = bandwidth ? *bandwidth : silverman_bandwidth(scores);
        if (h <= 0.0) h = 1e-6;
        bandwidths[name] = h;
        max_bw = std::max(max_bw, h);
        for (double s : scores) {
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
    }
    lo -= 3.0 * max_bw;
    hi += 3.0 * max_bw;

    std::vector<double> grid(grid_points);
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    for (size_t i = 0; i < grid_points; ++i) grid[i] = lo + step * static_cast<double>(i);

    std::map<std::string, DensityCurve> curves;
    const double inv_sqrt2pi = 0.3989422804014327;
    for (const auto& [name, scores] : included) {
        const double h = bandwidths[name];
        DensityCurve curve;
        curve.x = grid;
        curve.density.resize(grid_points, 0.0);
        const double norm = inv_sqrt2pi / (h * static_cast<double>(scores.size()));
        for (size_t i = 0; i < grid_points; ++i) {
            double acc = 0.0;
            for (double s : scores) {
                const double u = (grid[i] - s) / h;
                acc += std::exp(-0.5 * u * u);
            }
            curve.density[i] = acc * norm;
        }
        curves[name] = std::move(curve);
    }
    return curves;
}

void write_density_csv(const std::string& path,
                       const std::map<std::string, DensityCurve>& curves) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write density file '" + path + "'");
    out << "group,x,density\n";
    for (const auto& [name, curve] : curves) {
        for (size_t i = 0; i < curve.x.size(); ++i) {
            out << name << ',' << format_double(curve.x[i]) << ','
                << format_double(curve.density[i]) << '\n';
        }
    }
}

void write_roc_csv(const std::string& path, std::span<const RocPoint> points) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write roc file '" + path + "'");
    out << "fpr,tpr\n";
    for (const RocPoint& p : points) {
        out << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
    }
}

}  // namespace nids
