#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace masskit {

struct ScoredSample {
    double score = 0.0;  // higher = more malignant
    int truth = 0;       // 1 = malignant
};

enum class CurveKind { roc, gain };

struct CurvePoints {
    CurveKind kind = CurveKind::roc;
    std::vector<std::pair<double, double>> points;  // x non-decreasing, (0,0) .. (1,1)
    double area = 0.0;                              // trapezoidal, roc only
};

namespace detail {

// Samples sorted by descending score and chunked into blocks of exactly tied
// scores; a whole block crosses the threshold at once.
inline std::vector<ScoredSample> sorted_by_score(std::vector<ScoredSample> samples) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const ScoredSample& a, const ScoredSample& b) { return a.score > b.score; });
    return samples;
}

}  // namespace detail

// Threshold sweep from the highest score down; tied scores move as one block,
// which draws their segment as a diagonal. x = 1 - specificity,
// y = sensitivity. Area by the trapezoidal rule.
inline CurvePoints roc_curve(std::vector<ScoredSample> samples) {
    std::size_t pos = 0, neg = 0;
    for (const auto& s : samples) (s.truth == 1 ? pos : neg) += 1;
    if (pos == 0 || neg == 0) throw std::invalid_argument("roc_curve: need both classes");

    samples = detail::sorted_by_score(std::move(samples));
    CurvePoints out;
    out.kind = CurveKind::roc;
    out.points.emplace_back(0.0, 0.0);
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < samples.size()) {
        std::size_t j = i;
        while (j < samples.size() && samples[j].score == samples[i].score) {
            (samples[j].truth == 1 ? tp : fp) += 1;
            ++j;
        }
        out.points.emplace_back(static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos));
        i = j;
    }
    double area = 0.0;
    for (std::size_t k = 1; k < out.points.size(); ++k) {
        const auto& [x0, y0] = out.points[k - 1];
        const auto& [x1, y1] = out.points[k];
        area += (x1 - x0) * 0.5 * (y0 + y1);
    }
    out.area = area;
    return out;
}

inline double auc(const std::vector<ScoredSample>& samples) { return roc_curve(samples).area; }

// Fraction of all positives captured within the top-x fraction of samples
// when ranked by score; tied blocks are taken whole, so their segment is a
// straight line.
inline CurvePoints gain_curve(std::vector<ScoredSample> samples) {
    if (samples.empty()) throw std::invalid_argument("gain_curve: empty input");
    std::size_t pos = 0;
    for (const auto& s : samples) pos += s.truth == 1 ? 1 : 0;
    if (pos == 0) throw std::invalid_argument("gain_curve: no positives");

    const double n = static_cast<double>(samples.size());
    samples = detail::sorted_by_score(std::move(samples));
    CurvePoints out;
    out.kind = CurveKind::gain;
    out.points.emplace_back(0.0, 0.0);
    std::size_t taken = 0, captured = 0;
    std::size_t i = 0;
    while (i < samples.size()) {
        std::size_t j = i;
        while (j < samples.size() && samples[j].score == samples[i].score) {
            ++taken;
            captured += samples[j].truth == 1 ? 1 : 0;
            ++j;
        }
        out.points.emplace_back(static_cast<double>(taken) / n,
                                static_cast<double>(captured) / static_cast<double>(pos));
        i = j;
    }
    return out;
}

inline void write_curve_csv(const CurvePoints& curve, std::ostream& os) {
    os << "x,y\n";
    char buf[64];
    for (const auto& [x, y] : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g\n", x, y);
        os << buf;
    }
}

inline void write_curve_csv(const CurvePoints& curve, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write curve file: " + path.string());
    write_curve_csv(curve, os);
}

}  // namespace masskit
