#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "masskit/curves.hpp"
#include "masskit/metrics.hpp"

namespace masskit {

// Fractions internally; percentages only at the rendering edge. Two decimals,
// half away from zero, so 0.78125 prints as 78.13.
inline std::string format_percent(double fraction) {
    double scaled = static_cast<double>(std::llround(fraction * 10000.0)) / 100.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", scaled);
    return buf;
}

inline std::string format_metric(const std::optional<double>& m) {
    return m ? format_percent(*m) : std::string("n/a");
}

struct EvalReport {
    std::string model;
    std::string partition;  // "train" / "test"
    ConfusionMatrix cm;
    Metrics measures;
    std::optional<double> auc;

    static EvalReport from_scores(std::string model, std::string partition,
                                  const std::vector<int>& preds, const std::vector<int>& truth,
                                  const std::vector<ScoredSample>& scored) {
        EvalReport r;
        r.model = std::move(model);
        r.partition = std::move(partition);
        r.cm = confusion(preds, truth);
        r.measures = metrics(r.cm);
        bool both = false, seen_pos = false, seen_neg = false;
        for (const auto& s : scored) (s.truth == 1 ? seen_pos : seen_neg) = true;
        both = seen_pos && seen_neg;
        if (both) r.auc = masskit::auc(scored);
        return r;
    }
};

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["model"] = r.model;
    j["partition"] = r.partition;
    j["confusion"] = {{"tp", r.cm.tp}, {"tn", r.cm.tn}, {"fp", r.cm.fp}, {"fn", r.cm.fn}};
    nlohmann::json m;
    m["accuracy"] = r.measures.accuracy ? nlohmann::json(*r.measures.accuracy) : nlohmann::json();
    m["sensitivity"] = r.measures.sensitivity ? nlohmann::json(*r.measures.sensitivity) : nlohmann::json();
    m["specificity"] = r.measures.specificity ? nlohmann::json(*r.measures.specificity) : nlohmann::json();
    j["metrics"] = m;
    j["auc"] = r.auc ? nlohmann::json(*r.auc) : nlohmann::json();
    return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.model = j.at("model").get<std::string>();
    r.partition = j.at("partition").get<std::string>();
    r.cm.tp = j.at("confusion").at("tp").get<std::size_t>();
    r.cm.tn = j.at("confusion").at("tn").get<std::size_t>();
    r.cm.fp = j.at("confusion").at("fp").get<std::size_t>();
    r.cm.fn = j.at("confusion").at("fn").get<std::size_t>();
    const auto& m = j.at("metrics");
    if (!m.at("accuracy").is_null()) r.measures.accuracy = m.at("accuracy").get<double>();
    if (!m.at("sensitivity").is_null()) r.measures.sensitivity = m.at("sensitivity").get<double>();
    if (!m.at("specificity").is_null()) r.measures.specificity = m.at("specificity").get<double>();
    if (!j.at("auc").is_null()) r.auc = j.at("auc").get<double>();
    return r;
}

namespace detail {

inline std::string pad_to(std::string s, std::size_t width) {
    while (s.size() < width) s.push_back(' ');
    return s;
}

}  // namespace detail

// Confusion-matrix table: one block per model, desired class per row, counts
// for both partitions side by side.
inline std::string render_confusion_table(std::span<const EvalReport> reports) {
    std::ostringstream os;
    os << detail::pad_to("model", 10) << detail::pad_to("desired", 12) << detail::pad_to("partition", 11)
       << detail::pad_to("pred benign", 13) << "pred malignant\n";
    for (const auto& r : reports) {
        os << detail::pad_to(r.model, 10) << detail::pad_to("benign", 12) << detail::pad_to(r.partition, 11)
           << detail::pad_to(std::to_string(r.cm.tn), 13) << r.cm.fp << '\n';
        os << detail::pad_to(r.model, 10) << detail::pad_to("malignant", 12) << detail::pad_to(r.partition, 11)
           << detail::pad_to(std::to_string(r.cm.fn), 13) << r.cm.tp << '\n';
    }
    return os.str();
}

inline std::string render_metrics_table(std::span<const EvalReport> reports) {
    std::ostringstream os;
    os << detail::pad_to("model", 10) << detail::pad_to("partition", 11) << detail::pad_to("accuracy", 11)
       << detail::pad_to("sensitivity", 13) << "specificity\n";
    for (const auto& r : reports) {
        os << detail::pad_to(r.model, 10) << detail::pad_to(r.partition, 11)
           << detail::pad_to(format_metric(r.measures.accuracy), 11)
           << detail::pad_to(format_metric(r.measures.sensitivity), 13)
           << format_metric(r.measures.specificity) << '\n';
    }
    return os.str();
}

inline std::string render_auc_table(std::span<const EvalReport> reports) {
    std::ostringstream os;
    os << detail::pad_to("model", 10) << detail::pad_to("partition", 11) << "area under ROC curve\n";
    for (const auto& r : reports) {
        if (!r.auc) continue;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", *r.auc);
        os << detail::pad_to(r.model, 10) << detail::pad_to(r.partition, 11) << buf << '\n';
    }
    return os.str();
}

struct ComparativeSummary {
    std::vector<EvalReport> reports;          // as given
    std::vector<std::string> auc_ranking;     // model names, best test AUC first
    std::string text;
    nlohmann::json json;
};

// Side-by-side view of any number of per-model reports plus an AUC ranking
// over the test partitions.
inline ComparativeSummary compare_report(std::span<const EvalReport> reports) {
    if (reports.empty()) throw std::invalid_argument("compare_report: no reports");
    ComparativeSummary out;
    out.reports.assign(reports.begin(), reports.end());

    std::vector<std::pair<std::string, double>> ranked;
    for (const auto& r : reports) {
        if (r.partition == "test" && r.auc) ranked.emplace_back(r.model, *r.auc);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [model, area] : ranked) out.auc_ranking.push_back(model);

    std::ostringstream os;
    os << "Confusion matrices\n" << render_confusion_table(reports) << '\n';
    os << "Statistical measures\n" << render_metrics_table(reports) << '\n';
    os << "AUC\n" << render_auc_table(reports);
    if (!out.auc_ranking.empty()) {
        os << "ranking (test AUC): ";
        for (std::size_t i = 0; i < out.auc_ranking.size(); ++i) {
            if (i) os << " > ";
            os << out.auc_ranking[i];
        }
        os << '\n';
    }
    out.text = os.str();

    nlohmann::json jr = nlohmann::json::array();
    for (const auto& r : reports) jr.push_back(report_to_json(r));
    out.json = {{"reports", jr}, {"auc_ranking", out.auc_ranking}};
    return out;
}

}  // namespace masskit
