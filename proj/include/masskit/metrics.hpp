#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>

namespace masskit {

// Positive class is malignant (1) throughout.
struct ConfusionMatrix {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::size_t n() const { return tp + tn + fp + fn; }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truth) {
    if (preds.size() != truth.size()) throw std::invalid_argument("confusion: length mismatch");
    if (preds.empty()) throw std::invalid_argument("confusion: empty input");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (truth[i] == 1) {
            preds[i] == 1 ? ++cm.tp : ++cm.fn;
        } else {
            preds[i] == 1 ? ++cm.fp : ++cm.tn;
        }
    }
    return cm;
}

// A metric whose denominator is zero is reported as absent rather than
// poisoning the rest of the report.
struct Metrics {
    std::optional<double> accuracy;
    std::optional<double> sensitivity;  // TP / (TP + FN)
    std::optional<double> specificity;  // TN / (TN + FP)
};

inline Metrics metrics(const ConfusionMatrix& cm) {
    if (cm.n() == 0) throw std::invalid_argument("metrics: empty confusion matrix");
    Metrics m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.n());
    if (cm.tp + cm.fn > 0) m.sensitivity = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    if (cm.tn + cm.fp > 0) m.specificity = static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
    return m;
}

}  // namespace masskit
