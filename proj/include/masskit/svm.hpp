#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "masskit/encoding.hpp"

namespace masskit {

struct KernelParams {
    double gamma = 1.0;
    double coef_r = 0.1;
    int degree = 4;
};

struct SvmParams {
    double c = 10.0;
    double kkt_tolerance = 1e-3;
    // scales the pairwise-update budget (max_passes * 2000 * n updates);
    // training normally ends far earlier via the duality-gap test
    int max_passes = 10;
};

// K(a, b) = (gamma * <a,b> + r)^degree
inline double poly_kernel(std::span<const double> a, std::span<const double> b, const KernelParams& k) {
    if (a.size() != b.size()) throw std::invalid_argument("poly_kernel: length mismatch");
    if (k.gamma <= 0.0) throw std::invalid_argument("poly_kernel: gamma must be > 0");
    if (k.degree < 1) throw std::invalid_argument("poly_kernel: degree must be >= 1");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return std::pow(k.gamma * dot + k.coef_r, static_cast<double>(k.degree));
}

// Dual-form kernel machine: D(x) = sum_i alpha_i y_i K(sv_i, x) + b.
// Only samples with alpha > 0 are stored; sv_index maps each back to its
// training row for KKT diagnostics.
class SvmModel {
public:
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> alpha;
    std::vector<int> y;  // +1 / -1
    std::vector<std::size_t> sv_index;
    double bias = 0.0;
    KernelParams kernel;
    bool converged = true;
    std::vector<double> dual_trace;  // cumulative dual objective per accepted update
    double dual_objective = 0.0;

    double decision_value(std::span<const double> x) const {
        double d = bias;
        for (std::size_t i = 0; i < support_vectors.size(); ++i) {
            d += alpha[i] * y[i] * poly_kernel(support_vectors[i], x, kernel);
        }
        return d;
    }

    // Classification rule: malignant iff D(x) >= 0.
    int classify(std::span<const double> x) const { return decision_value(x) >= 0.0 ? 1 : 0; }

    double sum_alpha_y() const {
        double s = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) s += alpha[i] * y[i];
        return s;
    }
};

namespace detail {

// Pairwise dual ascent with maximal-violating-pair selection on the dual
// thresholds (the Keerthi-style refinement of sequential minimal
// optimization; the classic single-threshold variant can cycle without
// converging). The gradient cache f_i = sum_j alpha_j y_j K_ij - y_i is
// bias-free; the bias is recovered from the final threshold bounds.
class SmoSolver {
public:
    SmoSolver(const std::vector<std::vector<double>>& rows, const std::vector<int>& signs,
              const SvmParams& params, const KernelParams& kernel)
        : rows_(rows), y_(signs), p_(params), k_(kernel), n_(rows.size()) {
        alpha_.assign(n_, 0.0);
        f_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) f_[i] = -static_cast<double>(y_[i]);
        if (n_ <= 2000) {
            gram_.assign(n_ * n_, 0.0);
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t j = i; j < n_; ++j) {
                    double v = poly_kernel(rows_[i], rows_[j], k_);
                    gram_[i * n_ + j] = v;
                    gram_[j * n_ + i] = v;
                }
            }
        }
        trace_.push_back(0.0);
    }

    void solve() {
        const std::size_t step_cap =
            std::max<std::size_t>(1000000, n_ * 2000 * static_cast<std::size_t>(std::max(1, p_.max_passes)));
        double gap = std::numeric_limits<double>::infinity();
        while (steps_ < step_cap) {
            auto [iu, il, bu, bl] = threshold_bounds();
            gap = bl - bu;
            if (iu == n_ || il == n_ || gap <= 2.0 * p_.kkt_tolerance) break;
            if (!take_step(iu, il)) {
                // the most violating pair is numerically stuck; try any
                // violating partner in index order before declaring a stall
                bool moved = false;
                for (std::size_t j = 0; j < n_ && !moved; ++j) {
                    if (j != iu && in_low(j)) moved = take_step(iu, j);
                }
                for (std::size_t i = 0; i < n_ && !moved; ++i) {
                    if (i != il && in_up(i)) moved = take_step(i, il);
                }
                if (!moved) break;
            }
        }
        auto [iu, il, bu, bl] = threshold_bounds();
        gap = bl - bu;
        converged_ = gap <= 2.0 * p_.kkt_tolerance;
        b_ = -(bu + bl) / 2.0;
    }

    SvmModel model() const {
        SvmModel m;
        m.kernel = k_;
        m.bias = b_;
        m.converged = converged_;
        m.dual_trace = trace_;
        for (std::size_t i = 0; i < n_; ++i) {
            if (alpha_[i] > 0.0) {
                m.support_vectors.push_back(rows_[i]);
                m.alpha.push_back(alpha_[i]);
                m.y.push_back(y_[i]);
                m.sv_index.push_back(i);
            }
        }
        // exact final dual objective, free of incremental rounding
        double w = 0.0;
        for (double a : m.alpha) w += a;
        for (std::size_t i = 0; i < m.alpha.size(); ++i) {
            for (std::size_t j = 0; j < m.alpha.size(); ++j) {
                w -= 0.5 * m.alpha[i] * m.alpha[j] * m.y[i] * m.y[j] *
                     poly_kernel(m.support_vectors[i], m.support_vectors[j], k_);
            }
        }
        m.dual_objective = w;
        return m;
    }

private:
    double kernel_at(std::size_t i, std::size_t j) const {
        if (!gram_.empty()) return gram_[i * n_ + j];
        return poly_kernel(rows_[i], rows_[j], k_);
    }

    // samples whose f may still decrease / increase the lower / upper
    // threshold without leaving the box
    bool in_up(std::size_t i) const {
        return (y_[i] > 0 && alpha_[i] < p_.c) || (y_[i] < 0 && alpha_[i] > 0.0);
    }
    bool in_low(std::size_t i) const {
        return (y_[i] < 0 && alpha_[i] < p_.c) || (y_[i] > 0 && alpha_[i] > 0.0);
    }

    // (argmin f over I_up, argmax f over I_low, and the two threshold bounds)
    std::tuple<std::size_t, std::size_t, double, double> threshold_bounds() const {
        std::size_t iu = n_, il = n_;
        double bu = std::numeric_limits<double>::infinity();
        double bl = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_; ++i) {
            if (in_up(i) && f_[i] < bu) {
                bu = f_[i];
                iu = i;
            }
            if (in_low(i) && f_[i] > bl) {
                bl = f_[i];
                il = i;
            }
        }
        return {iu, il, bu, bl};
    }

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        const double alph1 = alpha_[i1], alph2 = alpha_[i2];
        const double y1 = y_[i1], y2 = y_[i2];
        const double f1 = f_[i1], f2 = f_[i2];
        const double s = y1 * y2;
        double lo, hi;
        if (s < 0.0) {
            lo = std::max(0.0, alph2 - alph1);
            hi = std::min(p_.c, p_.c + alph2 - alph1);
        } else {
            lo = std::max(0.0, alph1 + alph2 - p_.c);
            hi = std::min(p_.c, alph1 + alph2);
        }
        if (lo >= hi) return false;

        const double k11 = kernel_at(i1, i1), k12 = kernel_at(i1, i2), k22 = kernel_at(i2, i2);
        const double eta = k11 + k22 - 2.0 * k12;
        double a2;
        if (eta > 0.0) {
            a2 = alph2 + y2 * (f1 - f2) / eta;
            a2 = std::clamp(a2, lo, hi);
        } else {
            // flat or concave direction: pick the better boundary
            const double obj_lo = objective_delta(i1, i2, lo - alph2);
            const double obj_hi = objective_delta(i1, i2, hi - alph2);
            if (obj_lo > obj_hi + 1e-12) {
                a2 = lo;
            } else if (obj_hi > obj_lo + 1e-12) {
                a2 = hi;
            } else {
                return false;
            }
        }
        if (std::fabs(a2 - alph2) < 1e-8 * (a2 + alph2 + 1e-8)) return false;

        double a1 = alph1 + s * (alph2 - a2);
        // snap to the box to keep bound/unbound classification exact
        const double snap = 1e-8 * p_.c;
        if (a1 < snap) a1 = 0.0;
        if (a1 > p_.c - snap) a1 = p_.c;
        if (a2 < snap) a2 = 0.0;
        if (a2 > p_.c - snap) a2 = p_.c;

        const double d1 = a1 - alph1, d2 = a2 - alph2;
        dual_ += objective_delta_exact(i1, i2, d1, d2);
        alpha_[i1] = a1;
        alpha_[i2] = a2;
        push_trace(dual_);
        for (std::size_t k = 0; k < n_; ++k) {
            f_[k] += y1 * d1 * kernel_at(i1, k) + y2 * d2 * kernel_at(i2, k);
        }
        ++steps_;
        return true;
    }

    // Dual-objective change when alpha2 moves by d2 along the constraint line
    // (alpha1 moves by -s*d2), given the current multipliers.
    double objective_delta(std::size_t i1, std::size_t i2, double d2) const {
        const double s = static_cast<double>(y_[i1]) * y_[i2];
        return objective_delta_exact(i1, i2, -s * d2, d2);
    }

    double objective_delta_exact(std::size_t i1, std::size_t i2, double d1, double d2) const {
        const double y1 = y_[i1], y2 = y_[i2];
        // v_i = sum_j alpha_j y_j K_ij for the current alphas
        const double v1 = f_[i1] + y1;
        const double v2 = f_[i2] + y2;
        const double k11 = kernel_at(i1, i1), k12 = kernel_at(i1, i2), k22 = kernel_at(i2, i2);
        return d1 + d2 - y1 * d1 * v1 - y2 * d2 * v2 -
               0.5 * (d1 * d1 * k11 + d2 * d2 * k22) - y1 * y2 * d1 * d2 * k12;
    }

    // Long runs decimate the stored trace (keep every 2^k-th update) so model
    // files stay reasonable; the retained subsequence preserves monotonicity.
    void push_trace(double value) {
        ++trace_seen_;
        if (trace_seen_ % trace_stride_ != 0) return;
        trace_.push_back(value);
        if (trace_.size() >= 16384) {
            std::vector<double> kept;
            kept.reserve(trace_.size() / 2 + 1);
            for (std::size_t i = 0; i < trace_.size(); i += 2) kept.push_back(trace_[i]);
            trace_ = std::move(kept);
            trace_stride_ *= 2;
        }
    }

    const std::vector<std::vector<double>>& rows_;
    const std::vector<int>& y_;
    SvmParams p_;
    KernelParams k_;
    std::size_t n_;
    std::vector<double> alpha_;
    std::vector<double> f_;  // f_i = D(x_i) - bias - y_i
    std::vector<double> gram_;
    double b_ = 0.0;
    double dual_ = 0.0;
    bool converged_ = false;
    std::size_t steps_ = 0;
    std::vector<double> trace_;
    std::size_t trace_seen_ = 0;
    std::size_t trace_stride_ = 1;
};

}  // namespace detail

// Maximizes the soft-margin dual by SMO-style pairwise updates on the most
// violating pair. Labels are 0/1 class codes; benign maps to -1, malignant
// to +1. Training ends when the duality gap drops within 2 * kkt_tolerance
// (every sample then satisfies its KKT case within the tolerance); a model
// that exhausts the update budget or stalls first is still returned, with
// converged = false.
inline SvmModel train_svm(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                          const SvmParams& params = {}, const KernelParams& kernel = {}) {
    if (rows.size() != labels.size() || rows.empty()) throw std::invalid_argument("train_svm: bad input");
    if (params.c <= 0.0) throw std::invalid_argument("train_svm: c must be > 0");
    std::vector<int> signs(labels.size());
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        signs[i] = labels[i] == 1 ? 1 : -1;
        (signs[i] == 1 ? pos : neg) = true;
    }
    if (!pos || !neg) throw std::invalid_argument("train_svm: degenerate labels (single class)");

    detail::SmoSolver solver(rows, signs, params, kernel);
    solver.solve();
    return solver.model();
}

inline SvmModel train_svm(const FeatureMatrix& fm, const SvmParams& params = {},
                          const KernelParams& kernel = {}) {
    return train_svm(fm.rows, fm.labels, params, kernel);
}

inline double decision_value(const SvmModel& m, std::span<const double> x) { return m.decision_value(x); }

// Half-width of the separating band: 1/||w||, with ||w||^2 expanded over the
// support vectors.
inline double svm_margin(const SvmModel& m) {
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < m.alpha.size(); ++i) {
        for (std::size_t j = 0; j < m.alpha.size(); ++j) {
            norm_sq += m.alpha[i] * m.alpha[j] * m.y[i] * m.y[j] *
                       poly_kernel(m.support_vectors[i], m.support_vectors[j], m.kernel);
        }
    }
    if (norm_sq <= 0.0) throw std::runtime_error("svm_margin: zero weight vector");
    return 1.0 / std::sqrt(norm_sq);
}

// Hinge slacks xi_i = max(0, 1 - y_i D(x_i)) for a set of labelled rows.
inline std::vector<double> slack_values(const SvmModel& m, const std::vector<std::vector<double>>& rows,
                                        const std::vector<int>& labels) {
    if (rows.size() != labels.size()) throw std::invalid_argument("slack_values: rows/labels mismatch");
    std::vector<double> xi(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double y = labels[i] == 1 ? 1.0 : -1.0;
        xi[i] = std::max(0.0, 1.0 - y * m.decision_value(rows[i]));
    }
    return xi;
}

inline double svm_primal_objective(const SvmModel& m, const std::vector<std::vector<double>>& rows,
                                   const std::vector<int>& labels, const SvmParams& params) {
    double slack_sum = 0.0;
    for (double xi : slack_values(m, rows, labels)) slack_sum += xi;
    double margin = svm_margin(m);
    return params.c * slack_sum + 0.5 / (margin * margin);
}

struct KktReport {
    std::vector<double> residuals;  // per-sample violation beyond the exact KKT case split
    double max_residual = 0.0;
    double sum_alpha_y = 0.0;
};

// Residuals: alpha=0 wants yD >= 1, 0
// < alpha < C wants yD == 1, alpha=C wants yD <= 1; each entry is the amount
// by which its case is violated (0 when satisfied exactly).
inline KktReport kkt_report(const SvmModel& m, const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& labels, const SvmParams& params) {
    if (rows.size() != labels.size()) throw std::invalid_argument("kkt_report: rows/labels mismatch");
    std::vector<double> alphas(rows.size(), 0.0);
    for (std::size_t k = 0; k < m.sv_index.size(); ++k) {
        if (m.sv_index[k] < alphas.size()) alphas[m.sv_index[k]] = m.alpha[k];
    }
    KktReport rep;
    rep.residuals.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double y = labels[i] == 1 ? 1.0 : -1.0;
        double yd = y * m.decision_value(rows[i]);
        double a = alphas[i];
        double res;
        if (a <= 0.0) {
            res = std::max(0.0, 1.0 - yd);
        } else if (a >= params.c) {
            res = std::max(0.0, yd - 1.0);
        } else {
            res = std::fabs(yd - 1.0);
        }
        rep.residuals[i] = res;
        rep.max_residual = std::max(rep.max_residual, res);
    }
    rep.sum_alpha_y = m.sum_alpha_y();
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json svm_to_json(const SvmModel& m) {
    nlohmann::json j;
    j["format"] = "masskit/svm";
    j["version"] = 1;
    j["support_vectors"] = m.support_vectors;
    j["alpha"] = m.alpha;
    j["y"] = m.y;
    j["sv_index"] = m.sv_index;
    j["bias"] = m.bias;
    j["kernel"] = {{"gamma", m.kernel.gamma}, {"coef_r", m.kernel.coef_r}, {"degree", m.kernel.degree}};
    j["converged"] = m.converged;
    j["dual_objective"] = m.dual_objective;
    j["dual_trace"] = m.dual_trace;
    return j;
}

inline SvmModel svm_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "masskit/svm") throw std::runtime_error("not an svm model file");
    SvmModel m;
    m.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    m.alpha = j.at("alpha").get<std::vector<double>>();
    m.y = j.at("y").get<std::vector<int>>();
    m.sv_index = j.at("sv_index").get<std::vector<std::size_t>>();
    m.bias = j.at("bias").get<double>();
    m.kernel.gamma = j.at("kernel").at("gamma").get<double>();
    m.kernel.coef_r = j.at("kernel").at("coef_r").get<double>();
    m.kernel.degree = j.at("kernel").at("degree").get<int>();
    m.converged = j.at("converged").get<bool>();
    m.dual_objective = j.at("dual_objective").get<double>();
    m.dual_trace = j.at("dual_trace").get<std::vector<double>>();
    if (m.alpha.size() != m.support_vectors.size() || m.y.size() != m.alpha.size()) {
        throw std::runtime_error("svm model file: shape mismatch");
    }
    return m;
}

}  // namespace masskit
