#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace masskit {

namespace detail {

// Regularized lower incomplete gamma P(a,x) by series expansion; converges
// fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
    const double gln = std::lgamma(a);
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
}

// Regularized upper incomplete gamma Q(a,x) by Lentz continued fraction;
// converges fast for x >= a + 1.
inline double gamma_q_cf(double a, double x) {
    const double gln = std::lgamma(a);
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace detail

// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a).
inline double regularized_gamma_q(double a, double x) {
    if (a <= 0.0) throw std::invalid_argument("regularized_gamma_q: a must be > 0");
    if (x < 0.0) throw std::invalid_argument("regularized_gamma_q: x must be >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

// Upper-tail chi-squared probability Pr(X > stat) with dof degrees of freedom.
inline double chi2_pvalue(double stat, int dof) {
    if (stat < 0.0) throw std::invalid_argument("chi2_pvalue: statistic must be >= 0");
    if (dof < 1) throw std::invalid_argument("chi2_pvalue: dof must be >= 1");
    return regularized_gamma_q(0.5 * dof, 0.5 * stat);
}

// Two-way contingency table. Zero rows/columns contribute nothing to the
// statistic and are dropped on construction so the degrees of freedom stay
// honest; a table left with fewer than two rows or columns is degenerate.
class ContingencyTable {
public:
    static ContingencyTable from_counts(const std::vector<std::vector<double>>& observed) {
        ContingencyTable t;
        if (observed.empty() || observed[0].empty()) throw std::invalid_argument("empty contingency table");
        const std::size_t ncols = observed[0].size();
        for (const auto& row : observed) {
            if (row.size() != ncols) throw std::invalid_argument("ragged contingency table");
            for (double v : row) {
                if (v < 0.0) throw std::invalid_argument("negative cell count");
            }
        }
        std::vector<double> colsum(ncols, 0.0);
        for (const auto& row : observed) {
            for (std::size_t j = 0; j < ncols; ++j) colsum[j] += row[j];
        }
        for (std::size_t i = 0; i < observed.size(); ++i) {
            double rowsum = 0.0;
            for (double v : observed[i]) rowsum += v;
            if (rowsum == 0.0) continue;
            std::vector<double> kept;
            for (std::size_t j = 0; j < ncols; ++j) {
                if (colsum[j] > 0.0) kept.push_back(observed[i][j]);
            }
            t.observed_.push_back(std::move(kept));
            t.row_totals_.push_back(rowsum);
        }
        if (t.observed_.empty()) throw std::invalid_argument("all-zero contingency table");
        const std::size_t kept_cols = t.observed_[0].size();
        t.col_totals_.assign(kept_cols, 0.0);
        t.grand_total_ = 0.0;
        for (std::size_t i = 0; i < t.observed_.size(); ++i) {
            for (std::size_t j = 0; j < kept_cols; ++j) t.col_totals_[j] += t.observed_[i][j];
            t.grand_total_ += t.row_totals_[i];
        }
        return t;
    }

    std::size_t rows() const { return observed_.size(); }
    std::size_t cols() const { return observed_.empty() ? 0 : observed_[0].size(); }
    bool degenerate() const { return rows() < 2 || cols() < 2; }

    int dof() const { return static_cast<int>((rows() - 1) * (cols() - 1)); }

    double expected(std::size_t i, std::size_t j) const {
        return row_totals_[i] * col_totals_[j] / grand_total_;
    }

    double observed(std::size_t i, std::size_t j) const { return observed_[i][j]; }

private:
    std::vector<std::vector<double>> observed_;
    std::vector<double> row_totals_, col_totals_;
    double grand_total_ = 0.0;
};

// Likelihood-ratio statistic 2 * sum n_ij * ln(n_ij / expected_ij), with the
// convention 0 * ln(0/m) = 0. Chi-squared distributed with table.dof()
// degrees of freedom under independence.
inline double g2_statistic(const ContingencyTable& t) {
    if (t.degenerate()) throw std::invalid_argument("degenerate contingency table");
    double g2 = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) {
            double n = t.observed(i, j);
            if (n > 0.0) g2 += n * std::log(n / t.expected(i, j));
        }
    }
    g2 *= 2.0;
    return g2 < 0.0 ? 0.0 : g2;  // clamp fp residue on independent tables
}

}  // namespace masskit
