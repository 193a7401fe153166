#pragma once

// Slow reference implementations used to check the optimized cores. Nothing
// here calls into the kernels or solver cores: least squares is done from
// scratch with Householder QR every time.

#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>
#include <batchomp/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace batchomp::oracle {

struct OracleReport {
    std::vector<std::size_t> support;
    std::vector<double> coefficients; ///< length N
    double residual_norm = 0.0;
    double objective = 0.0; ///< ||A x - y||
    StopFlag flag = StopFlag::completed;
    /// ||r_k|| for k = 0..iterations.
    std::vector<double> residual_history;
    /// Smallest relative gap between the best and runner-up normalized
    /// correlation over all selections (1 when nothing was selected).
    double min_selection_gap = 1.0;
};

struct LeastSquares {
    std::vector<double> x;
    double residual_norm = 0.0;
};

/// min ||A_cols x - y|| by Householder QR. Empty when a column is
/// numerically dependent on the ones before it.
inline std::optional<LeastSquares> least_squares(const DenseMatrix& dict,
                                                 std::span<const std::size_t> cols,
                                                 std::span<const double> y) {
    const std::size_t m = dict.rows();
    const std::size_t k = cols.size();
    if (k > m)
        return std::nullopt;
    // Working copy, column-major m x k, and the right-hand side.
    std::vector<double> q(m * k);
    std::vector<double> col_norm_sq(k, 0.0);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < m; ++i) {
            q[j * m + i] = dict(i, cols[j]);
            col_norm_sq[j] += q[j * m + i] * q[j * m + i];
        }
    std::vector<double> b(y.begin(), y.end());
    std::vector<double> diag(k);

    for (std::size_t j = 0; j < k; ++j) {
        double* v = &q[j * m];
        double sigma = 0.0;
        for (std::size_t i = j; i < m; ++i)
            sigma += v[i] * v[i];
        if (!(sigma > 1e-12 * col_norm_sq[j]))
            return std::nullopt;
        const double alpha = v[j] > 0 ? -std::sqrt(sigma) : std::sqrt(sigma);
        diag[j] = alpha;
        v[j] -= alpha;
        double vnorm_sq = 0.0;
        for (std::size_t i = j; i < m; ++i)
            vnorm_sq += v[i] * v[i];
        // Apply H = I - 2 v v^T / (v^T v) to the remaining columns and to b.
        for (std::size_t c = j + 1; c < k; ++c) {
            double* w = &q[c * m];
            double s = 0.0;
            for (std::size_t i = j; i < m; ++i)
                s += v[i] * w[i];
            s = 2.0 * s / vnorm_sq;
            for (std::size_t i = j; i < m; ++i)
                w[i] -= s * v[i];
        }
        double s = 0.0;
        for (std::size_t i = j; i < m; ++i)
            s += v[i] * b[i];
        s = 2.0 * s / vnorm_sq;
        for (std::size_t i = j; i < m; ++i)
            b[i] -= s * v[i];
    }

    LeastSquares out;
    out.x.assign(k, 0.0);
    for (std::size_t j = k; j-- > 0;) {
        double s = b[j];
        for (std::size_t c = j + 1; c < k; ++c)
            s -= q[c * m + j] * out.x[c];
        out.x[j] = s / diag[j];
    }
    // Residual formed directly rather than from the tail of Q^T b.
    double rr = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double r = y[i];
        for (std::size_t j = 0; j < k; ++j)
            r -= dict(i, cols[j]) * out.x[j];
        rr += r * r;
    }
    out.residual_norm = std::sqrt(rr);
    return out;
}

/// Textbook OMP. Selection uses |<r, a_n>| / ||a_n|| on the dictionary as
/// given, so no normalization step is involved. Ties go to the lowest index.
inline OracleReport omp_reference(const DenseMatrix& dict, std::span<const double> y,
                                  std::size_t sparsity,
                                  std::optional<double> tolerance = std::nullopt) {
    const std::size_t m = dict.rows();
    const std::size_t n = dict.cols();
    if (y.size() != m)
        throw InputError("measurement length does not match dictionary rows");
    if (sparsity < 1 || sparsity > m)
        throw InputError("sparsity must be in [1, M]");

    std::vector<double> norms(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t a = 0; a < n; ++a)
            norms[a] += dict(i, a) * dict(i, a);
    for (std::size_t a = 0; a < n; ++a) {
        if (!(norms[a] > 0.0))
            throw InputError("dictionary column " + std::to_string(a) + " is zero");
        norms[a] = std::sqrt(norms[a]);
    }

    double y_norm = 0.0;
    for (double v : y)
        y_norm += v * v;
    y_norm = std::sqrt(y_norm);

    OracleReport rep;
    rep.coefficients.assign(n, 0.0);
    std::vector<double> r(y.begin(), y.end());
    std::vector<double> x;
    double r_norm = y_norm;
    rep.residual_history.push_back(r_norm);

    while (true) {
        if (tolerance && r_norm <= *tolerance) {
            rep.flag = StopFlag::tol_reached;
            break;
        }
        if (r_norm <= 1e-13 * y_norm) {
            rep.flag = StopFlag::tol_reached;
            break;
        }
        if (rep.support.size() == sparsity) {
            rep.flag = StopFlag::completed;
            break;
        }

        std::vector<double> corr(n, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t a = 0; a < n; ++a)
                corr[a] += dict(i, a) * r[i];
        std::size_t best = 0;
        double best_val = -1.0;
        for (std::size_t a = 0; a < n; ++a) {
            const double c = std::fabs(corr[a]) / norms[a];
            if (std::isnan(c))
                throw NumericalError("NaN correlation in reference OMP");
            if (c > best_val) {
                best_val = c;
                best = a;
            }
        }
        double runner_up = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            if (a != best)
                runner_up = std::max(runner_up, std::fabs(corr[a]) / norms[a]);
        const double gap = best_val > 0.0 ? (best_val - runner_up) / best_val : 0.0;

        bool duplicate = false;
        for (std::size_t s : rep.support)
            duplicate = duplicate || s == best;
        if (duplicate) {
            rep.flag = StopFlag::degenerate;
            break;
        }
        std::vector<std::size_t> trial = rep.support;
        trial.push_back(best);
        const auto ls = least_squares(dict, trial, y);
        if (!ls) {
            rep.flag = StopFlag::degenerate;
            break;
        }
        rep.min_selection_gap = std::min(rep.min_selection_gap, gap);
        rep.support = std::move(trial);
        x = ls->x;
        for (std::size_t i = 0; i < m; ++i) {
            double v = y[i];
            for (std::size_t j = 0; j < x.size(); ++j)
                v -= dict(i, rep.support[j]) * x[j];
            r[i] = v;
        }
        r_norm = ls->residual_norm;
        rep.residual_history.push_back(r_norm);
    }

    for (std::size_t j = 0; j < rep.support.size(); ++j)
        rep.coefficients[rep.support[j]] = x[j];
    rep.residual_norm = r_norm;
    rep.objective = r_norm;
    return rep;
}

/// C(n, k), saturating at the largest representable value.
inline double binomial(std::size_t n, std::size_t k) {
    if (k > n)
        return 0.0;
    double c = 1.0;
    for (std::size_t i = 1; i <= k; ++i)
        c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    return c;
}

inline constexpr double kExhaustiveBudget = 1e6;

/// Best size-S support by enumeration. Ties keep the lexicographically
/// smallest support.
inline OracleReport exhaustive_best_support(const DenseMatrix& dict, std::span<const double> y,
                                            std::size_t sparsity) {
    const std::size_t n = dict.cols();
    if (y.size() != dict.rows())
        throw InputError("measurement length does not match dictionary rows");
    if (sparsity < 1 || sparsity > n || sparsity > dict.rows())
        throw InputError("sparsity must be in [1, min(M, N)]");
    const double count = binomial(n, sparsity);
    if (count > kExhaustiveBudget)
        throw BudgetError("exhaustive search over " + std::to_string(count) +
                          " supports exceeds the budget of " + std::to_string(kExhaustiveBudget));

    OracleReport best;
    best.objective = std::numeric_limits<double>::infinity();
    best.flag = StopFlag::degenerate;
    std::vector<double> best_x;

    std::vector<std::size_t> comb(sparsity);
    for (std::size_t i = 0; i < sparsity; ++i)
        comb[i] = i;
    while (true) {
        if (const auto ls = least_squares(dict, comb, y); ls && ls->residual_norm < best.objective) {
            best.objective = ls->residual_norm;
            best.support = comb;
            best_x = ls->x;
            best.flag = StopFlag::completed;
        }
        // Next combination in lexicographic order.
        std::size_t i = sparsity;
        while (i > 0 && comb[i - 1] == n - sparsity + i - 1)
            --i;
        if (i == 0)
            break;
        ++comb[i - 1];
        for (std::size_t j = i; j < sparsity; ++j)
            comb[j] = comb[j - 1] + 1;
    }

    best.coefficients.assign(n, 0.0);
    for (std::size_t j = 0; j < best.support.size(); ++j)
        best.coefficients[best.support[j]] = best_x[j];
    best.residual_norm = best.objective;
    return best;
}

} // namespace batchomp::oracle
