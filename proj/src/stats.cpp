#include "latwalk/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include "latwalk/error.hpp"

namespace latwalk {

void RunningStats::merge(const RunningStats& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double delta = other.mean_ - mean_;
    const double total = na + nb;
    mean_ += delta * nb / total;
    m2_ += other.m2_ + delta * delta * na * nb / total;
    n_ += other.n_;
}

double chi_square_survival(double x, int dof) {
    if (dof <= 0) return 1.0;
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                               double min_expected) {
    if (observed.size() != expected.size())
        throw Error(ErrorKind::Dimension, "chi_square_gof: size mismatch");
    ChiSquareResult r;
    double pooled_obs = 0.0;
    double pooled_exp = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] < min_expected) {
            pooled_obs += observed[i];
            pooled_exp += expected[i];
            continue;
        }
        const double d = observed[i] - expected[i];
        r.statistic += d * d / expected[i];
        ++cells;
    }
    if (pooled_exp > 0.0) {
        const double d = pooled_obs - pooled_exp;
        r.statistic += d * d / pooled_exp;
        ++cells;
    } else if (pooled_obs > 0.0) {
        // observations in cells of zero expected mass
        r.statistic = INFINITY;
    }
    r.dof = cells - 1;
    r.p_value = std::isfinite(r.statistic) ? chi_square_survival(r.statistic, r.dof) : 0.0;
    return r;
}

ChiSquareResult chi_square_independence(std::span<const double> table, std::size_t rows,
                                        std::size_t cols) {
    if (table.size() != rows * cols)
        throw Error(ErrorKind::Dimension, "chi_square_independence: bad table shape");
    std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            row_sum[i] += table[i * cols + j];
            col_sum[j] += table[i * cols + j];
            total += table[i * cols + j];
        }
    ChiSquareResult r;
    if (total <= 0.0) return r;
    int live_rows = 0, live_cols = 0;
    for (double s : row_sum) live_rows += s > 0.0;
    for (double s : col_sum) live_cols += s > 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        if (row_sum[i] <= 0.0) continue;
        for (std::size_t j = 0; j < cols; ++j) {
            if (col_sum[j] <= 0.0) continue;
            const double e = row_sum[i] * col_sum[j] / total;
            const double d = table[i * cols + j] - e;
            r.statistic += d * d / e;
        }
    }
    r.dof = (live_rows - 1) * (live_cols - 1);
    r.p_value = chi_square_survival(r.statistic, r.dof);
    return r;
}

double autocorrelation(std::span<const double> xs, std::size_t lag) {
    const std::size_t n = xs.size();
    if (n <= lag + 1) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        den += (xs[i] - mean) * (xs[i] - mean);
        if (i + lag < n) num += (xs[i] - mean) * (xs[i + lag] - mean);
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace latwalk
