#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace latwalk {

/// Mergeable running mean / variance (Chan et al. pairwise update).
class RunningStats {
public:
    void push(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    void merge(const RunningStats& other);

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stddev() const { return std::sqrt(variance()); }
    double std_error() const {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Kahan-Babuska compensated sum in long double.
class CompensatedSum {
public:
    void add(long double x) {
        const long double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    long double value() const { return sum_ + comp_; }

private:
    long double sum_ = 0.0L;
    long double comp_ = 0.0L;
};

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Upper tail P(X >= x) of a chi-square variable with `dof` degrees of freedom.
double chi_square_survival(double x, int dof);

/// Goodness of fit of observed counts against expected counts. Cells whose
/// expected count is below `min_expected` are pooled into one cell.
ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                               double min_expected = 5.0);

/// Pearson independence test on an r x c contingency table (row-major).
/// All-zero rows and columns are dropped before counting degrees of freedom.
ChiSquareResult chi_square_independence(std::span<const double> table, std::size_t rows,
                                        std::size_t cols);

/// Lag-`lag` sample autocorrelation.
double autocorrelation(std::span<const double> xs, std::size_t lag = 1);

}  // namespace latwalk
