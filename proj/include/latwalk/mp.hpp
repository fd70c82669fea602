#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include "latwalk/linalg.hpp"

namespace latwalk {

/// Extended-precision real (about 300 decimal digits) for long flows and
/// continued-fraction digits, where double precision is exhausted.
using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<300>, boost::multiprecision::et_off>;
using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

/// Exact: every double is representable.
inline MatR to_real(const Mat& m) { return m.cast<Real>(); }

inline Mat to_double(const MatR& m) {
    Mat out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = static_cast<double>(m(i, j));
    return out;
}

/// Parses a decimal string, or the keyword "golden" for (sqrt 5 - 1)/2.
Real parse_real(const std::string& text);

inline Real golden_ratio_conjugate() { return (boost::multiprecision::sqrt(Real(5)) - 1) / 2; }

}  // namespace latwalk
