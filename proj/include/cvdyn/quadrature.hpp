// quadrature.hpp - Globally adaptive Gauss-Kronrod integration on finite intervals

#pragma once

#include <cstddef>
#include <functional>

namespace cvdyn::quadrature {

struct Options {
    double abs_tol = 1e-12;
    double rel_tol = 1e-8;
    std::size_t initial_panels = 1;  // pre-split, e.g. one panel per half oscillation
    std::size_t max_intervals = 400000;
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    std::size_t intervals = 0;
};

/// Integrates f over [a, b] with a 21-point Kronrod rule, always bisecting the
/// interval with the largest error estimate, until the summed error is at most
/// max(abs_tol, rel_tol * |value|). Throws kNumericalFailure when the interval
/// budget runs out first.
Result integrate(const std::function<double(double)>& f, double a, double b, const Options& opts = {});

/// Composite trapezoid rule on `n` uniform cells; used as a brute-force check.
double trapezoid(const std::function<double(double)>& f, double a, double b, std::size_t n);

}  // namespace cvdyn::quadrature
