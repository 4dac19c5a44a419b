// Bracketing bisection
#pragma once

#include <cmath>
#include <stdexcept>

namespace spinblimp {

struct BisectionResult {
    double root = 0.0;
    int iterations = 0; ///< function evaluations after the two endpoints
};

/// Halve [lo, hi] until it is no wider than `tol`. Requires f(lo) and f(hi)
/// to differ in sign (or one of them to be zero); throws std::domain_error
/// otherwise. Takes at most ceil(log2((hi - lo) / tol)) iterations.
template <class F>
BisectionResult bisect(F &&f, double lo, double hi, double tol) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("bisect: need finite lo < hi");
    }
    if (!(tol > 0.0)) {
        throw std::invalid_argument("bisect: tol must be > 0");
    }
    double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo == 0.0) {
        return {lo, 0};
    }
    if (f_hi == 0.0) {
        return {hi, 0};
    }
    if (std::signbit(f_lo) == std::signbit(f_hi)) {
        throw std::domain_error("bisect: no sign change in bracket");
    }
    int iterations = 0;
    while (hi - lo > tol) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) {
            break; // bracket is down to adjacent doubles
        }
        const double f_mid = f(mid);
        ++iterations;
        if (f_mid == 0.0) {
            return {mid, iterations};
        }
        if (std::signbit(f_mid) == std::signbit(f_lo)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return {lo + 0.5 * (hi - lo), iterations};
}

} // namespace spinblimp
