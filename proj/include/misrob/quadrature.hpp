#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "misrob/errors.hpp"

namespace misrob {

struct QuadOptions {
    double rel_tol = 1e-12;
    double abs_tol = 1e-13;
    int max_depth = 15;
};

// Adaptive Gauss-Kronrod on [a, b]; throws QuadratureError when the error
// estimate fails to meet the tolerance.
template <typename F>
double integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
    double err = 0.0;
    const double val = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, opt.max_depth, opt.rel_tol, &err);
    if (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(val)) * 100.0)
        throw QuadratureError("quadrature did not converge");
    return val;
}

// Integrate across known breakpoints of a piecewise-smooth integrand.
// Breakpoints outside (a, b) are ignored.
template <typename F>
double integrate_piecewise(F&& f, double a, double b, std::vector<double> breaks,
                           const QuadOptions& opt = {}) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = std::clamp(breaks[i], a, b);
        const double hi = std::clamp(breaks[i + 1], a, b);
        if (hi > lo) total += integrate(f, lo, hi, opt);
    }
    return total;
}

}  // namespace misrob
