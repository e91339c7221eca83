#pragma once

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace wmk {

// Adaptive quadrature on [a,b]; tanh-sinh handles the integrable endpoint
// singularities (r^{alpha-1}, log r) that show up in the pivot densities.
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-10) {
    boost::math::quadrature::tanh_sinh<double> quad;
    return quad.integrate(std::forward<F>(f), a, b, tol);
}

} // namespace wmk
