#pragma once
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace reldiff {

// Adaptive Gauss-Kronrod on [lo, hi], evaluated on the unit interval so the error
// floor scales with the width (boost's does not, which stalls on short intervals).
template <unsigned N = 31, class F>
double integrate_gk(F f, double lo, double hi, unsigned depth = 15, double tol = 1e-13) {
  if (lo == hi) return 0.0;
  const double w = hi - lo;
  return boost::math::quadrature::gauss_kronrod<double, N>::integrate([&](double u) { return w * f(lo + w * u); },
                                                                      0.0, 1.0, depth, tol);
}

}  // namespace reldiff
