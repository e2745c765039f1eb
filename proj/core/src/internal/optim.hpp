#pragma once

#include <cmath>
#include <limits>
#include <utility>

namespace ambig::detail {

// Golden-section minimization on [lo, hi] to absolute tolerance tol in x.
// Comparison-based, so the iterate sequence is invariant under additive
// shifts of f.
template <class F>
std::pair<double, double> golden_min(F&& f, double lo, double hi, double tol) {
  static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? std::pair<double, double>{c, fc} : std::pair<double, double>{d, fd};
}

struct LineResult {
  double x = 0.0;
  double score = std::numeric_limits<double>::infinity();
  bool at_lower = false;
  bool at_upper = false;
};

// Coarse grid scan followed by golden-section refinement around the best
// grid point (half-width `halfwidth`, clipped to the bounds).
template <class F>
LineResult scan_refine(F&& f, double lo, double hi, int npts, double halfwidth, double tol) {
  LineResult r;
  for (int i = 0; i < npts; ++i) {
    double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(npts - 1);
    double s = f(x);
    if (s < r.score) {
      r.score = s;
      r.x = x;
    }
  }
  double a = std::max(lo, r.x - halfwidth);
  double b = std::min(hi, r.x + halfwidth);
  auto [x, s] = golden_min(f, a, b, tol);
  if (s < r.score) {
    r.score = s;
    r.x = x;
  }
  r.at_lower = r.x <= lo + 2.0 * tol;
  r.at_upper = r.x >= hi - 2.0 * tol;
  return r;
}

}  // namespace ambig::detail
