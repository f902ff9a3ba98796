#ifndef COALCLUST_MATHUTIL_HPP
#define COALCLUST_MATHUTIL_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace coalclust {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// Number of unordered pairs among m lineages, C(m,2) = m(m-1)/2.
inline double pairs_count(int m) { return 0.5 * m * (m - 1); }

double log_sum_exp(const std::vector<double>& values);
double log_sum_exp(double a, double b);

// log N(x; mean, var)
inline double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * M_PI * var) - d * d / (2.0 * var);
}

// Quadrature grid for integrals of the form int_0^inf exp(log_f(x)) dx.
// Nodes are graded geometrically near zero (the integrand may carry an
// integrable x^{-1/2} singularity there) and the grid doubles as the
// inverse-CDF support for sampling.
struct LogGrid {
  std::vector<double> nodes;          // segment boundaries, nodes[0] == lo
  std::vector<double> log_seg_mass;   // log mass per segment
  double log_total;                   // log of the full integral

  // Draw from the density proportional to the integrand: pick a segment by
  // mass, then linearly interpolate within it.
  double sample(double u01) const;
};

// Integrates exp(log_f) over [lo, hi] with `segments` panels, geometric
// grading controlled by `grading` (1.0 = uniform). 4-point Gauss-Legendre
// per panel.
LogGrid integrate_log_grid(const std::function<double(double)>& log_f,
                           double lo, double hi, int segments = 160,
                           double grading = 1.08);

// Adaptive composite Simpson on the log-integrand, in linear space with
// rescaling. Suitable for smooth, eventually-decaying integrands.
double integrate_log_adaptive(const std::function<double(double)>& log_f,
                              double lo, double hi, double rel_tol = 1e-9,
                              int max_depth = 28);

}  // namespace coalclust

#endif
