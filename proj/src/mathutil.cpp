#include "coalclust/mathutil.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "coalclust/error.hpp"

namespace coalclust {

double log_sum_exp(const std::vector<double>& values) {
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

namespace {

// 4-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 4> kGlNode = {-0.8611363115940526, -0.3399810435848563,
                                           0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kGlWeight = {0.3478548451374538, 0.6521451548625461,
                                             0.6521451548625461, 0.3478548451374538};

double segment_log_mass(const std::function<double(double)>& log_f, double a,
                        double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  std::vector<double> terms(4);
  for (int k = 0; k < 4; ++k) {
    terms[k] = log_f(mid + half * kGlNode[k]) + std::log(kGlWeight[k] * half);
  }
  return log_sum_exp(terms);
}

}  // namespace

double LogGrid::sample(double u01) const {
  // Segment by cumulative mass, then linear within the segment.
  std::vector<double> cum(log_seg_mass.size());
  double acc = kNegInf;
  for (std::size_t i = 0; i < log_seg_mass.size(); ++i) {
    acc = log_sum_exp(acc, log_seg_mass[i]);
    cum[i] = acc;
  }
  const double target = log_total + std::log(std::max(u01, 1e-300));
  std::size_t seg = 0;
  while (seg + 1 < cum.size() && cum[seg] < target) ++seg;
  const double lo_mass = seg == 0 ? kNegInf : cum[seg - 1];
  const double seg_mass = log_seg_mass[seg];
  double frac = 0.5;
  if (seg_mass > kNegInf) {
    const double num = std::exp(target - seg_mass) -
                       (lo_mass == kNegInf ? 0.0 : std::exp(lo_mass - seg_mass));
    frac = std::clamp(num, 0.0, 1.0);
  }
  return nodes[seg] + frac * (nodes[seg + 1] - nodes[seg]);
}

LogGrid integrate_log_grid(const std::function<double(double)>& log_f, double lo,
                           double hi, int segments, double grading) {
  if (!(hi > lo)) fail(ErrorKind::argument, "integration bounds must satisfy hi > lo");
  LogGrid grid;
  grid.nodes.resize(segments + 1);
  // Geometric panel widths: width_i proportional to grading^i.
  double total = 0.0;
  double w = 1.0;
  for (int i = 0; i < segments; ++i) {
    total += w;
    w *= grading;
  }
  double x = lo;
  w = (hi - lo) / total;
  grid.nodes[0] = lo;
  for (int i = 0; i < segments; ++i) {
    x += w;
    grid.nodes[i + 1] = x;
    w *= grading;
  }
  grid.nodes[segments] = hi;
  grid.log_seg_mass.resize(segments);
  for (int i = 0; i < segments; ++i) {
    grid.log_seg_mass[i] = segment_log_mass(log_f, grid.nodes[i], grid.nodes[i + 1]);
  }
  grid.log_total = log_sum_exp(grid.log_seg_mass);
  return grid;
}

namespace {

struct SimpsonState {
  const std::function<double(double)>* log_f;
  double scale;  // subtract before exponentiating
  long evals = 0;
  long max_evals = 200000;

  double f(double x) {
    ++evals;
    const double v = (*log_f)(x) - scale;
    return v > -745.0 ? std::exp(v) : 0.0;
  }
};

double simpson_rec(SimpsonState& st, double a, double fa, double m, double fm,
                   double b, double fb, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = st.f(lm), frm = st.f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || st.evals > st.max_evals || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(st, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(st, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_log_adaptive(const std::function<double(double)>& log_f, double lo,
                              double hi, double rel_tol, int max_depth) {
  // Probe for a scale so the exponentials stay in range.
  double scale = kNegInf;
  const int probes = 64;
  for (int i = 0; i <= probes; ++i) {
    const double x = lo + (hi - lo) * i / probes;
    scale = std::max(scale, log_f(x));
  }
  if (scale == kNegInf) return kNegInf;
  SimpsonState st{&log_f, scale};
  // Split at the probe positions so narrow peaks are not missed.
  double acc = 0.0;
  const int coarse = 16;
  for (int i = 0; i < coarse; ++i) {
    const double a = lo + (hi - lo) * i / coarse;
    const double b = lo + (hi - lo) * (i + 1) / coarse;
    const double m = 0.5 * (a + b);
    const double fa = st.f(a), fm = st.f(m), fb = st.f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    acc += simpson_rec(st, a, fa, m, fm, b, fb, whole,
                       rel_tol * std::max(whole, 1e-12), max_depth);
  }
  if (acc <= 0.0) return kNegInf;
  return scale + std::log(acc);
}

}  // namespace coalclust
