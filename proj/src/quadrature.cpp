#include "voldens/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace voldens::quad {

namespace {

// 16-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGlNode[8] = {
    0.0950125098376374402, 0.2816035507792589132, 0.4580167776572273863,
    0.6178762444026437484, 0.7554044083550030339, 0.8656312023878317439,
    0.9445750230732325761, 0.9894009349916499326,
};
constexpr double kGlWeight[8] = {
    0.1894506104550684963, 0.1826034150449235889, 0.1691565193950025382,
    0.1495959888165767320, 0.1246289712555338721, 0.0951585116824927848,
    0.0622535239386478929, 0.0271524594117540949,
};

template <typename T>
T simpson_adapt(const std::function<T(double)>& f, double a, double m, double b,
                T fa, T fm, T fb, T whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const T flm = f(lm);
  const T frm = f(rm);
  const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const T delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_adapt(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_adapt(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename T>
T simpson_run(const std::function<T(double)>& f, double a, double b, double abs_tol,
              int max_depth) {
  if (!(b > a)) throw std::invalid_argument("adaptive_simpson: requires b > a");
  if (!(abs_tol > 0.0)) throw std::invalid_argument("adaptive_simpson: requires abs_tol > 0");
  const double m = 0.5 * (a + b);
  const T fa = f(a), fm = f(m), fb = f(b);
  const T whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_adapt(f, a, m, b, fa, fm, fb, whole, abs_tol, max_depth);
}

double gauss16(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 8; ++i) {
    sum += kGlWeight[i] * (f(c - r * kGlNode[i]) + f(c + r * kGlNode[i]));
  }
  return r * sum;
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth) {
  return simpson_run<double>(f, a, b, abs_tol, max_depth);
}

std::complex<double> adaptive_simpson(const std::function<std::complex<double>(double)>& f,
                                      double a, double b, double abs_tol, int max_depth) {
  return simpson_run<std::complex<double>>(f, a, b, abs_tol, max_depth);
}

double gauss_panels(const std::function<double(double)>& f, double a, double b,
                    double panel_width) {
  if (!(b > a)) throw std::invalid_argument("gauss_panels: requires b > a");
  if (!(panel_width > 0.0)) throw std::invalid_argument("gauss_panels: requires panel_width > 0");
  const long long n = std::max(1LL, static_cast<long long>(std::ceil((b - a) / panel_width)));
  const double w = (b - a) / static_cast<double>(n);
  double sum = 0.0;
  for (long long i = 0; i < n; ++i) {
    sum += gauss16(f, a + i * w, a + (i + 1) * w);
  }
  return sum;
}

double integrate_abs(const std::function<double(double)>& f, double a, double b,
                     double scan_step) {
  if (!(b > a)) throw std::invalid_argument("integrate_abs: requires b > a");
  if (!(scan_step > 0.0)) throw std::invalid_argument("integrate_abs: requires scan_step > 0");
  std::vector<double> cuts;
  cuts.push_back(a);
  double x0 = a;
  double f0 = f(a);
  while (x0 < b) {
    const double x1 = std::min(x0 + scan_step, b);
    const double f1 = f(x1);
    if ((f0 < 0.0) != (f1 < 0.0)) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = f(mid);
        if ((flo < 0.0) != (fmid < 0.0)) {
          hi = mid;
        } else {
          lo = mid;
          flo = fmid;
        }
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  cuts.push_back(b);
  double total = 0.0;
  auto absf = [&f](double x) { return std::abs(f(x)); };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) {
      total += gauss_panels(absf, cuts[i], cuts[i + 1], 0.5);
    }
  }
  return total;
}

}  // namespace voldens::quad
