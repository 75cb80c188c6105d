#include "voldens/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "voldens/quadrature.hpp"

namespace voldens::kernels {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSupBound = 1.0 / (2.0 * kPi);
constexpr double kSeriesSwitch = 0.5;

// Coefficients of w(x) = (1/pi) sum_m c_m x^{2m} for |x| < kSeriesSwitch,
// from termwise integration of (1/pi) int_0^1 (1-u^2)^3 cos(ux) du:
//   c_0 = 3 / ((1/2)(3/2)(5/2)(7/2)),
//   c_m = -c_{m-1} (m - 1/2) / ((m + 7/2) (2m - 1) (2m)).
std::array<double, 14> wand_series_coeffs() {
  std::array<double, 14> c{};
  c[0] = 3.0 / (0.5 * 1.5 * 2.5 * 3.5);
  for (std::size_t m = 1; m < c.size(); ++m) {
    const double dm = static_cast<double>(m);
    c[m] = -c[m - 1] * (dm - 0.5) / ((dm + 3.5) * (2.0 * dm - 1.0) * (2.0 * dm));
  }
  return c;
}

double wand_w(double x) {
  const double x2 = x * x;
  if (std::abs(x) < kSeriesSwitch) {
    static const std::array<double, 14> c = wand_series_coeffs();
    double sum = 0.0;
    for (std::size_t m = c.size(); m-- > 0;) {
      sum = sum * x2 + c[m];
    }
    return sum / kPi;
  }
  const double num = 48.0 * x * (x2 - 15.0) * std::cos(x) - 144.0 * (2.0 * x2 - 5.0) * std::sin(x);
  const double x7 = x2 * x2 * x2 * x;
  return num / (kPi * x7);
}

double wand_phi_w(double t) {
  const double t2 = t * t;
  if (t2 >= 1.0) return 0.0;
  const double u = 1.0 - t2;
  return u * u * u;
}

}  // namespace

KernelSpec wand_kernel() {
  KernelSpec k;
  k.alpha = 3.0;
  k.big_a = 8.0;
  k.eval_w = wand_w;
  k.eval_phi_w = wand_phi_w;
  k.name = "wand";
  return k;
}

ConditionWReport check_condition_w(const KernelSpec& k, double quad_tolerance) {
  if (!(quad_tolerance > 0.0)) {
    throw std::invalid_argument("check_condition_w: requires quad_tolerance > 0");
  }
  const double T = 1e4;
  ConditionWReport rep;

  rep.integral_w = quad::gauss_panels(k.eval_w, -T, T, 0.5);
  rep.integral_abs_w = quad::integrate_abs(k.eval_w, -T, T, 0.25);
  rep.second_moment =
      quad::gauss_panels([&k](double u) { return u * u * k.eval_w(u); }, -T, T, 0.5);

  rep.integrable_ok = std::isfinite(rep.integral_abs_w) && rep.integral_abs_w < 100.0;
  // Item 2 cross-checked against phi_w(0) = int w; a kernel whose transform
  // does not hit exactly 1 at the origin fails regardless of the quadrature.
  rep.unit_integral_ok = std::abs(rep.integral_w - 1.0) <= std::max(quad_tolerance, 1e-6) &&
                         std::abs(k.eval_phi_w(0.0) - 1.0) <= 1e-12;

  // Item 3: compare against -phi_w''(0) by a central second difference.
  {
    const double d = 1e-4;
    const double m2_spectral =
        -(k.eval_phi_w(d) - 2.0 * k.eval_phi_w(0.0) + k.eval_phi_w(-d)) / (d * d);
    rep.second_moment_ok = std::isfinite(rep.second_moment) &&
                           std::abs(rep.second_moment - m2_spectral) <= 1e-3;
  }

  // Item 4 via envelope maxima: w oscillates, so compare window maxima,
  // not pointwise values.
  {
    auto window_max = [&k](double center) {
      double m = 0.0;
      for (double x = 0.9 * center; x <= 1.1 * center; x += center * 1e-3) {
        m = std::max(m, std::abs(k.eval_w(x)));
      }
      return m;
    };
    const double m2c = window_max(1e2);
    const double m3c = window_max(1e3);
    const double m4c = window_max(1e4);
    rep.vanishes_at_infinity_ok = m3c < m2c && m4c < m3c && m4c < 1e-9;
  }

  {
    double sup = 0.0;
    double sup_deriv = 0.0;
    const double d = 1e-5;
    for (double x = 0.0; x <= 60.0; x += 0.005) {
      sup = std::max(sup, std::abs(k.eval_w(x)));
      sup_deriv = std::max(sup_deriv, std::abs(k.eval_w(x + d) - k.eval_w(x - d)) / (2.0 * d));
    }
    rep.sup_w_bound_ok = sup <= kSupBound + 1e-12;
    rep.lipschitz_bound_ok = sup_deriv <= kSupBound * (1.0 + 1e-6);
  }

  {
    bool ok = true;
    for (double t : {1.0 + 1e-12, 1.01, 1.5, 2.0, 5.0, 100.0}) {
      ok = ok && k.eval_phi_w(t) == 0.0 && k.eval_phi_w(-t) == 0.0;
    }
    rep.support_ok = ok;
  }

  // Item 6: log-log regression of phi_w(1 - t) against t on [1e-3, 1e-1].
  {
    const int n = 41;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double l0 = std::log(1e-3), l1 = std::log(1e-1);
    for (int i = 0; i < n; ++i) {
      const double lt = l0 + (l1 - l0) * i / (n - 1);
      const double y = std::log(k.eval_phi_w(1.0 - std::exp(lt)));
      sx += lt;
      sy += y;
      sxx += lt * lt;
      sxy += lt * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    rep.boundary_fit_alpha = slope;
    rep.boundary_fit_big_a = std::exp(intercept);
    rep.boundary_fit_ok = std::abs(slope - k.alpha) <= 0.05 * k.alpha;
  }

  return rep;
}

double product_kernel_eval(const KernelSpec& k, const std::vector<double>& xs, int p) {
  if (p < 1) throw std::invalid_argument("product_kernel_eval: requires p >= 1");
  if (xs.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument("product_kernel_eval: xs must have length p");
  }
  double prod = 1.0;
  for (double x : xs) prod *= k.eval_w(x);
  return prod;
}

}  // namespace voldens::kernels
