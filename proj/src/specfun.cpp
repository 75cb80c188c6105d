#include "voldens/specfun.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace voldens::specfun {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfLog2Pi = 0.918938533204672742;  // log(2 pi) / 2
constexpr double kInvSqrt2Pi = 0.398942280401432678;

// Stirling series coefficients B_{2n} / (2n (2n - 1)), n = 1..10.
constexpr double kStirling[] = {
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
};

}  // namespace

std::complex<double> log_gamma_complex(std::complex<double> z) {
  if (!(z.real() > 0.0)) {
    throw std::domain_error("log_gamma_complex: requires re(z) > 0");
  }
  // Shift into |z| >= 10 where the Stirling series reaches double precision,
  // then undo the recurrence Gamma(z + 1) = z Gamma(z).
  std::complex<double> shift(0.0, 0.0);
  while (std::abs(z) < 10.0) {
    shift += std::log(z);
    z += 1.0;
  }
  std::complex<double> series(0.0, 0.0);
  const std::complex<double> rz2 = 1.0 / (z * z);
  std::complex<double> zpow = 1.0 / z;  // z^{-(2n - 1)}
  for (double c : kStirling) {
    series += c * zpow;
    zpow *= rz2;
  }
  return (z - 0.5) * std::log(z) - z + kHalfLog2Pi + series - shift;
}

std::complex<double> phi_k(double t) {
  if (t < 0.0) {
    return std::conj(phi_k(-t));
  }
  if (t > 200.0) {
    // Far outside the working range of the estimator (|s/h| <= 20); the
    // Stirling remainder is below rounding here anyway.
    const PhiKAsymptotics a = phi_k_asymptotic(t);
    const double mod = phi_k_modulus_exact(t);
    return {mod * std::cos(a.phase), mod * std::sin(a.phase)};
  }
  const std::complex<double> lg = log_gamma_complex({0.5, t});
  return std::exp(lg + std::complex<double>(-0.5 * std::log(kPi), t * std::numbers::ln2));
}

double phi_k_modulus_exact(double t) {
  const double a = kPi * std::abs(t);
  return std::numbers::sqrt2 * std::exp(-0.5 * a) / std::sqrt(1.0 + std::exp(-2.0 * a));
}

PhiKAsymptotics phi_k_asymptotic(double t) {
  if (!(std::abs(t) >= 1.0)) {
    throw std::domain_error("phi_k_asymptotic: requires |t| >= 1");
  }
  PhiKAsymptotics out;
  out.modulus_leading = std::numbers::sqrt2 * std::exp(-0.5 * kPi * std::abs(t));
  out.phase = 0.5 * t * std::log1p(4.0 * t * t) - t;
  out.relative_error_bound = 1.0 / std::abs(t);
  return out;
}

double noise_density(double x) {
  // exp(x) overflows to +inf for x > ~709; 0.5 x - inf = -inf and the result
  // underflows cleanly to zero.
  return kInvSqrt2Pi * std::exp(0.5 * x - 0.5 * std::exp(x));
}

}  // namespace voldens::specfun
