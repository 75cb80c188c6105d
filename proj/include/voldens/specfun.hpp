#pragma once

#include <complex>

//! Special functions for the log-chi-squared noise channel: complex
//! log-gamma, the noise characteristic function phi_k, its closed-form
//! modulus, and its large-|t| asymptotics.
namespace voldens::specfun {

//! Leading large-|t| expansion of phi_k.
struct PhiKAsymptotics {
  double modulus_leading;       //!< sqrt(2) * exp(-pi |t| / 2)
  double phase;                 //!< t * log(sqrt(1 + 4 t^2)) - t, odd in t
  double relative_error_bound;  //!< 1 / |t|, scale of the remainder terms
};

//! Principal branch of log Gamma(z) on the right half plane.
//! Accurate to better than 1e-12 in exp(result) on re(z) = 1/2, |im(z)| <= 200.
//! Throws std::domain_error unless re(z) > 0.
std::complex<double> log_gamma_complex(std::complex<double> z);

//! Characteristic function of log Z^2 for standard Gaussian Z:
//!   phi_k(t) = pi^{-1/2} 2^{it} Gamma(1/2 + it).
//! Satisfies phi_k(-t) == conj(phi_k(t)) exactly by construction.
//! For |t| > 200 the asymptotic form is returned directly.
std::complex<double> phi_k(double t);

//! |phi_k(t)| = cosh(pi t)^{-1/2}, evaluated as
//! sqrt(2) e^{-pi|t|/2} (1 + e^{-2 pi |t|})^{-1/2} so that neither the value
//! nor its reciprocal degrades for large |t|.
double phi_k_modulus_exact(double t);

//! Leading asymptotics of phi_k; requires |t| >= 1.
PhiKAsymptotics phi_k_asymptotic(double t);

//! Density of log Z^2: k(x) = (2 pi)^{-1/2} e^{x/2} e^{-e^x / 2}.
double noise_density(double x);

}  // namespace voldens::specfun
