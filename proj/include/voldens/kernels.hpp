#pragma once

#include <functional>
#include <string>
#include <vector>

//! Deconvolution kernels: real symmetric kernels whose Fourier transform is
//! supported on [-1, 1], plus numerical verification of the admissibility
//! conditions (integrability, unit mass, finite second moment, decay, support
//! and boundary behaviour of the transform).
namespace voldens::kernels {

//! A kernel w together with its Fourier transform phi_w and the boundary
//! behaviour phi_w(1 - t) ~ big_a * t^alpha as t -> 0+.
//! Immutable after construction; evaluations are pure and thread-safe.
struct KernelSpec {
  double alpha = 0.0;
  double big_a = 0.0;
  std::function<double(double)> eval_w;
  std::function<double(double)> eval_phi_w;
  std::string name;
};

//! Numerical admissibility report; all integrals are truncated to
//! [-1e4, 1e4], where the x^{-4} decay of the shipped kernel puts the tail
//! below 1e-11.
struct ConditionWReport {
  double integral_abs_w = 0.0;
  double integral_w = 0.0;
  double second_moment = 0.0;
  bool integrable_ok = false;
  bool unit_integral_ok = false;   //!< quadrature of w and phi_w(0) both within tolerance of 1
  bool second_moment_ok = false;   //!< finite and consistent with -phi_w''(0)
  bool vanishes_at_infinity_ok = false;
  bool sup_w_bound_ok = false;      //!< sup |w| <= 1/(2 pi)
  bool lipschitz_bound_ok = false;  //!< sup |w'| <= 1/(2 pi)
  bool support_ok = false;          //!< phi_w vanishes outside [-1, 1]
  double boundary_fit_alpha = 0.0;
  double boundary_fit_big_a = 0.0;
  bool boundary_fit_ok = false;  //!< fitted alpha within 5% of the declared one

  bool all_ok() const {
    return integrable_ok && unit_integral_ok && second_moment_ok && vanishes_at_infinity_ok &&
           sup_w_bound_ok && lipschitz_bound_ok && support_ok && boundary_fit_ok;
  }
};

//! The kernel of Wand (1998):
//!   w(x)     = (48 x (x^2 - 15) cos x - 144 (2 x^2 - 5) sin x) / (pi x^7)
//!   phi_w(t) = (1 - t^2)^3 on |t| <= 1
//! with alpha = 3 and big_a = 8. The closed form is 0/0 at the origin, so for
//! |x| < 0.5 the evaluation switches to the power series of
//! (1/pi) int_0^1 (1 - u^2)^3 cos(u x) du, which converges to machine
//! precision there.
KernelSpec wand_kernel();

//! Numerically verifies the admissibility conditions of k.
//! Violations are reported, not thrown.
ConditionWReport check_condition_w(const KernelSpec& k, double quad_tolerance);

//! Product kernel: prod_j k.eval_w(xs[j]); xs must have length p.
double product_kernel_eval(const KernelSpec& k, const std::vector<double>& xs, int p);

}  // namespace voldens::kernels
