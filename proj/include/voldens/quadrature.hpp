#pragma once

#include <complex>
#include <functional>

//! Small quadrature toolkit used across the library and its tests.
namespace voldens::quad {

//! Adaptive Simpson integration of a smooth real integrand on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth = 48);

//! Adaptive Simpson for complex-valued integrands.
std::complex<double> adaptive_simpson(const std::function<std::complex<double>(double)>& f,
                                      double a, double b, double abs_tol, int max_depth = 48);

//! Composite 16-point Gauss-Legendre rule with panels of at most panel_width.
double gauss_panels(const std::function<double(double)>& f, double a, double b,
                    double panel_width);

//! Integral of |f| over [a, b] for a smooth f with isolated sign changes:
//! scans at scan_step for sign changes, refines roots by bisection and
//! integrates |f| piecewise between them.
double integrate_abs(const std::function<double(double)>& f, double a, double b,
                     double scan_step);

}  // namespace voldens::quad
