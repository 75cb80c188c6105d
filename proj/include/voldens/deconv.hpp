#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include "voldens/kernels.hpp"

//! Fourier deconvolution kernel density estimation for log-squared returns:
//! tabulation of the deconvolving kernel
//!   v_h(x) = (1/2pi) int_{-1}^{1} phi_w(s) / phi_k(s/h) e^{-isx} ds,
//! univariate and multivariate (product-kernel) estimators, the pi/log(n)
//! bandwidth rule, L2 diagnostics and scale transforms.
namespace voldens::deconv {

//! Characteristic function of the additive noise.
using NoiseChf = std::function<std::complex<double>(double)>;

//! Default noise channel: log Z^2 for standard Gaussian Z.
NoiseChf log_chisq_noise();

//! Test hook: noiseless channel (chf identically 1); deconvolving against it
//! turns the estimator into an ordinary kernel density estimator.
NoiseChf no_noise();

//! Below 0.05 the integrand factor 1/|phi_k(s/h)| reaches ~4.6e13 and the
//! oscillatory quadrature loses all relative accuracy in double precision.
//! The pi/log(n) rule stays above 0.2 for any realistic n.
inline constexpr double kBandwidthFloor = 0.05;
inline constexpr double kBandwidthCeiling = 2.0;

//! Tabulated v_h on a uniform grid. Immutable after construction; safe to
//! share across threads.
//!
//! v_h is real (conjugate symmetry of the integrand) but not even: phi_k has
//! a nontrivial phase, so only realness is enforced. The evenness deviation
//! on symmetric grids is recorded as a diagnostic.
struct VhTable {
  double h = 0.0;
  std::vector<double> grid_x;
  std::vector<double> values;
  int quad_nodes = 0;             //!< trapezoid panels accepted by refinement
  double max_imag_residual = 0.0; //!< largest |Im| discarded when realifying
  double even_deviation = 0.0;    //!< max | |v(x)| - |v(-x)| | on symmetric grids, else NaN

  double x_min() const { return grid_x.front(); }
  double x_max() const { return grid_x.back(); }
  double spacing() const { return (x_max() - x_min()) / static_cast<double>(grid_x.size() - 1); }
};

//! Tabulates v_h by composite trapezoid quadrature on [-1, 1], doubling the
//! panel count (starting from quad_nodes, at least 512) until two successive
//! refinements agree to 1e-8 relative, capped at 2^16 panels.
//! Throws std::domain_error when h is outside [0.05, 2].
VhTable build_vh_table(const kernels::KernelSpec& kernel, double h, double x_min, double x_max,
                       std::size_t n_grid, int quad_nodes,
                       const NoiseChf& noise_chf = log_chisq_noise());

//! Linear interpolation in the table; exact at the nodes.
//! Throws std::out_of_range outside [x_min, x_max].
double vh_eval(const VhTable& table, double x);

//! max(pi / log n, bandwidth floor); requires n >= 2.
double default_bandwidth(std::size_t n);

enum class DensityScale { log_sigma_sq, sigma_sq, sigma };

//! Density estimate on a (product) grid. Values are signed: deconvolution
//! estimates may dip below zero.
struct EstimateGrid {
  int p = 1;
  std::vector<std::vector<double>> axes;
  std::vector<double> values;  //!< row-major over the axes
  double h = 0.0;
  std::size_t n = 0;
  DensityScale scale = DensityScale::log_sigma_sq;

  //! Trapezoid mass over the grid (handles non-uniform axes).
  double riemann_mass() const;
};

//! Reusable estimator: tabulates v_h once per bandwidth (grid spacing
//! 0.01 h) and evaluates estimates by table lookup, so an estimate costs
//! O(n * grid) lookups rather than O(n * grid) quadratures.
//!
//! ensure_table / estimate_* mutate the table and are single-thread;
//! evaluate_* are const and safe to call concurrently once the table covers
//! the needed range.
class DeconvEstimator {
 public:
  DeconvEstimator(kernels::KernelSpec kernel, double h, NoiseChf noise_chf = log_chisq_noise());

  //! Grow the table to cover v_h arguments in [u_min, u_max].
  void ensure_table(double u_min, double u_max);

  EstimateGrid estimate_univariate(const std::vector<double>& data_logx2,
                                   const std::vector<double>& grid);
  EstimateGrid estimate_multivariate(const std::vector<double>& data_logx2, int p,
                                     const std::vector<std::vector<double>>& axes);

  //! Table-coverage-assuming const variants (used under parallel evaluation).
  EstimateGrid evaluate_univariate(const std::vector<double>& data_logx2,
                                   const std::vector<double>& grid) const;
  EstimateGrid evaluate_multivariate(const std::vector<double>& data_logx2, int p,
                                     const std::vector<std::vector<double>>& axes) const;

  const VhTable& table() const;
  double h() const { return h_; }

 private:
  kernels::KernelSpec kernel_;
  double h_;
  NoiseChf chf_;
  VhTable table_;
  bool has_table_ = false;
};

//! f_nh(x) = (1/(n h)) sum_j v_h((x - u_j) / h) on the given grid.
EstimateGrid estimate_univariate(const std::vector<double>& data_logx2,
                                 const kernels::KernelSpec& kernel, double h,
                                 const std::vector<double>& grid,
                                 const NoiseChf& noise_chf = log_chisq_noise());

//! Multivariate product estimator, p in {1, 2, 3}:
//!   f_nh(x) = (1/((n - p + 1) h^p)) sum_{j=p}^{n} prod_m v_h((x_m - u_{j-m+1}) / h),
//! pairing axis m with lag m - 1 of the data.
EstimateGrid estimate_multivariate(const std::vector<double>& data_logx2, int p,
                                   const kernels::KernelSpec& kernel, double h,
                                   const std::vector<std::vector<double>>& axes,
                                   const NoiseChf& noise_chf = log_chisq_noise());

//! Ordinary kernel density estimate (1/(n h)) sum_j eval((x - u_j) / h);
//! used by the conditional-expectation identity and the no-noise check.
EstimateGrid kde_univariate(const std::vector<double>& data,
                            const std::function<double(double)>& eval, double h,
                            const std::vector<double>& grid);

//! ||v_h||_2 by two routes plus the closed-form leading term
//! (2 e^{pi/h} h^{1+2a} pi^{-1-2a} A^2 Gamma(2a+1) / (2 pi))^{1/2}.
struct L2Report {
  double direct = 0.0;    //!< Riemann sum of tabulated values squared
  double parseval = 0.0;  //!< ((1/2pi) int |phi_w(s)/phi_k(s/h)|^2 ds)^{1/2}
  double predicted = 0.0;
};
L2Report l2_norm_vh(const VhTable& table, const kernels::KernelSpec& kernel,
                    const NoiseChf& noise_chf = log_chisq_noise());

//! Change of variables from the log sigma^2 scale (univariate only):
//!   sigma_sq: g(y) = f(log y) / y        at y = e^x,
//!   sigma:    g(s) = 2 f(2 log s) / s    at s = e^{x/2}.
EstimateGrid transform_scale(const EstimateGrid& est, DensityScale target);

//! Uniform grid with n points on [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace voldens::deconv
