#include "voldens/deconv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "voldens/quadrature.hpp"
#include "voldens/specfun.hpp"

namespace voldens::deconv {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kQuadRelTol = 1e-8;
constexpr int kMaxPanels = 1 << 16;

//! Adds q * e^{-i s x_i} to the accumulators for every grid point, advancing
//! the phase by one complex multiplication per step and resynchronizing
//! against drift every 4096 steps. The recurrence performs sign-mirrored
//! operations for +-s, so the contributions of paired nodes stay exact
//! conjugates and the imaginary parts cancel to rounding.
void accumulate_node(double s, std::complex<double> q, const std::vector<double>& grid,
                     double dx, std::vector<double>& acc_re, std::vector<double>& acc_im) {
  if (q.real() == 0.0 && q.imag() == 0.0) return;
  const double qr = q.real();
  const double qi = q.imag();
  const double ca = std::cos(s * dx);
  const double sa = -std::sin(s * dx);
  double pr = std::cos(s * grid[0]);
  double pim = -std::sin(s * grid[0]);
  const std::size_t m = grid.size();
  for (std::size_t i = 0;; ++i) {
    acc_re[i] += qr * pr - qi * pim;
    acc_im[i] += qr * pim + qi * pr;
    if (i + 1 == m) break;
    if ((i & 0xFFFu) == 0xFFFu) {
      pr = std::cos(s * grid[i + 1]);
      pim = -std::sin(s * grid[i + 1]);
    } else {
      const double t = pr * ca - pim * sa;
      pim = pr * sa + pim * ca;
      pr = t;
    }
  }
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::pair<double, double> data_range(const std::vector<double>& data) {
  auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  return {*lo, *hi};
}

void require_sorted(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("estimate: empty evaluation grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("estimate: evaluation grid must be sorted");
  }
}

std::vector<double> trapezoid_weights(const std::vector<double>& axis) {
  const std::size_t n = axis.size();
  std::vector<double> w(n, 0.0);
  if (n == 1) return w;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double half = 0.5 * (axis[i + 1] - axis[i]);
    w[i] += half;
    w[i + 1] += half;
  }
  return w;
}

}  // namespace

NoiseChf log_chisq_noise() {
  return [](double t) { return specfun::phi_k(t); };
}

NoiseChf no_noise() {
  return [](double /*t*/) { return std::complex<double>(1.0, 0.0); };
}

VhTable build_vh_table(const kernels::KernelSpec& kernel, double h, double x_min, double x_max,
                       std::size_t n_grid, int quad_nodes, const NoiseChf& noise_chf) {
  if (!(h >= kBandwidthFloor && h <= kBandwidthCeiling)) {
    throw std::domain_error("build_vh_table: bandwidth outside [0.05, 2]");
  }
  if (n_grid < 2) throw std::invalid_argument("build_vh_table: requires n_grid >= 2");
  if (quad_nodes < 512) throw std::invalid_argument("build_vh_table: requires quad_nodes >= 512");
  if (!(x_max > x_min)) throw std::invalid_argument("build_vh_table: requires x_max > x_min");

  VhTable table;
  table.h = h;
  table.grid_x.resize(n_grid);
  const double dx = (x_max - x_min) / static_cast<double>(n_grid - 1);
  for (std::size_t i = 0; i < n_grid; ++i) table.grid_x[i] = x_min + static_cast<double>(i) * dx;

  auto q_at = [&](double s) { return kernel.eval_phi_w(s) / noise_chf(s / h); };

  std::vector<double> acc_re(n_grid, 0.0);
  std::vector<double> acc_im(n_grid, 0.0);
  // Endpoint terms carry trapezoid weight 1/2 and are invariant under
  // refinement (phi_w(+-1) = 0 for admissible kernels, but do not rely on it).
  accumulate_node(-1.0, 0.5 * q_at(-1.0), table.grid_x, dx, acc_re, acc_im);
  accumulate_node(1.0, 0.5 * q_at(1.0), table.grid_x, dx, acc_re, acc_im);

  int panels = 512;
  while (panels < quad_nodes) panels <<= 1;
  {
    const double ds = 2.0 / panels;
    for (int j = 1; j < panels; ++j) {
      const double s = -1.0 + j * ds;
      accumulate_node(s, q_at(s), table.grid_x, dx, acc_re, acc_im);
    }
  }

  auto scaled_values = [&](int n_panels, std::vector<double>& out_re, double& out_imag_max) {
    const double scale = (2.0 / n_panels) / (2.0 * kPi);
    out_re.resize(n_grid);
    out_imag_max = 0.0;
    for (std::size_t i = 0; i < n_grid; ++i) {
      out_re[i] = scale * acc_re[i];
      out_imag_max = std::max(out_imag_max, std::abs(scale * acc_im[i]));
    }
  };

  std::vector<double> vals, prev;
  double imag_max = 0.0;
  scaled_values(panels, vals, imag_max);

  while (panels < kMaxPanels) {
    prev = vals;
    const int refined = panels * 2;
    const double ds = 2.0 / refined;
    for (int j = 1; j < refined; j += 2) {
      const double s = -1.0 + j * ds;
      accumulate_node(s, q_at(s), table.grid_x, dx, acc_re, acc_im);
    }
    panels = refined;
    scaled_values(panels, vals, imag_max);
    double diff = 0.0;
    for (std::size_t i = 0; i < n_grid; ++i) diff = std::max(diff, std::abs(vals[i] - prev[i]));
    if (diff <= kQuadRelTol * std::max(max_abs(vals), 1e-300)) break;
  }

  table.values = std::move(vals);
  table.quad_nodes = panels;
  table.max_imag_residual = imag_max;

  // Evenness diagnostic on symmetric grids; v_h is real but not even, so
  // this is recorded, never asserted.
  if (std::abs(x_min + x_max) < 1e-12 * std::max(std::abs(x_min), 1.0)) {
    double dev = 0.0;
    for (std::size_t i = 0; i < n_grid; ++i) {
      dev = std::max(dev, std::abs(std::abs(table.values[i]) -
                                   std::abs(table.values[n_grid - 1 - i])));
    }
    table.even_deviation = dev;
  } else {
    table.even_deviation = std::numeric_limits<double>::quiet_NaN();
  }
  return table;
}

double vh_eval(const VhTable& table, double x) {
  const double lo = table.x_min();
  const double hi = table.x_max();
  if (!(x >= lo && x <= hi)) {
    throw std::out_of_range("vh_eval: argument outside the tabulated range");
  }
  const std::size_t n = table.grid_x.size();
  const double dx = (hi - lo) / static_cast<double>(n - 1);
  const double fi = (x - lo) / dx;
  std::size_t i = static_cast<std::size_t>(fi);
  if (i > n - 2) i = n - 2;
  const double frac = fi - static_cast<double>(i);
  return table.values[i] + frac * (table.values[i + 1] - table.values[i]);
}

double default_bandwidth(std::size_t n) {
  if (n < 2) throw std::invalid_argument("default_bandwidth: requires n >= 2");
  return std::max(kPi / std::log(static_cast<double>(n)), kBandwidthFloor);
}

double EstimateGrid::riemann_mass() const {
  std::vector<std::vector<double>> weights;
  weights.reserve(axes.size());
  for (const auto& axis : axes) weights.push_back(trapezoid_weights(axis));
  double mass = 0.0;
  for (std::size_t flat = 0; flat < values.size(); ++flat) {
    std::size_t rem = flat;
    double w = 1.0;
    for (std::size_t d = axes.size(); d-- > 0;) {
      const std::size_t id = rem % axes[d].size();
      rem /= axes[d].size();
      w *= weights[d][id];
    }
    mass += w * values[flat];
  }
  return mass;
}

DeconvEstimator::DeconvEstimator(kernels::KernelSpec kernel, double h, NoiseChf noise_chf)
    : kernel_(std::move(kernel)), h_(h), chf_(std::move(noise_chf)) {
  if (!(h_ >= kBandwidthFloor && h_ <= kBandwidthCeiling)) {
    throw std::domain_error("DeconvEstimator: bandwidth outside [0.05, 2]");
  }
}

void DeconvEstimator::ensure_table(double u_min, double u_max) {
  const double spacing = 0.01 * h_;
  if (has_table_) {
    if (table_.x_min() <= u_min && table_.x_max() >= u_max) return;
    u_min = std::min(u_min, table_.x_min());
    u_max = std::max(u_max, table_.x_max());
  }
  // Pad so that small range growth does not trigger immediate rebuilds.
  const double pad = 0.05 * (u_max - u_min) + 1.0;
  const double lo = u_min - pad;
  const double hi = u_max + pad;
  const auto n_grid = static_cast<std::size_t>(std::ceil((hi - lo) / spacing)) + 1;
  table_ = build_vh_table(kernel_, h_, lo, hi, n_grid, 512, chf_);
  has_table_ = true;
}

const VhTable& DeconvEstimator::table() const {
  if (!has_table_) throw std::logic_error("DeconvEstimator: no table built yet");
  return table_;
}

EstimateGrid DeconvEstimator::estimate_univariate(const std::vector<double>& data_logx2,
                                                  const std::vector<double>& grid) {
  if (data_logx2.empty()) throw std::invalid_argument("estimate_univariate: empty data");
  require_sorted(grid);
  const auto [dlo, dhi] = data_range(data_logx2);
  ensure_table((grid.front() - dhi) / h_, (grid.back() - dlo) / h_);
  return evaluate_univariate(data_logx2, grid);
}

EstimateGrid DeconvEstimator::evaluate_univariate(const std::vector<double>& data_logx2,
                                                  const std::vector<double>& grid) const {
  if (data_logx2.empty()) throw std::invalid_argument("estimate_univariate: empty data");
  require_sorted(grid);
  const VhTable& t = table();
  EstimateGrid out;
  out.p = 1;
  out.axes = {grid};
  out.values.resize(grid.size());
  out.h = h_;
  out.n = data_logx2.size();
  out.scale = DensityScale::log_sigma_sq;
  const double inv = 1.0 / (static_cast<double>(out.n) * h_);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sum = 0.0;
    for (const double u : data_logx2) {
      sum += vh_eval(t, (grid[i] - u) / h_);
    }
    out.values[i] = sum * inv;
  }
  return out;
}

EstimateGrid DeconvEstimator::estimate_multivariate(const std::vector<double>& data_logx2, int p,
                                                    const std::vector<std::vector<double>>& axes) {
  if (p < 1 || p > 3) throw std::invalid_argument("estimate_multivariate: p must be in {1, 2, 3}");
  if (data_logx2.size() < static_cast<std::size_t>(p)) {
    throw std::invalid_argument("estimate_multivariate: data shorter than p");
  }
  if (axes.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument("estimate_multivariate: expected one axis per dimension");
  }
  for (const auto& axis : axes) require_sorted(axis);
  const auto [dlo, dhi] = data_range(data_logx2);
  double alo = axes[0].front(), ahi = axes[0].back();
  for (const auto& axis : axes) {
    alo = std::min(alo, axis.front());
    ahi = std::max(ahi, axis.back());
  }
  ensure_table((alo - dhi) / h_, (ahi - dlo) / h_);
  return evaluate_multivariate(data_logx2, p, axes);
}

EstimateGrid DeconvEstimator::evaluate_multivariate(const std::vector<double>& data_logx2, int p,
                                                    const std::vector<std::vector<double>>& axes) const {
  if (p == 1) return evaluate_univariate(data_logx2, axes.at(0));
  if (p < 1 || p > 3) throw std::invalid_argument("estimate_multivariate: p must be in {1, 2, 3}");
  if (data_logx2.size() < static_cast<std::size_t>(p)) {
    throw std::invalid_argument("estimate_multivariate: data shorter than p");
  }
  if (axes.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument("estimate_multivariate: expected one axis per dimension");
  }
  for (const auto& axis : axes) require_sorted(axis);

  const VhTable& t = table();
  const std::size_t n = data_logx2.size();
  EstimateGrid out;
  out.p = p;
  out.axes = axes;
  out.h = h_;
  out.n = n;
  out.scale = DensityScale::log_sigma_sq;
  std::size_t total = 1;
  for (const auto& axis : axes) total *= axis.size();
  out.values.assign(total, 0.0);

  // Summand j uses the lagged vector (u_j, u_{j-1}, ..., u_{j-p+1});
  // axis m pairs with lag m.
  std::vector<std::vector<double>> comp(p);
  for (int m = 0; m < p; ++m) comp[m].resize(axes[m].size());
  for (std::size_t j = static_cast<std::size_t>(p) - 1; j < n; ++j) {
    for (int m = 0; m < p; ++m) {
      const double u = data_logx2[j - static_cast<std::size_t>(m)];
      const auto& axis = axes[m];
      auto& c = comp[m];
      for (std::size_t i = 0; i < axis.size(); ++i) c[i] = vh_eval(t, (axis[i] - u) / h_);
    }
    if (p == 2) {
      const std::size_t ny = axes[1].size();
      for (std::size_t ix = 0; ix < axes[0].size(); ++ix) {
        const double vx = comp[0][ix];
        double* row = out.values.data() + ix * ny;
        for (std::size_t iy = 0; iy < ny; ++iy) row[iy] += vx * comp[1][iy];
      }
    } else {
      const std::size_t ny = axes[1].size();
      const std::size_t nz = axes[2].size();
      for (std::size_t ix = 0; ix < axes[0].size(); ++ix) {
        for (std::size_t iy = 0; iy < ny; ++iy) {
          const double vxy = comp[0][ix] * comp[1][iy];
          double* row = out.values.data() + (ix * ny + iy) * nz;
          for (std::size_t iz = 0; iz < nz; ++iz) row[iz] += vxy * comp[2][iz];
        }
      }
    }
  }
  const double inv = 1.0 / (static_cast<double>(n - static_cast<std::size_t>(p) + 1) *
                            std::pow(h_, p));
  for (double& v : out.values) v *= inv;
  return out;
}

EstimateGrid estimate_univariate(const std::vector<double>& data_logx2,
                                 const kernels::KernelSpec& kernel, double h,
                                 const std::vector<double>& grid, const NoiseChf& noise_chf) {
  DeconvEstimator est(kernel, h, noise_chf);
  return est.estimate_univariate(data_logx2, grid);
}

EstimateGrid estimate_multivariate(const std::vector<double>& data_logx2, int p,
                                   const kernels::KernelSpec& kernel, double h,
                                   const std::vector<std::vector<double>>& axes,
                                   const NoiseChf& noise_chf) {
  DeconvEstimator est(kernel, h, noise_chf);
  return est.estimate_multivariate(data_logx2, p, axes);
}

EstimateGrid kde_univariate(const std::vector<double>& data,
                            const std::function<double(double)>& eval, double h,
                            const std::vector<double>& grid) {
  if (data.empty()) throw std::invalid_argument("kde_univariate: empty data");
  require_sorted(grid);
  EstimateGrid out;
  out.p = 1;
  out.axes = {grid};
  out.values.resize(grid.size());
  out.h = h;
  out.n = data.size();
  out.scale = DensityScale::log_sigma_sq;
  const double inv = 1.0 / (static_cast<double>(data.size()) * h);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sum = 0.0;
    for (const double u : data) sum += eval((grid[i] - u) / h);
    out.values[i] = sum * inv;
  }
  return out;
}

L2Report l2_norm_vh(const VhTable& table, const kernels::KernelSpec& kernel,
                    const NoiseChf& noise_chf) {
  L2Report rep;
  {
    double sum = 0.0;
    const std::size_t n = table.values.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
      sum += w * table.values[i] * table.values[i];
    }
    rep.direct = std::sqrt(sum * table.spacing());
  }
  {
    const double h = table.h;
    auto integrand = [&](double s) {
      return std::norm(kernel.eval_phi_w(s) / noise_chf(s / h));
    };
    const double integral = quad::gauss_panels(integrand, -1.0, 1.0, 2.0 / 1024.0);
    rep.parseval = std::sqrt(integral / (2.0 * kPi));
  }
  {
    const double h = table.h;
    const double a = kernel.alpha;
    rep.predicted = std::sqrt(2.0 * std::exp(kPi / h) * std::pow(h, 1.0 + 2.0 * a) *
                              std::pow(kPi, -1.0 - 2.0 * a) * kernel.big_a * kernel.big_a *
                              std::tgamma(2.0 * a + 1.0) / (2.0 * kPi));
  }
  return rep;
}

EstimateGrid transform_scale(const EstimateGrid& est, DensityScale target) {
  if (est.scale != DensityScale::log_sigma_sq) {
    throw std::invalid_argument("transform_scale: input must be on the log sigma^2 scale");
  }
  if (target == DensityScale::log_sigma_sq) return est;
  if (est.p != 1) {
    throw std::invalid_argument("transform_scale: only univariate estimates are transformable");
  }
  EstimateGrid out = est;
  out.scale = target;
  const auto& xs = est.axes[0];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (target == DensityScale::sigma_sq) {
      const double y = std::exp(xs[i]);
      out.axes[0][i] = y;
      out.values[i] = est.values[i] / y;
    } else {
      const double s = std::exp(0.5 * xs[i]);
      out.axes[0][i] = s;
      out.values[i] = 2.0 * est.values[i] / s;
    }
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw std::invalid_argument("linspace: requires n >= 2");
  std::vector<double> out(n);
  const double dx = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + static_cast<double>(i) * dx;
  out.back() = hi;
  return out;
}

}  // namespace voldens::deconv
