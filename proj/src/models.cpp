#include "voldens/models.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace voldens::models {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

ModelSpec ModelSpec::garch(std::vector<double> alpha, std::vector<double> beta,
                           std::uint64_t seed, std::size_t burn_in) {
  ModelSpec s;
  s.variant = ModelVariant::garch;
  s.garch_alpha = std::move(alpha);
  s.garch_beta = std::move(beta);
  s.seed = seed;
  s.burn_in = burn_in;
  s.validate();
  return s;
}

ModelSpec ModelSpec::log_ar1(double mean, double coeff, double innov_sd, std::uint64_t seed,
                             std::size_t burn_in) {
  ModelSpec s;
  s.variant = ModelVariant::log_ar1;
  s.ar1_mean = mean;
  s.ar1_coeff = coeff;
  s.ar1_innov_sd = innov_sd;
  s.seed = seed;
  s.burn_in = burn_in;
  s.validate();
  return s;
}

void ModelSpec::validate() const {
  if (variant == ModelVariant::garch) {
    if (garch_alpha.empty() || !(garch_alpha[0] > 0.0)) {
      throw std::invalid_argument("garch: alpha_0 must be positive");
    }
    double sum = 0.0;
    for (std::size_t i = 1; i < garch_alpha.size(); ++i) {
      if (garch_alpha[i] < 0.0) throw std::invalid_argument("garch: alpha coefficients must be >= 0");
      sum += garch_alpha[i];
    }
    for (double b : garch_beta) {
      if (b < 0.0) throw std::invalid_argument("garch: beta coefficients must be >= 0");
      sum += b;
    }
    if (!(sum < 1.0)) {
      throw std::invalid_argument("garch: sum(alpha) + sum(beta) must be < 1 for stationarity");
    }
  } else {
    if (!(std::abs(ar1_coeff) < 1.0)) {
      throw std::invalid_argument("log_ar1: |ar1_coeff| must be < 1");
    }
    if (!(ar1_innov_sd > 0.0)) {
      throw std::invalid_argument("log_ar1: ar1_innov_sd must be > 0");
    }
  }
}

double ModelSpec::ar1_stationary_sd() const {
  if (variant != ModelVariant::log_ar1) {
    throw std::invalid_argument("ar1_stationary_sd: log_ar1 variant only");
  }
  return ar1_innov_sd / std::sqrt(1.0 - ar1_coeff * ar1_coeff);
}

std::uint64_t substream_seed(std::uint64_t base, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the stream name
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::uint64_t x = base ^ h;
  x += 0x9e3779b97f4a7c15ull;  // splitmix64 finalizer
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double GaussianStream::next_uniform() {
  return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
}

double GaussianStream::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = kTwoPi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

SimOutput simulate(const ModelSpec& spec, std::size_t n) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("simulate: requires n >= 1");

  GaussianStream noise(substream_seed(spec.seed, "noise"));
  SimOutput out;
  out.n = n;
  out.x.reserve(n);
  out.sigma_sq.reserve(n);

  if (spec.variant == ModelVariant::garch) {
    const std::size_t p = spec.garch_alpha.size() - 1;
    const std::size_t q = spec.garch_beta.size();
    const double coeff_sum =
        std::accumulate(spec.garch_alpha.begin() + 1, spec.garch_alpha.end(), 0.0) +
        std::accumulate(spec.garch_beta.begin(), spec.garch_beta.end(), 0.0);
    const double vstar = spec.garch_alpha[0] / (1.0 - coeff_sum);
    std::vector<double> x2_hist(p, vstar);   // x2_hist[i] = X^2_{t-1-i}
    std::vector<double> s2_hist(q, vstar);   // s2_hist[j] = sigma^2_{t-1-j}
    for (std::size_t t = 0; t < spec.burn_in + n; ++t) {
      double s2 = spec.garch_alpha[0];
      for (std::size_t i = 0; i < p; ++i) s2 += spec.garch_alpha[i + 1] * x2_hist[i];
      for (std::size_t j = 0; j < q; ++j) s2 += spec.garch_beta[j] * s2_hist[j];
      const double z = noise.next_gaussian();
      const double xt = std::sqrt(s2) * z;
      if (t >= spec.burn_in) {
        out.sigma_sq.push_back(s2);
        out.x.push_back(xt);
      }
      if (p > 0) {
        for (std::size_t i = p - 1; i > 0; --i) x2_hist[i] = x2_hist[i - 1];
        x2_hist[0] = xt * xt;
      }
      if (q > 0) {
        for (std::size_t j = q - 1; j > 0; --j) s2_hist[j] = s2_hist[j - 1];
        s2_hist[0] = s2;
      }
    }
  } else {
    GaussianStream vol(substream_seed(spec.seed, "vol"));
    const double a = spec.ar1_coeff;
    const double tau = spec.ar1_innov_sd;
    const double mu = spec.ar1_mean;
    // Exact stationary initialization.
    double logvar = mu + spec.ar1_stationary_sd() * vol.next_gaussian();
    for (std::size_t t = 0; t < spec.burn_in + n; ++t) {
      if (t > 0) logvar = mu + a * (logvar - mu) + tau * vol.next_gaussian();
      const double z = noise.next_gaussian();
      if (t >= spec.burn_in) {
        const double s2 = std::exp(logvar);
        out.sigma_sq.push_back(s2);
        out.x.push_back(std::exp(0.5 * logvar) * z);
      }
    }
  }
  return out;
}

LogSquareResult log_square(const std::vector<double>& x) {
  LogSquareResult out;
  out.values.reserve(x.size());
  for (double v : x) {
    if (std::abs(v) < kXTiny) {
      ++out.dropped;
      continue;
    }
    out.values.push_back(2.0 * std::log(std::abs(v)));
  }
  return out;
}

double true_logvar_density_log_ar1(const ModelSpec& spec, int p, const std::vector<double>& xs) {
  if (spec.variant != ModelVariant::log_ar1) {
    throw std::invalid_argument("true_logvar_density_log_ar1: log_ar1 variant only");
  }
  if ((p != 1 && p != 2) || xs.size() != static_cast<std::size_t>(p)) {
    throw std::invalid_argument("true_logvar_density_log_ar1: p must be 1 or 2 with matching xs");
  }
  const double s = spec.ar1_stationary_sd();
  const double mu = spec.ar1_mean;
  if (p == 1) {
    const double z = (xs[0] - mu) / s;
    return std::exp(-0.5 * z * z) / (s * std::sqrt(kTwoPi));
  }
  const double rho = spec.ar1_coeff;
  const double z1 = (xs[0] - mu) / s;
  const double z2 = (xs[1] - mu) / s;
  const double om = 1.0 - rho * rho;
  const double quad = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / om;
  return std::exp(-0.5 * quad) / (kTwoPi * s * s * std::sqrt(om));
}

}  // namespace voldens::models
