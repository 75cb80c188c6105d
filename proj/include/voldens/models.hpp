#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

//! Simulators for the two volatility model classes: GARCH(p,q), where sigma
//! is predictable from past returns, and a latent Gaussian log-AR(1), where
//! the whole sigma process is independent of the return noise. Plus the
//! log-square preprocessing log X_t^2 = log sigma_t^2 + log Z_t^2.
namespace voldens::models {

enum class ModelVariant { garch, log_ar1 };

struct ModelSpec {
  ModelVariant variant = ModelVariant::log_ar1;
  std::vector<double> garch_alpha;  //!< alpha_0 .. alpha_p
  std::vector<double> garch_beta;   //!< beta_1 .. beta_q
  double ar1_mean = 0.0;            //!< stationary mean of log sigma^2
  double ar1_coeff = 0.0;           //!< autoregression coefficient, |a| < 1
  double ar1_innov_sd = 1.0;        //!< innovation standard deviation tau
  std::uint64_t seed = 1;
  std::size_t burn_in = 1000;

  static ModelSpec garch(std::vector<double> alpha, std::vector<double> beta,
                         std::uint64_t seed, std::size_t burn_in = 1000);
  static ModelSpec log_ar1(double mean, double coeff, double innov_sd, std::uint64_t seed,
                           std::size_t burn_in = 1000);

  //! Throws std::invalid_argument on violated constraints:
  //! garch: alpha_0 > 0, coefficients nonnegative, sum(alpha)+sum(beta) < 1;
  //! log_ar1: |ar1_coeff| < 1, ar1_innov_sd > 0.
  void validate() const;

  //! Stationary sd of log sigma^2 for the log-AR(1) variant.
  double ar1_stationary_sd() const;
};

struct SimOutput {
  std::vector<double> x;         //!< returns X_t = sigma_t Z_t
  std::vector<double> sigma_sq;  //!< latent sigma_t^2 > 0
  std::size_t n = 0;
};

//! Simulates n observations after burn-in. Deterministic given the seed:
//! the volatility innovations and the return noise come from two named
//! substreams ("vol", "noise") of the seed, so sigma and Z are independent
//! by construction for the log-AR(1) class. GARCH recursions start from the
//! stationary variance alpha_0 / (1 - sum(alpha) - sum(beta)).
SimOutput simulate(const ModelSpec& spec, std::size_t n);

//! |x| below this has x^2 outside double range; such entries are dropped.
inline constexpr double kXTiny = 1e-154;

struct LogSquareResult {
  std::vector<double> values;
  std::size_t dropped = 0;
};

//! log(X_t^2) elementwise; near-zero entries are dropped and counted.
LogSquareResult log_square(const std::vector<double>& x);

//! Stationary density of log sigma^2 for the log-AR(1) model:
//! p = 1: N(mean, tau^2/(1-a^2)) at xs[0];
//! p = 2: bivariate normal of (log sigma^2_t, log sigma^2_{t-1}), correlation a.
double true_logvar_density_log_ar1(const ModelSpec& spec, int p, const std::vector<double>& xs);

//! Deterministic seed for a named substream of `base`.
std::uint64_t substream_seed(std::uint64_t base, std::string_view stream);

//! Deterministic Gaussian stream: mt19937_64 plus Box-Muller.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}
  double next_uniform();  //!< uniform on (0, 1]
  double next_gaussian();

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace voldens::models
