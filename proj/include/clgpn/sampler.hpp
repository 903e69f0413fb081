#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "clgpn/circular.hpp"
#include "clgpn/hmm.hpp"
#include "clgpn/rng.hpp"

namespace clgpn {

/// Regime-independent hyperparameters. Normal priors are parameterized by
/// variance; the inverse gammas by shape and rate.
struct Priors {
  double mu_mean = 0.0;
  double mu_var = 5.0;
  double gamma_mean = 0.0;
  double gamma_var = 5.0;
  double rho_mean = 0.0;
  double rho_var = 5.0;  // truncated to (-1, 1)
  double ig_shape = 2.0;
  double ig_rate = 1.0;
  double beta = 1.0;

  void validate() const;
  HyperBeta hyper_beta() const { return HyperBeta{beta}; }
};

struct ChainConfig {
  std::size_t iterations = 50000;
  std::size_t burnin = 20000;
  std::size_t thin = 10;
  std::uint64_t seed = 1;
  std::size_t adapt_window = 50;
  double target_accept = 0.35;  // (sigma1_sq, rho) block; radii use 0.44
  int K = 2;
  Variant variant = Variant::CLGPN;
  bool exact_radius = false;  // inverse-CDF draws of r instead of Metropolis

  void validate() const;
  std::size_t retained() const { return (iterations - burnin) / thin; }
};

/// Completed value of one partially or fully missing observation.
struct Imputed {
  std::size_t time = 0;  // 1-based
  double x = 0.0;
  double y = 0.0;
};

struct Draw {
  std::size_t iteration = 0;
  std::vector<RegimeParams> params;
  StateSequence states;
  std::vector<Imputed> imputed;
  double log_posterior = 0.0;
};

struct AcceptanceRates {
  std::vector<double> sigma_rho;  // per regime, post burn-in
  double radius = 0.0;            // pooled over times, post burn-in
};

struct ChainOutput {
  int K = 0;
  Variant variant = Variant::CLGPN;
  std::vector<Draw> draws;
  AcceptanceRates acceptance;
  std::size_t map_index = 0;
};

/// Sufficient statistics of the emitting times currently assigned to one regime.
struct RegimeStats {
  double n = 0.0;
  Eigen::Vector2d sum_z = Eigen::Vector2d::Zero();
  Eigen::Matrix2d sum_zz = Eigen::Matrix2d::Zero();
  Eigen::Matrix3d xtx = Eigen::Matrix3d::Zero();  // design rows (1, z1, z2)
  Eigen::Vector3d xty = Eigen::Vector3d::Zero();
  double yty = 0.0;

  void add(double z1, double z2, double y);
  /// sum (z - mu)(z - mu)'
  Eigen::Matrix2d scatter_about(double mu1, double mu2) const;
  /// sum of squared regression residuals under (gamma0, gamma1, gamma2)
  double residual_ss(const RegimeParams& p) const;
};

std::vector<RegimeStats> regime_stats(const StateSequence& s, const CompletedSeries& data, int K);

struct GaussianConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// N2 full conditional of (mu1, mu2).
GaussianConditional mu_conditional(const RegimeStats& st, const RegimeParams& p, const Priors& pr);
/// Full conditional of the free regression coefficients: (gamma0, gamma1, gamma2),
/// or gamma0 alone under the independence variant.
GaussianConditional gamma_conditional(const RegimeStats& st, const RegimeParams& p, const Priors& pr);

struct InverseGammaParams {
  double shape = 0.0;
  double rate = 0.0;
};
InverseGammaParams sigma_y_conditional(const RegimeStats& st, const RegimeParams& p, const Priors& pr);

void update_mu(RegimeParams& p, const RegimeStats& st, const Priors& pr, Rng& rng);
void update_gamma(RegimeParams& p, const RegimeStats& st, const Priors& pr, Rng& rng);
void update_sigma_y(RegimeParams& p, const RegimeStats& st, const Priors& pr, Rng& rng);

/// Random-walk proposal scale tuned by Robbins-Monro during burn-in.
struct AdaptiveScale {
  double log_scale = 0.0;
  long window_accepted = 0;
  long window_tried = 0;
  long batches = 0;
  long accepted = 0;  // counters since the last reset
  long tried = 0;

  void record(bool accept);
  /// Closes a window: moves log_scale toward the target acceptance rate.
  void adapt(double target);
  void reset_totals() { accepted = tried = 0; }
  double rate() const { return tried > 0 ? static_cast<double>(accepted) / static_cast<double>(tried) : 0.0; }
};

/// Adaptive state of the joint (log sigma1_sq, atanh rho) block: a scale plus
/// the running covariance of the transformed draws seen during burn-in.
struct BlockProposal {
  AdaptiveScale scale;
  long n = 0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d m2 = Eigen::Matrix2d::Zero();
  bool frozen = false;

  void observe(const Eigen::Vector2d& u);
  Eigen::Matrix2d covariance() const;
};

/// log of the (sigma1_sq, rho) full conditional on the transformed scale,
/// Jacobian included.
double sigma_rho_log_target(double log_sigma1_sq, double atanh_rho, const RegimeStats& st, const RegimeParams& p,
                            const Priors& pr);

/// One Metropolis-Hastings step on (log sigma1_sq, atanh rho). Returns true on acceptance.
bool update_sigma1_rho(RegimeParams& p, const RegimeStats& st, const Priors& pr, BlockProposal& prop, Rng& rng);

/// log density (up to a constant) of log r when r has full conditional r phi1(r | m, v) on r > 0.
double radius_log_target(double log_r, double m, double v);

/// One MH step on log r; returns the new radius and updates the acceptance counters.
double update_radius(double r, double m, double v, AdaptiveScale& scale, Rng& rng);

/// Exact draw from r phi1(r | m, v) on r > 0 by numerical inversion of its CDF.
double sample_radius_exact(double m, double v, Rng& rng);

struct ImputedPoint {
  double x = 0.0;
  double y = 0.0;
  double r = 1.0;
};

/// Draw the missing coordinate(s) of one observation. `r` is the current radius,
/// used only when just y is missing.
ImputedPoint impute_missing(const Observation& o, double r, const RegimeParams& p, Rng& rng);

/// Log of the unnormalized posterior of (Psi, xi, r) given completed data.
double log_posterior(std::span<const RegimeParams> params, const StateSequence& s, const CompletedSeries& data,
                     const Priors& pr);
double log_prior_params(const RegimeParams& p, const Priors& pr);

/// Full mutable state of one chain.
struct ChainState {
  std::size_t iteration = 0;
  std::vector<RegimeParams> params;
  StateSequence states;
  CompletedSeries data;
  std::vector<BlockProposal> sigma_rho;
  std::vector<AdaptiveScale> radius;
};

/// Collapsed Gibbs / adaptive Metropolis sampler for one chain. Sweep order:
/// labels, radii, missing values, then per regime mu, gamma, sigma_y_sq,
/// (sigma1_sq, rho).
class GibbsChain {
 public:
  GibbsChain(ObservationSeq obs, ChainConfig cfg, Priors priors, Rng rng);

  void iterate();
  ChainOutput run();

  ChainState& state() { return state_; }
  const ChainState& state() const { return state_; }
  const ObservationSeq& observations() const { return obs_; }
  const ChainConfig& config() const { return cfg_; }
  Rng& rng() { return rng_; }

  Draw snapshot() const;

  /// Plain-text checkpoint: one "key=value" line per scalar, vectors space
  /// separated, matrices row-major.
  void save_checkpoint(std::ostream& os) const;
  void load_checkpoint(std::istream& is);

 private:
  void initialize();
  void update_radii_and_missing(std::span<const RegimeCache> caches);
  void update_regimes();

  ObservationSeq obs_;
  ChainConfig cfg_;
  Priors priors_;
  Rng rng_;
  ChainState state_;
  std::vector<std::size_t> missing_;  // 0-based indices into obs_
};

ChainOutput run_chain(const ObservationSeq& obs, const ChainConfig& cfg, const Priors& priors, Rng rng);

/// Independent chains on a bounded worker pool; chain i uses Rng::stream(cfg.seed, i).
std::vector<ChainOutput> run_chains(const ObservationSeq& obs, const ChainConfig& cfg, const Priors& priors,
                                    std::size_t n_chains, std::size_t workers = 0);

/// Index of the retained draw with maximal log posterior (earliest on ties).
std::size_t map_index(const ChainOutput& out);
const Draw& map_estimate(const ChainOutput& out);

/// Relabel a draw: new regime j takes old regime perm[j]; labels remapped to match.
Draw permute_draw(const Draw& d, std::span<const int> perm);

/// Permutation (new j <- old perm[j]) minimizing the squared distance between
/// the draw's regime parameter vectors and the pivot's.
std::vector<int> best_permutation(std::span<const RegimeParams> draw, std::span<const RegimeParams> pivot);

/// Relabel every draw to best match `pivot`.
ChainOutput align_to_pivot(const ChainOutput& out, std::span<const RegimeParams> pivot);

/// Align every draw to the MAP draw.
ChainOutput pivotal_reorder(const ChainOutput& out);

}  // namespace clgpn
