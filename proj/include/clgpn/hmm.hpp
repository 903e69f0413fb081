#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "clgpn/circular.hpp"
#include "clgpn/rng.hpp"

namespace clgpn {

/// One time point; either coordinate may be missing.
struct Observation {
  std::optional<Angle> x;
  std::optional<double> y;

  bool x_missing() const { return !x.has_value(); }
  bool y_missing() const { return !y.has_value(); }
  bool fully_missing() const { return !x && !y; }
};

/// Observations for t = 1..T (element i holds time i + 1).
using ObservationSeq = std::vector<Observation>;

/// Complete values of every emitting time (observed or imputed); index i is time i + 1.
struct CompletedSeries {
  std::vector<double> x;  // radians in [0, 2 pi)
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
};

/// Hidden labels xi_0..xi_T (0-based regime indices) and latent radii r_1..r_T
/// (radii[i] is r at time i + 1). xi_0 has no observation.
struct StateSequence {
  std::vector<int> labels;
  std::vector<double> radii;

  std::size_t horizon() const { return radii.size(); }  // T
  void validate(int K) const;
};

struct TransitionCounts {
  int K = 0;
  std::vector<long> n;          // K x K row-major, n[k*K + h] = #{t : xi_{t-1} = k, xi_t = h}
  std::vector<long> occupancy;  // visits over t = 0..T
  int last_state = 0;

  long at(int k, int h) const { return n[static_cast<std::size_t>(k * K + h)]; }
  long row_total(int k) const;
};

struct HyperBeta {
  double beta = 1.0;
};

TransitionCounts count_transitions(std::span<const int> labels, int K);
inline TransitionCounts count_transitions(const StateSequence& s, int K) { return count_transitions(s.labels, K); }

/// log f(xi) with the transition matrix and the initial distribution integrated
/// out under symmetric Dirichlet(beta) priors.
double collapsed_log_prior(std::span<const int> labels, int K, HyperBeta hb);
inline double collapsed_log_prior(const StateSequence& s, int K, HyperBeta hb) {
  return collapsed_log_prior(s.labels, K, hb);
}

/// Augmented emission log f(r_t, x_t, y_t | regime) used by the state updates.
inline double augmented_log_emission(const RegimeCache& rc, double x, double y, double r) {
  const double z1 = r * std::cos(x);
  const double z2 = r * std::sin(x);
  return rc.log_latent_density(z1, z2) + rc.log_linear_density(y, z1, z2) + std::log(r);
}

/// Normalized full-conditional probabilities of xi_t (t in 0..T) given all
/// other labels, radii, completed data and regime parameters.
std::vector<double> state_conditional_weights(std::size_t t, const StateSequence& s, const CompletedSeries& data,
                                              std::span<const RegimeParams> params, HyperBeta hb);

/// One systematic Gibbs sweep over t = 0..T.
void sample_state_sweep(StateSequence& s, const CompletedSeries& data, std::span<const RegimeParams> params,
                        HyperBeta hb, Rng& rng);

/// Draw labels from the collapsed prior (sequential Polya urn).
std::vector<int> sample_collapsed_prior(std::size_t T, int K, HyperBeta hb, Rng& rng);

struct TransitionEstimate {
  Eigen::MatrixXd pi;   // K x K, rows sum to 1
  Eigen::VectorXd pi0;  // K
};

/// One draw of (pi, pi0) from their Dirichlet full conditionals given the labels.
TransitionEstimate recover_transition(const StateSequence& s, int K, HyperBeta hb, Rng& rng);

/// Dirichlet posterior means of (pi, pi0) given the labels.
TransitionEstimate posterior_mean_transition(std::span<const int> labels, int K, HyperBeta hb);

/// log density of one observation under a regime; missing coordinates are
/// marginalized, a fully missing observation contributes 0.
double observation_log_density(const Observation& o, const RegimeParams& p);

/// log f(x, y | params, pi, pi0) by the scaled forward recursion. xi_0 is
/// non-emitting: pi0 is propagated through one transition before t = 1.
double forward_loglik(const ObservationSeq& obs, std::span<const RegimeParams> params, const Eigen::MatrixXd& pi,
                      const Eigen::VectorXd& pi0);

}  // namespace clgpn
