#pragma once

#include <optional>
#include <span>
#include <vector>

#include "clgpn/circular.hpp"
#include "clgpn/hmm.hpp"
#include "clgpn/sampler.hpp"

namespace clgpn {

/// Number of free parameters: regime parameters plus K(K-1) transition and
/// K-1 initial-distribution probabilities.
int param_count(Variant variant, int K);

struct CriterionReport {
  double aic = 0.0;
  double bic = 0.0;
  double icl = 0.0;
  int param_count = 0;
  double map_loglik = 0.0;         // forward log likelihood at the MAP
  double classified_loglik = 0.0;  // sum_t log f(x_t, y_t | xi_t, Psi) at the MAP
  double state_log_prior = 0.0;    // collapsed log prior of the MAP labels
};

/// AIC, BIC and ICL at a MAP draw. Transition probabilities are the Dirichlet
/// posterior means given the MAP labels. All three are minimized.
CriterionReport criteria(const Draw& map, const ObservationSeq& obs, Variant variant, HyperBeta hb);

struct ScoreReport {
  double crps_circular = 0.0;
  double crps_linear = 0.0;
  double ape = 0.0;
  double mse = 0.0;
  std::size_t circular_points = 0;
  std::size_t linear_points = 0;
};

/// Sample CRPS: mean |X - y| - 1/2 mean over all ordered pairs |X - X'|.
double crps_linear(std::span<const double> samples, double y);
/// Same estimator with shortest-arc distance.
double crps_circular(std::span<const Angle> samples, Angle x);
/// Mean shortest-arc distance between samples and the truth.
double ape(std::span<const Angle> samples, Angle x);
double mse(std::span<const double> samples, double y);
/// Mean of 1 - cos(sample - truth).
double mean_cosine_distance(std::span<const Angle> samples, Angle x);

/// Average scores of the imputed values over every masked coordinate, using the
/// complete series `truth` (element i is time i + 1).
ScoreReport score_imputations(const ChainOutput& out, const ObservationSeq& observed, const ObservationSeq& truth);

struct RegimeSummary {
  Angle circ_mean;
  double concentration = 0.0;
  double lin_mean = 0.0;
  double lin_var = 0.0;
  std::size_t n = 0;
  std::optional<double> cl_corr_sq;  // absent when fewer than 4 classified points
  std::optional<double> f_stat;
};

/// Squared circular-linear correlation of y with (cos x, sin x).
double mardia_correlation_sq(std::span<const double> x, std::span<const double> y);

/// rho^2 (n - 1) / (1 - rho^2)
double f_statistic(double corr_sq, std::size_t n);

/// 95th percentile of F(2, T - 3).
double f_critical_95(std::size_t T);

/// Per-regime interpretable features; `x`, `y` are the observations classified
/// to the regime (pairs with both coordinates observed).
RegimeSummary regime_summary(const RegimeParams& p, std::span<const double> x, std::span<const double> y,
                             std::size_t mc_draws, Rng& rng);

}  // namespace clgpn
