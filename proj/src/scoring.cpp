#include "clgpn/scoring.hpp"

#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <numeric>

#include "clgpn/errors.hpp"

namespace clgpn {

namespace {

void require_samples(std::size_t n, std::size_t minimum, const char* what) {
  if (n < minimum) {
    throw InputError(std::string(what) + ": needs at least " + std::to_string(minimum) + " samples");
  }
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

int param_count(Variant variant, int K) {
  if (K < 1) throw InputError("param_count: K must be positive");
  const int per_regime = variant == Variant::CLGPN ? 8 : 6;
  return per_regime * K + K * (K - 1) + (K - 1);
}

CriterionReport criteria(const Draw& map, const ObservationSeq& obs, Variant variant, HyperBeta hb) {
  const int K = static_cast<int>(map.params.size());
  const double T = static_cast<double>(obs.size());
  const TransitionEstimate tr = posterior_mean_transition(map.states.labels, K, hb);

  CriterionReport rep;
  rep.param_count = param_count(variant, K);
  rep.map_loglik = forward_loglik(obs, map.params, tr.pi, tr.pi0);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    rep.classified_loglik +=
        observation_log_density(obs[i], map.params[static_cast<std::size_t>(map.states.labels[i + 1])]);
  }
  rep.state_log_prior = collapsed_log_prior(map.states.labels, K, hb);
  const double p = rep.param_count;
  rep.aic = -2.0 * rep.map_loglik + 2.0 * p;
  rep.bic = -2.0 * rep.map_loglik + p * std::log(T);
  rep.icl = -2.0 * rep.classified_loglik - 2.0 * rep.state_log_prior + p * std::log(T);
  return rep;
}

double crps_linear(std::span<const double> samples, double y) {
  require_samples(samples.size(), 2, "crps_linear");
  const double n = static_cast<double>(samples.size());
  double to_truth = 0.0;
  for (double s : samples) to_truth += std::fabs(s - y);
  // sum over ordered pairs |X_i - X_j| = 2 sum_i (2i - n + 1) X_(i) on sorted samples
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double pairs = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) pairs += (2.0 * static_cast<double>(i) - n + 1.0) * sorted[i];
  pairs *= 2.0;
  return to_truth / n - 0.5 * pairs / (n * n);
}

double crps_circular(std::span<const Angle> samples, Angle x) {
  require_samples(samples.size(), 2, "crps_circular");
  const double n = static_cast<double>(samples.size());
  double to_truth = 0.0;
  for (Angle s : samples) to_truth += arc_distance(s, x);
  double pairs = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) pairs += arc_distance(samples[i], samples[j]);
  }
  pairs *= 2.0;
  return to_truth / n - 0.5 * pairs / (n * n);
}

double ape(std::span<const Angle> samples, Angle x) {
  require_samples(samples.size(), 1, "ape");
  double total = 0.0;
  for (Angle s : samples) total += arc_distance(s, x);
  return total / static_cast<double>(samples.size());
}

double mean_cosine_distance(std::span<const Angle> samples, Angle x) {
  require_samples(samples.size(), 1, "mean_cosine_distance");
  double total = 0.0;
  for (Angle s : samples) total += 1.0 - std::cos(s.value() - x.value());
  return total / static_cast<double>(samples.size());
}

double mse(std::span<const double> samples, double y) {
  require_samples(samples.size(), 1, "mse");
  double total = 0.0;
  for (double s : samples) total += (s - y) * (s - y);
  return total / static_cast<double>(samples.size());
}

ScoreReport score_imputations(const ChainOutput& out, const ObservationSeq& observed, const ObservationSeq& truth) {
  if (observed.size() != truth.size()) throw InputError("score_imputations: series lengths differ");
  if (out.draws.empty()) throw InputError("score_imputations: no draws");
  ScoreReport rep;
  const auto& slots = out.draws.front().imputed;
  std::vector<Angle> xs;
  std::vector<double> ys;
  for (std::size_t j = 0; j < slots.size(); ++j) {
    const std::size_t i = slots[j].time - 1;
    const Observation& o = observed[i];
    const Observation& t = truth[i];
    if (o.x_missing() && t.x) {
      xs.clear();
      for (const auto& d : out.draws) xs.emplace_back(d.imputed[j].x);
      rep.crps_circular += crps_circular(xs, *t.x);
      rep.ape += ape(xs, *t.x);
      ++rep.circular_points;
    }
    if (o.y_missing() && t.y) {
      ys.clear();
      for (const auto& d : out.draws) ys.push_back(d.imputed[j].y);
      rep.crps_linear += crps_linear(ys, *t.y);
      rep.mse += mse(ys, *t.y);
      ++rep.linear_points;
    }
  }
  if (rep.circular_points > 0) {
    rep.crps_circular /= static_cast<double>(rep.circular_points);
    rep.ape /= static_cast<double>(rep.circular_points);
  }
  if (rep.linear_points > 0) {
    rep.crps_linear /= static_cast<double>(rep.linear_points);
    rep.mse /= static_cast<double>(rep.linear_points);
  }
  return rep;
}

double mardia_correlation_sq(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("mardia_correlation_sq: length mismatch");
  std::vector<double> c(x.size()), s(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    c[i] = std::cos(x[i]);
    s[i] = std::sin(x[i]);
  }
  const double rxc = pearson(y, c);
  const double rxs = pearson(y, s);
  const double rcs = pearson(c, s);
  const double value = (rxc * rxc + rxs * rxs - 2.0 * rxc * rxs * rcs) / (1.0 - rcs * rcs);
  return std::clamp(value, 0.0, 1.0);
}

double f_statistic(double corr_sq, std::size_t n) {
  return corr_sq * (static_cast<double>(n) - 1.0) / (1.0 - corr_sq);
}

double f_critical_95(std::size_t T) {
  if (T <= 3) throw InputError("f_critical_95: needs T > 3");
  const boost::math::fisher_f dist(2.0, static_cast<double>(T - 3));
  return boost::math::quantile(dist, 0.95);
}

RegimeSummary regime_summary(const RegimeParams& p, std::span<const double> x, std::span<const double> y,
                             std::size_t mc_draws, Rng& rng) {
  if (mc_draws < 10000) throw InputError("regime_summary: needs at least 10^4 Monte Carlo draws");
  if (x.size() != y.size()) throw InputError("regime_summary: length mismatch");
  RegimeSummary s;
  s.lin_mean = linear_marginal_mean(p);
  s.lin_var = linear_marginal_variance(p);
  double c = 0.0, sn = 0.0;
  for (std::size_t i = 0; i < mc_draws; ++i) {
    const auto z = sample_latent(p, rng);
    const double r = std::hypot(z[0], z[1]);
    if (r == 0.0) continue;
    c += z[0] / r;
    sn += z[1] / r;
  }
  c /= static_cast<double>(mc_draws);
  sn /= static_cast<double>(mc_draws);
  s.circ_mean = Angle(std::atan2(sn, c));
  s.concentration = std::min(1.0, std::hypot(c, sn));
  s.n = x.size();
  if (x.size() >= 4) {
    s.cl_corr_sq = mardia_correlation_sq(x, y);
    s.f_stat = f_statistic(*s.cl_corr_sq, x.size());
  }
  return s;
}

}  // namespace clgpn
