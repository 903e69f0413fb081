#include "clgpn/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "clgpn/errors.hpp"

namespace clgpn {

namespace {

int draw_categorical(std::span<const double> weights, double total, Rng& rng) {
  const double u = rng.uniform() * total;
  double acc = 0.0;
  const int K = static_cast<int>(weights.size());
  for (int k = 0; k < K; ++k) {
    acc += weights[static_cast<std::size_t>(k)];
    if (u < acc) return k;
  }
  // u landed in the rounding gap at the top; take the last positive weight
  for (int k = K - 1; k >= 0; --k) {
    if (weights[static_cast<std::size_t>(k)] > 0.0) return k;
  }
  return K - 1;
}

// Transition counts with row totals, updated incrementally as single labels
// are removed and re-inserted during a sweep.
class CountState {
 public:
  CountState(std::span<const int> labels, int K)
      : K_(K), n_(static_cast<std::size_t>(K * K), 0), row_(static_cast<std::size_t>(K), 0) {
    for (std::size_t t = 1; t < labels.size(); ++t) add_transition(labels[t - 1], labels[t], 1);
  }

  void remove(std::span<const int> labels, std::size_t t) { touch(labels, t, -1); }
  void insert(std::span<const int> labels, std::size_t t) { touch(labels, t, +1); }

  // Unnormalized prior factor of xi_t = k with the transitions into and out of t removed.
  void prior_factors(std::span<const int> labels, std::size_t t, double beta, std::span<double> out) const {
    const std::size_t T = labels.size() - 1;
    const double kb = K_ * beta;
    if (T == 0) {
      std::fill(out.begin(), out.end(), 1.0);
      return;
    }
    if (t == 0) {
      const int next = labels[1];
      for (int k = 0; k < K_; ++k) out[static_cast<std::size_t>(k)] = (at(k, next) + beta) / (row(k) + kb);
      return;
    }
    const int prev = labels[t - 1];
    if (t == T) {
      for (int k = 0; k < K_; ++k) out[static_cast<std::size_t>(k)] = at(prev, k) + beta;
      return;
    }
    const int next = labels[t + 1];
    for (int k = 0; k < K_; ++k) {
      // self-loop prev = k = next adds the first transition to n[k][k] before the second
      const double a = (prev == k && k == next) ? 1.0 : 0.0;
      // row k also carries the transition out of t - 1 when prev = k
      const double outgoing = row(k) + (prev == k ? 1.0 : 0.0);
      out[static_cast<std::size_t>(k)] = (at(prev, k) + beta + a) * (at(k, next) + beta) / (outgoing + kb);
    }
  }

 private:
  double at(int k, int h) const { return static_cast<double>(n_[static_cast<std::size_t>(k * K_ + h)]); }
  double row(int k) const { return static_cast<double>(row_[static_cast<std::size_t>(k)]); }

  void add_transition(int from, int to, long delta) {
    n_[static_cast<std::size_t>(from * K_ + to)] += delta;
    row_[static_cast<std::size_t>(from)] += delta;
  }

  void touch(std::span<const int> labels, std::size_t t, long delta) {
    const std::size_t T = labels.size() - 1;
    if (t >= 1) add_transition(labels[t - 1], labels[t], delta);
    if (t < T) add_transition(labels[t], labels[t + 1], delta);
  }

  int K_;
  std::vector<long> n_;
  std::vector<long> row_;
};

void emission_factors(std::size_t t, const StateSequence& s, const CompletedSeries& data,
                      std::span<const RegimeCache> caches, std::span<double> out) {
  const std::size_t K = caches.size();
  if (t == 0) {
    std::fill(out.begin(), out.end(), 1.0);
    return;
  }
  const std::size_t i = t - 1;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    out[k] = augmented_log_emission(caches[k], data.x[i], data.y[i], s.radii[i]);
    top = std::max(top, out[k]);
  }
  for (std::size_t k = 0; k < K; ++k) out[k] = std::exp(out[k] - top);
}

std::vector<RegimeCache> make_caches(std::span<const RegimeParams> params) {
  std::vector<RegimeCache> caches;
  caches.reserve(params.size());
  for (const auto& p : params) caches.emplace_back(p);
  return caches;
}

void check_sizes(const StateSequence& s, const CompletedSeries& data, std::size_t K) {
  if (K == 0) throw InputError("at least one regime is required");
  if (s.labels.size() != s.radii.size() + 1) throw InputError("state sequence: labels must have length T + 1");
  if (data.x.size() != s.radii.size() || data.y.size() != s.radii.size()) {
    throw InputError("completed data length does not match the state sequence");
  }
}

std::vector<double> dirichlet(std::span<const double> alpha, Rng& rng) {
  std::vector<double> g(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    g[i] = rng.gamma(alpha[i]);
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

}  // namespace

void StateSequence::validate(int K) const {
  if (labels.size() != radii.size() + 1) throw InputError("state sequence: labels must have length T + 1");
  for (int l : labels) {
    if (l < 0 || l >= K) throw InputError("state sequence: label " + std::to_string(l) + " outside 0.." + std::to_string(K - 1));
  }
  for (double r : radii) {
    if (!(r > 0.0)) throw InputError("state sequence: radii must be positive");
  }
}

long TransitionCounts::row_total(int k) const {
  long total = 0;
  for (int h = 0; h < K; ++h) total += at(k, h);
  return total;
}

TransitionCounts count_transitions(std::span<const int> labels, int K) {
  if (K < 1) throw InputError("count_transitions: K must be positive");
  if (labels.empty()) throw InputError("count_transitions: empty label sequence");
  TransitionCounts c;
  c.K = K;
  c.n.assign(static_cast<std::size_t>(K * K), 0);
  c.occupancy.assign(static_cast<std::size_t>(K), 0);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const int l = labels[t];
    if (l < 0 || l >= K) {
      throw InputError("count_transitions: label " + std::to_string(l) + " at t=" + std::to_string(t) +
                       " outside 0.." + std::to_string(K - 1));
    }
    ++c.occupancy[static_cast<std::size_t>(l)];
    if (t > 0) ++c.n[static_cast<std::size_t>(labels[t - 1] * K + l)];
  }
  c.last_state = labels.back();
  return c;
}

double collapsed_log_prior(std::span<const int> labels, int K, HyperBeta hb) {
  const TransitionCounts c = count_transitions(labels, K);
  const double beta = hb.beta;
  const double kd = static_cast<double>(K);
  double lp = -std::log(kd) + kd * std::lgamma(kd * beta) - kd * kd * std::lgamma(beta);
  for (int k = 0; k < K; ++k) {
    for (int h = 0; h < K; ++h) lp += std::lgamma(static_cast<double>(c.at(k, h)) + beta);
    // n_k - xi_{T,k} is the number of transitions leaving k
    lp -= std::lgamma(static_cast<double>(c.row_total(k)) + kd * beta);
  }
  return lp;
}

std::vector<double> state_conditional_weights(std::size_t t, const StateSequence& s, const CompletedSeries& data,
                                              std::span<const RegimeParams> params, HyperBeta hb) {
  const std::size_t K = params.size();
  check_sizes(s, data, K);
  if (t >= s.labels.size()) throw InputError("state_conditional_weights: time index out of range");
  s.validate(static_cast<int>(K));

  CountState counts(s.labels, static_cast<int>(K));
  counts.remove(s.labels, t);
  std::vector<double> prior(K), emission(K);
  counts.prior_factors(s.labels, t, hb.beta, prior);
  const auto caches = make_caches(params);
  emission_factors(t, s, data, caches, emission);

  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    prior[k] *= emission[k];
    total += prior[k];
  }
  for (double& w : prior) w /= total;
  return prior;
}

void sample_state_sweep(StateSequence& s, const CompletedSeries& data, std::span<const RegimeParams> params,
                        HyperBeta hb, Rng& rng) {
  const std::size_t K = params.size();
  check_sizes(s, data, K);
  if (K == 1) return;

  CountState counts(s.labels, static_cast<int>(K));
  const auto caches = make_caches(params);
  std::vector<double> prior(K), emission(K);
  for (std::size_t t = 0; t < s.labels.size(); ++t) {
    counts.remove(s.labels, t);
    counts.prior_factors(s.labels, t, hb.beta, prior);
    emission_factors(t, s, data, caches, emission);
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      prior[k] *= emission[k];
      total += prior[k];
    }
    s.labels[t] = draw_categorical(prior, total, rng);
    counts.insert(s.labels, t);
  }
}

std::vector<int> sample_collapsed_prior(std::size_t T, int K, HyperBeta hb, Rng& rng) {
  std::vector<int> labels(T + 1);
  labels[0] = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(K)));
  std::vector<double> n(static_cast<std::size_t>(K * K), 0.0);
  std::vector<double> w(static_cast<std::size_t>(K));
  for (std::size_t t = 1; t <= T; ++t) {
    const int prev = labels[t - 1];
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
      w[static_cast<std::size_t>(k)] = n[static_cast<std::size_t>(prev * K + k)] + hb.beta;
      total += w[static_cast<std::size_t>(k)];
    }
    labels[t] = draw_categorical(w, total, rng);
    n[static_cast<std::size_t>(prev * K + labels[t])] += 1.0;
  }
  return labels;
}

TransitionEstimate recover_transition(const StateSequence& s, int K, HyperBeta hb, Rng& rng) {
  const TransitionCounts c = count_transitions(s.labels, K);
  TransitionEstimate est{Eigen::MatrixXd(K, K), Eigen::VectorXd(K)};
  std::vector<double> alpha(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    for (int h = 0; h < K; ++h) alpha[static_cast<std::size_t>(h)] = hb.beta + static_cast<double>(c.at(k, h));
    const auto row = dirichlet(alpha, rng);
    for (int h = 0; h < K; ++h) est.pi(k, h) = row[static_cast<std::size_t>(h)];
  }
  for (int k = 0; k < K; ++k) alpha[static_cast<std::size_t>(k)] = hb.beta + (s.labels[0] == k ? 1.0 : 0.0);
  const auto p0 = dirichlet(alpha, rng);
  for (int k = 0; k < K; ++k) est.pi0(k) = p0[static_cast<std::size_t>(k)];
  return est;
}

TransitionEstimate posterior_mean_transition(std::span<const int> labels, int K, HyperBeta hb) {
  const TransitionCounts c = count_transitions(labels, K);
  TransitionEstimate est{Eigen::MatrixXd(K, K), Eigen::VectorXd(K)};
  const double kb = K * hb.beta;
  for (int k = 0; k < K; ++k) {
    const double total = static_cast<double>(c.row_total(k)) + kb;
    for (int h = 0; h < K; ++h) est.pi(k, h) = (static_cast<double>(c.at(k, h)) + hb.beta) / total;
    est.pi0(k) = (hb.beta + (labels[0] == k ? 1.0 : 0.0)) / (kb + 1.0);
  }
  return est;
}

double observation_log_density(const Observation& o, const RegimeParams& p) {
  if (o.x && o.y) return clgpn_log_density(*o.x, *o.y, p);
  if (o.x) return pn_log_density(*o.x, p);
  if (o.y) return linear_marginal_log_density(*o.y, p);
  return 0.0;
}

double forward_loglik(const ObservationSeq& obs, std::span<const RegimeParams> params, const Eigen::MatrixXd& pi,
                      const Eigen::VectorXd& pi0) {
  const auto K = static_cast<Eigen::Index>(params.size());
  if (K == 0) throw InputError("forward_loglik: no regimes");
  if (pi.rows() != K || pi.cols() != K || pi0.size() != K) throw InputError("forward_loglik: dimension mismatch");
  constexpr double tol = 1e-8;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (pi.row(k).minCoeff() < 0.0 || std::fabs(pi.row(k).sum() - 1.0) > tol) {
      throw InputError("forward_loglik: transition matrix row " + std::to_string(k) + " is not stochastic");
    }
  }
  if (pi0.minCoeff() < 0.0 || std::fabs(pi0.sum() - 1.0) > tol) {
    throw InputError("forward_loglik: initial distribution is not stochastic");
  }

  Eigen::RowVectorXd alpha = pi0.transpose();
  Eigen::RowVectorXd log_e(K);
  double loglik = 0.0;
  for (const auto& o : obs) {
    alpha = alpha * pi;
    for (Eigen::Index k = 0; k < K; ++k) log_e(k) = observation_log_density(o, params[static_cast<std::size_t>(k)]);
    const double top = log_e.maxCoeff();
    for (Eigen::Index k = 0; k < K; ++k) alpha(k) *= std::exp(log_e(k) - top);
    const double scale = alpha.sum();
    loglik += std::log(scale) + top;
    alpha /= scale;
  }
  return loglik;
}

}  // namespace clgpn
