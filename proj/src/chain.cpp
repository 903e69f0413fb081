#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "clgpn/errors.hpp"
#include "clgpn/parallel.hpp"
#include "clgpn/sampler.hpp"

namespace clgpn {

namespace {

constexpr double kRadiusTarget = 0.44;

double draw_truncated_rho(const Priors& pr, Rng& rng) {
  const double sd = std::sqrt(pr.rho_var);
  for (;;) {
    const double rho = rng.normal(pr.rho_mean, sd);
    if (std::fabs(rho) < 1.0) return rho;
  }
}

RegimeParams draw_from_prior(const Priors& pr, Variant variant, Rng& rng) {
  RegimeParams p;
  p.variant = variant;
  const double mu_sd = std::sqrt(pr.mu_var);
  const double gamma_sd = std::sqrt(pr.gamma_var);
  p.mu1 = rng.normal(pr.mu_mean, mu_sd);
  p.mu2 = rng.normal(pr.mu_mean, mu_sd);
  p.sigma1_sq = rng.inverse_gamma(pr.ig_shape, pr.ig_rate);
  p.rho = draw_truncated_rho(pr, rng);
  p.gamma0 = rng.normal(pr.gamma_mean, gamma_sd);
  p.gamma1 = rng.normal(pr.gamma_mean, gamma_sd);
  p.gamma2 = rng.normal(pr.gamma_mean, gamma_sd);
  p.sigma_y_sq = rng.inverse_gamma(pr.ig_shape, pr.ig_rate);
  p.apply_variant_constraints();
  return p;
}

std::string dump_state(const ChainState& st) {
  std::ostringstream os;
  os << std::setprecision(17) << "chain state at iteration " << st.iteration << ":";
  for (std::size_t k = 0; k < st.params.size(); ++k) {
    os << "\n  regime " << k + 1 << ':';
    const auto a = st.params[k].as_array();
    for (std::size_t i = 0; i < a.size(); ++i) os << ' ' << RegimeParams::kNames[i] << '=' << a[i];
  }
  return os.str();
}

// --- checkpoint helpers -----------------------------------------------------

template <typename T>
void put_vector(std::ostream& os, const std::string& key, const std::vector<T>& v) {
  os << key << '=';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  os << '\n';
}

template <typename T>
std::vector<T> get_vector(const std::string& text) {
  std::istringstream is(text);
  std::vector<T> out;
  T value;
  while (is >> value) out.push_back(value);
  return out;
}

double get_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw InputError("checkpoint: missing key '" + key + "'");
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    return v;
  } catch (const std::exception&) {
    throw InputError("checkpoint: bad number for '" + key + "'");
  }
}

const std::string& get_text(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw InputError("checkpoint: missing key '" + key + "'");
  return it->second;
}

}  // namespace

GibbsChain::GibbsChain(ObservationSeq obs, ChainConfig cfg, Priors priors, Rng rng)
    : obs_(std::move(obs)), cfg_(cfg), priors_(priors), rng_(std::move(rng)) {
  cfg_.validate();
  priors_.validate();
  if (obs_.empty()) throw InputError("cannot run a chain on an empty series");
  initialize();
}

void GibbsChain::initialize() {
  const std::size_t T = obs_.size();
  const int K = cfg_.K;

  std::vector<double> observed_y;
  for (std::size_t i = 0; i < T; ++i) {
    if (obs_[i].y) observed_y.push_back(*obs_[i].y);
    if (obs_[i].x_missing() || obs_[i].y_missing()) missing_.push_back(i);
  }
  double y_fill = 0.0;
  if (!observed_y.empty()) {
    std::vector<double> sorted = observed_y;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    y_fill = sorted[sorted.size() / 2];
  }

  state_.data.x.resize(T);
  state_.data.y.resize(T);
  for (std::size_t i = 0; i < T; ++i) {
    state_.data.x[i] = obs_[i].x ? obs_[i].x->value() : 0.0;
    state_.data.y[i] = obs_[i].y ? *obs_[i].y : y_fill;
  }

  // Labels from quantile bins of y: rank * K / T
  std::vector<std::size_t> order(T);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return state_.data.y[a] < state_.data.y[b]; });
  state_.states.labels.assign(T + 1, 0);
  for (std::size_t rank = 0; rank < T; ++rank) {
    state_.states.labels[order[rank] + 1] = static_cast<int>(rank * static_cast<std::size_t>(K) / T);
  }
  state_.states.labels[0] = state_.states.labels[1];
  state_.states.radii.assign(T, 1.0);

  state_.params.clear();
  for (int k = 0; k < K; ++k) state_.params.push_back(draw_from_prior(priors_, cfg_.variant, rng_));
  const auto stats = regime_stats(state_.states, state_.data, K);
  for (int k = 0; k < K; ++k) {
    auto& p = state_.params[static_cast<std::size_t>(k)];
    const auto& st = stats[static_cast<std::size_t>(k)];
    update_mu(p, st, priors_, rng_);
    update_gamma(p, st, priors_, rng_);
    update_sigma_y(p, st, priors_, rng_);
  }

  state_.sigma_rho.assign(static_cast<std::size_t>(K), BlockProposal{});
  state_.radius.assign(T, AdaptiveScale{});
  state_.iteration = 0;
  if (cfg_.burnin == 0) {
    for (auto& b : state_.sigma_rho) b.frozen = true;
  }
}

void GibbsChain::update_radii_and_missing(std::span<const RegimeCache> caches) {
  auto& st = state_;
  const std::size_t T = obs_.size();
  for (std::size_t i = 0; i < T; ++i) {
    if (obs_[i].x_missing()) continue;  // drawn jointly with x below
    const RegimeCache& rc = caches[static_cast<std::size_t>(st.states.labels[i + 1])];
    const auto& p = rc.p;
    const double cx = std::cos(st.data.x[i]);
    const double sx = std::sin(st.data.x[i]);
    const double c = p.gamma1 * cx + p.gamma2 * sx;
    const double wsw = rc.s11 * cx * cx + 2.0 * rc.s12 * cx * sx + rc.s22 * sx * sx;
    const double wsmu = (rc.s11 * cx + rc.s12 * sx) * p.mu1 + (rc.s12 * cx + rc.s22 * sx) * p.mu2;
    const double v = 1.0 / (c * c * rc.inv_sigma_y_sq + wsw);
    const double m = v * (c * (st.data.y[i] - p.gamma0) * rc.inv_sigma_y_sq + wsmu);
    if (cfg_.exact_radius) {
      st.states.radii[i] = sample_radius_exact(m, v, rng_);
    } else {
      st.states.radii[i] = update_radius(st.states.radii[i], m, v, st.radius[i], rng_);
    }
  }
  for (std::size_t i : missing_) {
    const auto& p = caches[static_cast<std::size_t>(st.states.labels[i + 1])].p;
    const ImputedPoint ip = impute_missing(obs_[i], st.states.radii[i], p, rng_);
    st.data.x[i] = ip.x;
    st.data.y[i] = ip.y;
    st.states.radii[i] = ip.r;
  }
}

void GibbsChain::update_regimes() {
  auto& st = state_;
  const auto stats = regime_stats(st.states, st.data, cfg_.K);
  for (std::size_t k = 0; k < st.params.size(); ++k) {
    auto& p = st.params[k];
    update_mu(p, stats[k], priors_, rng_);
    update_gamma(p, stats[k], priors_, rng_);
    update_sigma_y(p, stats[k], priors_, rng_);
    if (cfg_.variant != Variant::CLDPN) update_sigma1_rho(p, stats[k], priors_, st.sigma_rho[k], rng_);
    if (!p.is_valid()) throw NumericalError("invalid parameters after update; " + dump_state(st));
  }
}

void GibbsChain::iterate() {
  auto& st = state_;
  ++st.iteration;
  sample_state_sweep(st.states, st.data, st.params, priors_.hyper_beta(), rng_);

  std::vector<RegimeCache> caches;
  caches.reserve(st.params.size());
  for (const auto& p : st.params) caches.emplace_back(p);
  update_radii_and_missing(caches);
  update_regimes();

  if (st.iteration <= cfg_.burnin) {
    if (st.iteration % cfg_.adapt_window == 0) {
      for (auto& b : st.sigma_rho) b.scale.adapt(cfg_.target_accept);
      for (auto& a : st.radius) a.adapt(kRadiusTarget);
    }
    if (st.iteration == cfg_.burnin) {
      for (auto& b : st.sigma_rho) {
        b.frozen = true;
        b.scale.reset_totals();
      }
      for (auto& a : st.radius) a.reset_totals();
    }
  }
}

Draw GibbsChain::snapshot() const {
  Draw d;
  d.iteration = state_.iteration;
  d.params = state_.params;
  d.states = state_.states;
  d.imputed.reserve(missing_.size());
  for (std::size_t i : missing_) d.imputed.push_back({i + 1, state_.data.x[i], state_.data.y[i]});
  d.log_posterior = log_posterior(state_.params, state_.states, state_.data, priors_);
  if (!std::isfinite(d.log_posterior)) throw NumericalError("non-finite log posterior; " + dump_state(state_));
  return d;
}

ChainOutput GibbsChain::run() {
  ChainOutput out;
  out.K = cfg_.K;
  out.variant = cfg_.variant;
  out.draws.reserve(cfg_.retained());
  while (state_.iteration < cfg_.iterations) {
    iterate();
    if (state_.iteration > cfg_.burnin && (state_.iteration - cfg_.burnin) % cfg_.thin == 0) {
      out.draws.push_back(snapshot());
    }
  }
  for (const auto& b : state_.sigma_rho) out.acceptance.sigma_rho.push_back(b.scale.rate());
  long accepted = 0;
  long tried = 0;
  for (const auto& a : state_.radius) {
    accepted += a.accepted;
    tried += a.tried;
  }
  out.acceptance.radius = tried > 0 ? static_cast<double>(accepted) / static_cast<double>(tried) : 0.0;
  if (!out.draws.empty()) out.map_index = map_index(out);
  return out;
}

void GibbsChain::save_checkpoint(std::ostream& os) const {
  const auto& st = state_;
  os << std::setprecision(17);
  os << "iteration=" << st.iteration << '\n';
  os << "K=" << cfg_.K << '\n';
  os << "T=" << obs_.size() << '\n';
  for (std::size_t k = 0; k < st.params.size(); ++k) {
    const auto a = st.params[k].as_array();
    for (std::size_t i = 0; i < a.size(); ++i) {
      os << "regime." << k + 1 << '.' << RegimeParams::kNames[i] << '=' << a[i] << '\n';
    }
    const auto& b = st.sigma_rho[k];
    os << "adapt." << k + 1 << ".log_scale=" << b.scale.log_scale << '\n';
    os << "adapt." << k + 1 << ".counters=" << b.scale.window_accepted << ' ' << b.scale.window_tried << ' '
       << b.scale.batches << ' ' << b.scale.accepted << ' ' << b.scale.tried << '\n';
    os << "adapt." << k + 1 << ".n=" << b.n << '\n';
    os << "adapt." << k + 1 << ".mean=" << b.mean(0) << ' ' << b.mean(1) << '\n';
    os << "adapt." << k + 1 << ".m2=" << b.m2(0, 0) << ' ' << b.m2(0, 1) << ' ' << b.m2(1, 0) << ' ' << b.m2(1, 1)
       << '\n';
    os << "adapt." << k + 1 << ".frozen=" << (b.frozen ? 1 : 0) << '\n';
  }
  put_vector(os, "labels", st.states.labels);
  put_vector(os, "radii", st.states.radii);
  put_vector(os, "data.x", st.data.x);
  put_vector(os, "data.y", st.data.y);
  std::vector<double> log_scales;
  std::vector<long> counters;
  for (const auto& a : st.radius) {
    log_scales.push_back(a.log_scale);
    counters.insert(counters.end(), {a.window_accepted, a.window_tried, a.batches, a.accepted, a.tried});
  }
  put_vector(os, "radius.log_scale", log_scales);
  put_vector(os, "radius.counters", counters);
  os << "rng=" << rng_.save() << '\n';
}

void GibbsChain::load_checkpoint(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("checkpoint line " + std::to_string(line_no) + ": expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const std::size_t T = obs_.size();
  const int K = cfg_.K;
  if (static_cast<int>(get_double(kv, "K")) != K || static_cast<std::size_t>(get_double(kv, "T")) != T) {
    throw InputError("checkpoint: K or T does not match the current run");
  }

  ChainState st;
  st.iteration = static_cast<std::size_t>(get_double(kv, "iteration"));
  for (int k = 1; k <= K; ++k) {
    std::array<double, RegimeParams::kSize> a{};
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = get_double(kv, "regime." + std::to_string(k) + '.' + std::string(RegimeParams::kNames[i]));
    }
    st.params.push_back(RegimeParams::from_array(a, cfg_.variant));
    st.params.back().validate();

    BlockProposal b;
    const std::string pre = "adapt." + std::to_string(k) + '.';
    b.scale.log_scale = get_double(kv, pre + "log_scale");
    const auto c = get_vector<long>(get_text(kv, pre + "counters"));
    if (c.size() != 5) throw InputError("checkpoint: bad adaptation counters");
    b.scale.window_accepted = c[0];
    b.scale.window_tried = c[1];
    b.scale.batches = c[2];
    b.scale.accepted = c[3];
    b.scale.tried = c[4];
    b.n = static_cast<long>(get_double(kv, pre + "n"));
    const auto mean = get_vector<double>(get_text(kv, pre + "mean"));
    const auto m2 = get_vector<double>(get_text(kv, pre + "m2"));
    if (mean.size() != 2 || m2.size() != 4) throw InputError("checkpoint: bad adaptation moments");
    b.mean << mean[0], mean[1];
    b.m2 << m2[0], m2[1], m2[2], m2[3];
    b.frozen = get_double(kv, pre + "frozen") != 0.0;
    st.sigma_rho.push_back(b);
  }
  st.states.labels = get_vector<int>(get_text(kv, "labels"));
  st.states.radii = get_vector<double>(get_text(kv, "radii"));
  st.data.x = get_vector<double>(get_text(kv, "data.x"));
  st.data.y = get_vector<double>(get_text(kv, "data.y"));
  st.states.validate(K);
  if (st.states.radii.size() != T || st.data.x.size() != T || st.data.y.size() != T) {
    throw InputError("checkpoint: series length mismatch");
  }
  const auto log_scales = get_vector<double>(get_text(kv, "radius.log_scale"));
  const auto counters = get_vector<long>(get_text(kv, "radius.counters"));
  if (log_scales.size() != T || counters.size() != 5 * T) throw InputError("checkpoint: bad radius adaptation");
  st.radius.resize(T);
  for (std::size_t i = 0; i < T; ++i) {
    auto& a = st.radius[i];
    a.log_scale = log_scales[i];
    a.window_accepted = counters[5 * i];
    a.window_tried = counters[5 * i + 1];
    a.batches = counters[5 * i + 2];
    a.accepted = counters[5 * i + 3];
    a.tried = counters[5 * i + 4];
  }
  rng_.restore(get_text(kv, "rng"));
  state_ = std::move(st);
}

ChainOutput run_chain(const ObservationSeq& obs, const ChainConfig& cfg, const Priors& priors, Rng rng) {
  GibbsChain chain(obs, cfg, priors, std::move(rng));
  return chain.run();
}

std::vector<ChainOutput> run_chains(const ObservationSeq& obs, const ChainConfig& cfg, const Priors& priors,
                                    std::size_t n_chains, std::size_t workers) {
  std::vector<ChainOutput> outputs(n_chains);
  parallel_for(n_chains, workers, [&](std::size_t i) {
    outputs[i] = run_chain(obs, cfg, priors, Rng::stream(cfg.seed, i));
  });
  return outputs;
}

std::size_t map_index(const ChainOutput& out) {
  if (out.draws.empty()) throw InputError("map_estimate: chain output has no draws");
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.draws.size(); ++i) {
    if (out.draws[i].log_posterior > out.draws[best].log_posterior) best = i;
  }
  return best;
}

const Draw& map_estimate(const ChainOutput& out) { return out.draws[map_index(out)]; }

}  // namespace clgpn
