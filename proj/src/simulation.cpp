#include "clgpn/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <ostream>

#include "clgpn/errors.hpp"
#include "clgpn/parallel.hpp"
#include "clgpn/scoring.hpp"

namespace clgpn {

SchemeId parse_scheme(std::string_view name) {
  if (name == "a" || name == "A") return SchemeId::A;
  if (name == "b" || name == "B") return SchemeId::B;
  if (name == "c" || name == "C") return SchemeId::C;
  throw InputError("unknown scheme '" + std::string(name) + "' (expected a, b or c)");
}

char to_char(SchemeId id) {
  switch (id) {
    case SchemeId::A:
      return 'a';
    case SchemeId::B:
      return 'b';
    case SchemeId::C:
      return 'c';
  }
  return 'a';
}

Scheme make_scheme(SchemeId id) {
  // Columns are regimes 1..3.
  constexpr std::array<double, 3> mu1 = {0.1, 0.1, 0.0};
  constexpr std::array<double, 3> mu2 = {0.1, -1.0, -0.1};
  constexpr std::array<double, 3> gamma1 = {1.0, 0.0, 1.0};
  constexpr std::array<double, 3> gamma2 = {0.0, -1.0, 1.0};
  constexpr std::array<double, 3> sigma_y_sq = {0.1, 0.2, 0.5};
  constexpr std::array<double, 3> sigma1_sq_ab = {1.0, 2.0, 0.1};
  constexpr std::array<double, 3> rho_ab = {0.9, -0.9, 0.2};
  constexpr std::array<double, 3> gamma0_a = {5.0, 0.0, -5.0};
  constexpr std::array<double, 3> gamma0_bc = {1.0, 0.0, -1.0};

  Scheme s;
  s.id = id;
  s.initial_state = 0;
  s.transition << 0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8;
  for (std::size_t k = 0; k < 3; ++k) {
    RegimeParams& p = s.regimes[k];
    p.mu1 = mu1[k];
    p.mu2 = mu2[k];
    p.gamma1 = gamma1[k];
    p.gamma2 = gamma2[k];
    p.sigma_y_sq = sigma_y_sq[k];
    if (id == SchemeId::C) {
      p.variant = Variant::CLDPN;
      p.sigma1_sq = 1.0;
      p.rho = 0.0;
    } else {
      p.variant = Variant::CLGPN;
      p.sigma1_sq = sigma1_sq_ab[k];
      p.rho = rho_ab[k];
    }
    p.gamma0 = id == SchemeId::A ? gamma0_a[k] : gamma0_bc[k];
  }
  return s;
}

SimulatedSeries generate(const Scheme& scheme, std::size_t T, std::uint64_t seed) {
  Rng rng(seed);
  SimulatedSeries out;
  out.states.resize(T + 1);
  out.obs.resize(T);
  out.radii.resize(T);
  out.states[0] = scheme.initial_state;
  for (std::size_t t = 1; t <= T; ++t) {
    const int prev = out.states[t - 1];
    const double u = rng.uniform();
    double acc = 0.0;
    int next = 2;
    for (int h = 0; h < 3; ++h) {
      acc += scheme.transition(prev, h);
      if (u < acc) {
        next = h;
        break;
      }
    }
    out.states[t] = next;
    const ClgpnSample s = sample_clgpn(scheme.regimes[static_cast<std::size_t>(next)], rng);
    out.obs[t - 1] = Observation{s.x, s.y};
    out.radii[t - 1] = s.r;
  }
  return out;
}

std::size_t MissingMask::dropped() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) n += (x[i] || y[i]) ? 1 : 0;
  return n;
}

MissingMask apply_missing(ObservationSeq& obs, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InputError("apply_missing: fraction must lie in [0, 1)");
  const std::size_t T = obs.size();
  const auto count = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(T)));
  Rng rng(seed);
  std::vector<std::size_t> idx(T);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // partial Fisher-Yates
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.uniform_index(T - i);
    std::swap(idx[i], idx[j]);
  }
  MissingMask mask{std::vector<bool>(T, false), std::vector<bool>(T, false)};
  for (std::size_t i = 0; i < count; ++i) {
    mask.x[idx[i]] = mask.y[idx[i]] = true;
    obs[idx[i]].x.reset();
    obs[idx[i]].y.reset();
  }
  return mask;
}

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::AIC:
      return "AIC";
    case Criterion::BIC:
      return "BIC";
    case Criterion::ICL:
      return "ICL";
  }
  return "AIC";
}

namespace {

double criterion_value(const CriterionReport& r, Criterion c) {
  switch (c) {
    case Criterion::AIC:
      return r.aic;
    case Criterion::BIC:
      return r.bic;
    case Criterion::ICL:
      return r.icl;
  }
  return r.aic;
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate) {
  // splitmix64 step keeps replicate streams well separated
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (replicate + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int StudyResult::selected_k(std::size_t replicate, Variant variant, Criterion criterion) const {
  int best_k = 0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : fits) {
    if (f.replicate != replicate || f.variant != variant || !f.ok) continue;
    const double v = criterion_value(f.report, criterion);
    if (v < best) {
      best = v;
      best_k = f.K;
    }
  }
  return best_k;
}

std::vector<std::size_t> StudyResult::selection_counts(Variant variant, Criterion criterion) const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(config.k_max - config.k_min + 1), 0);
  for (std::size_t r = 0; r < config.replicates; ++r) {
    const int k = selected_k(r, variant, criterion);
    if (k >= config.k_min) ++counts[static_cast<std::size_t>(k - config.k_min)];
  }
  return counts;
}

std::vector<double> StudyResult::selection_frequencies(Variant variant, Criterion criterion) const {
  const auto counts = selection_counts(variant, criterion);
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  std::vector<double> freq(counts.size(), 0.0);
  if (total > 0.0) {
    for (std::size_t i = 0; i < counts.size(); ++i) freq[i] = static_cast<double>(counts[i]) / total;
  }
  return freq;
}

void StudyResult::write_csv(std::ostream& os) const {
  os << "replicate,variant,K,criterion,value,selected,ok,failure\n";
  os << std::setprecision(17);
  for (const auto& f : fits) {
    for (Criterion c : kCriteria) {
      os << f.replicate + 1 << ',' << to_string(f.variant) << ',' << f.K << ',' << to_string(c) << ',';
      if (f.ok) {
        os << criterion_value(f.report, c) << ',' << (selected_k(f.replicate, f.variant, c) == f.K ? 1 : 0) << ",1,";
      } else {
        os << "NA,0,0," << '"' << f.failure << '"';
      }
      os << '\n';
    }
  }
}

void StudyResult::write_table(std::ostream& os) const {
  os << "Frequency distribution of predicted number of regimes (scheme " << to_char(config.scheme)
     << ", T=" << config.T << ", replicates=" << config.replicates << ")\n";
  os << std::left << std::setw(12) << "model";
  for (Criterion c : kCriteria) {
    os << " | " << to_string(c) << ":";
    for (int k = config.k_min; k <= config.k_max; ++k) os << std::right << std::setw(6) << ("K=" + std::to_string(k));
    os << std::left;
  }
  os << '\n';
  os << std::fixed << std::setprecision(2);
  for (Variant v : config.variants) {
    os << std::left << std::setw(12) << to_string(v);
    for (Criterion c : kCriteria) {
      os << " |     ";
      for (double f : selection_frequencies(v, c)) os << std::right << std::setw(6) << f;
      os << std::left;
    }
    os << '\n';
  }
  os << "replicate counts per cell:\n";
  for (Variant v : config.variants) {
    os << std::left << std::setw(12) << to_string(v);
    for (Criterion c : kCriteria) {
      os << " |     ";
      for (std::size_t n : selection_counts(v, c)) os << std::right << std::setw(6) << n;
      os << std::left;
    }
    os << '\n';
  }
  os.unsetf(std::ios::fixed);
}

StudyResult run_study(const StudyConfig& cfg) {
  if (cfg.replicates < 1) throw InputError("run_study: replicates must be at least 1");
  if (cfg.k_min < 1 || cfg.k_max < cfg.k_min) throw InputError("run_study: invalid K range");
  if (cfg.variants.empty()) throw InputError("run_study: no variants selected");

  const Scheme scheme = make_scheme(cfg.scheme);
  std::vector<SimulatedSeries> data;
  data.reserve(cfg.replicates);
  for (std::size_t r = 0; r < cfg.replicates; ++r) data.push_back(generate(scheme, cfg.T, replicate_seed(cfg.seed, r)));

  const std::size_t n_k = static_cast<std::size_t>(cfg.k_max - cfg.k_min + 1);
  const std::size_t n_jobs = cfg.replicates * cfg.variants.size() * n_k;
  StudyResult result;
  result.config = cfg;
  result.fits.resize(n_jobs);

  parallel_for(n_jobs, cfg.workers, [&](std::size_t job) {
    const std::size_t r = job / (cfg.variants.size() * n_k);
    const std::size_t v = (job / n_k) % cfg.variants.size();
    const int K = cfg.k_min + static_cast<int>(job % n_k);
    FitRecord& rec = result.fits[job];
    rec.replicate = r;
    rec.variant = cfg.variants[v];
    rec.K = K;
    ChainConfig cc = cfg.chain;
    cc.K = K;
    cc.variant = rec.variant;
    cc.seed = replicate_seed(cfg.seed ^ 0x5eedULL, job);
    try {
      const ChainOutput out = run_chain(data[r].obs, cc, cfg.priors, Rng(cc.seed));
      rec.report = criteria(map_estimate(out), data[r].obs, rec.variant, cfg.priors.hyper_beta());
      rec.ok = std::isfinite(rec.report.aic) && std::isfinite(rec.report.icl);
      if (!rec.ok) rec.failure = "non-finite criterion";
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.failure = e.what();
    }
    if (!rec.ok) {
      std::cerr << "run_study: replicate " << r + 1 << ' ' << to_string(rec.variant) << " K=" << K
                << " excluded: " << rec.failure << '\n';
    }
  });
  return result;
}

}  // namespace clgpn
