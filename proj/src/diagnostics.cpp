#include "clgpn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "clgpn/errors.hpp"

namespace clgpn {

namespace {

constexpr std::size_t kMinReliableDraws = 100;

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size());
}

bool is_constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

}  // namespace

double effective_sample_size(std::span<const double> trace) {
  const std::size_t n = trace.size();
  if (n < 4) return static_cast<double>(n);
  const double m = mean_of(trace);
  const double var = variance_of(trace, m);
  if (!(var > 0.0)) return static_cast<double>(n);

  const auto autocorr = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (trace[i] - m) * (trace[i + lag] - m);
    return s / (static_cast<double>(n) * var);
  };
  // Sum consecutive pairs Gamma_k = rho_{2k} + rho_{2k+1} while positive, forcing monotone decrease.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = autocorr(2 * k) + autocorr(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

std::optional<double> geweke_z(std::span<const double> trace, double first, double last) {
  if (!(first > 0.0 && last > 0.0 && first + last <= 1.0)) throw InputError("geweke_z: invalid window fractions");
  const std::size_t n = trace.size();
  const auto na = static_cast<std::size_t>(std::floor(first * static_cast<double>(n)));
  const auto nb = static_cast<std::size_t>(std::floor(last * static_cast<double>(n)));
  if (na < 2 || nb < 2) return std::nullopt;
  const auto a = trace.subspan(0, na);
  const auto b = trace.subspan(n - nb, nb);
  if (is_constant(a) || is_constant(b)) return std::nullopt;
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double va = variance_of(a, ma) / effective_sample_size(a);
  const double vb = variance_of(b, mb) / effective_sample_size(b);
  return (ma - mb) / std::sqrt(va + vb);
}

DiagnosticsReport diagnose(const std::vector<std::string>& names,
                           const std::vector<std::vector<std::vector<double>>>& chains) {
  if (chains.empty()) throw InputError("diagnose: at least one chain is required");
  DiagnosticsReport rep;
  rep.chains = chains.size();
  for (const auto& c : chains) {
    if (c.size() != names.size()) throw InputError("diagnose: chain has the wrong number of parameters");
    if (!c.empty() && c.front().size() < kMinReliableDraws) rep.reliable = false;
  }
  for (std::size_t p = 0; p < names.size(); ++p) {
    ParameterDiagnostics d;
    d.name = names[p];
    std::vector<double> pooled;
    bool constant = true;
    for (const auto& c : chains) {
      const auto& trace = c[p];
      pooled.insert(pooled.end(), trace.begin(), trace.end());
      if (!trace.empty() && !is_constant(trace)) constant = false;
    }
    d.draws = pooled.size();
    if (!pooled.empty()) {
      d.mean = mean_of(pooled);
      d.sd = std::sqrt(variance_of(pooled, d.mean));
    }
    d.degenerate = constant;
    for (const auto& c : chains) {
      d.ess += effective_sample_size(c[p]);
      if (!constant) {
        if (const auto z = geweke_z(c[p])) d.geweke.push_back(*z);
      }
    }
    rep.parameters.push_back(std::move(d));
  }
  return rep;
}

}  // namespace clgpn
