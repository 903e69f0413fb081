#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clgpn {

/// Effective sample size from the autocorrelation function, truncated with
/// Geyer's initial monotone positive-sequence rule and capped at N.
double effective_sample_size(std::span<const double> trace);

/// Geweke z-score comparing the means of the first `first` and the last `last`
/// fractions of a trace; variances of the means are autocorrelation-adjusted.
/// Empty when either window is constant.
std::optional<double> geweke_z(std::span<const double> trace, double first = 0.1, double last = 0.5);

struct ParameterDiagnostics {
  std::string name;
  std::size_t draws = 0;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;  // summed over chains
  std::vector<double> geweke;  // one z-score per chain; empty if degenerate
  bool degenerate = false;     // constant trace
};

struct DiagnosticsReport {
  std::vector<ParameterDiagnostics> parameters;
  std::size_t chains = 0;
  bool reliable = true;  // false when any chain has fewer than 100 draws
};

/// `chains[c][p]` is the trace of parameter p in chain c; all chains share `names`.
DiagnosticsReport diagnose(const std::vector<std::string>& names,
                           const std::vector<std::vector<std::vector<double>>>& chains);

}  // namespace clgpn
