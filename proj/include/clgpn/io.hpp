#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "clgpn/errors.hpp"
#include "clgpn/hmm.hpp"
#include "clgpn/sampler.hpp"
#include "clgpn/scoring.hpp"

namespace clgpn {

/// Bad configuration file or flag combination (CLI exit code 1).
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

struct DatasetOptions {
  bool degrees = false;     // direction column in degrees
  bool log_linear = false;  // natural log of the linear column
  std::string missing_token = "NA";
};

/// Rows of (time, direction, linear value). Directions are radians in [0, 2 pi).
struct Dataset {
  std::vector<double> time;
  ObservationSeq obs;
};

/// Reads a CSV with a mandatory header. Columns are located by name
/// (t|time, x|direction, y|linear) or, for a three-column file, by position.
/// Lines starting with '#' are comments.
Dataset read_dataset(std::istream& is, const DatasetOptions& opt, const std::string& source = "<stream>");
Dataset parse_dataset(const std::filesystem::path& path, const DatasetOptions& opt);

void write_dataset(std::ostream& os, const Dataset& data, const std::string& manifest);
void write_states(std::ostream& os, std::span<const int> labels, const std::string& manifest);

/// One row per retained draw: iteration, log posterior, then the eight
/// parameters of every regime named like "gamma0[2]".
void write_draws_csv(std::ostream& os, const ChainOutput& out, const std::string& manifest);

struct DrawTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // columns[p][draw]
};
DrawTable read_draws_csv(std::istream& is);

/// Line-oriented "key = value" configuration; '#' starts a comment. Unknown
/// keys and duplicate keys are rejected.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& is, const std::string& source = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const { return values_; }
  void set(const std::string& key, const std::string& value);

  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  bool flag(const std::string& key, bool fallback) const;

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
};

ChainConfig chain_config_from(const ConfigFile& cfg);
Priors priors_from(const ConfigFile& cfg);

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
  std::string version;
  std::vector<std::string> inputs;  // absolute paths
  std::string input_checksum;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;

  void write(const std::filesystem::path& path) const;
};

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

extern const char* const kVersion;

/// Posterior median and central 95% interval of every regime parameter.
void write_parameter_summary(std::ostream& os, const ChainOutput& out);

/// Median and central 95% interval of each transition probability, drawing
/// (pi, pi0) once per retained draw.
void write_transition_summary(std::ostream& os, const ChainOutput& out, HyperBeta hb, Rng& rng);

void write_regime_summaries(std::ostream& os, const std::vector<RegimeSummary>& summaries, std::size_t T);

struct CriteriaRow {
  int K = 0;
  CriterionReport report;
};
void write_criteria_table(std::ostream& os, const std::vector<CriteriaRow>& rows);

void write_scores(std::ostream& os, const ScoreReport& s);

/// Empirical quantile with linear interpolation (type 7).
double quantile(std::vector<double> values, double q);

}  // namespace clgpn
