#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "clgpn/circular.hpp"
#include "clgpn/hmm.hpp"
#include "clgpn/sampler.hpp"
#include "clgpn/scoring.hpp"

namespace clgpn {

enum class SchemeId { A, B, C };

SchemeId parse_scheme(std::string_view name);
char to_char(SchemeId id);

/// Three-regime generating model of a simulation scheme.
struct Scheme {
  SchemeId id = SchemeId::A;
  std::array<RegimeParams, 3> regimes;
  Eigen::Matrix3d transition;
  int initial_state = 0;  // 0-based
};

/// Regimes a), b), c) with a 0.8 / 0.1 transition matrix starting in regime 1.
Scheme make_scheme(SchemeId id);

struct SimulatedSeries {
  ObservationSeq obs;
  std::vector<int> states;  // xi_0..xi_T, 0-based
  std::vector<double> radii;
};

SimulatedSeries generate(const Scheme& scheme, std::size_t T, std::uint64_t seed);

struct MissingMask {
  std::vector<bool> x;
  std::vector<bool> y;
  std::size_t dropped() const;
};

/// Drop round(fraction * T) whole time points chosen uniformly without replacement.
MissingMask apply_missing(ObservationSeq& obs, double fraction, std::uint64_t seed);

enum class Criterion { AIC, BIC, ICL };
inline constexpr std::array<Criterion, 3> kCriteria = {Criterion::AIC, Criterion::BIC, Criterion::ICL};
std::string_view to_string(Criterion c);

struct StudyConfig {
  SchemeId scheme = SchemeId::C;
  std::size_t T = 500;
  std::size_t replicates = 10;
  int k_min = 2;
  int k_max = 6;
  std::vector<Variant> variants = {Variant::CLGPN, Variant::CLDPN, Variant::IndCLGPN};
  ChainConfig chain;  // K, variant and seed are overridden per fit
  Priors priors;
  std::uint64_t seed = 1;
  std::size_t workers = 0;
};

/// One fitted model of one replicate.
struct FitRecord {
  std::size_t replicate = 0;
  Variant variant = Variant::CLGPN;
  int K = 0;
  bool ok = false;
  std::string failure;  // reason when !ok
  CriterionReport report;
};

struct StudyResult {
  StudyConfig config;
  std::vector<FitRecord> fits;

  /// K minimizing `criterion` for (replicate, variant); 0 if every fit failed.
  int selected_k(std::size_t replicate, Variant variant, Criterion criterion) const;
  /// counts[K - k_min] of replicates selecting K; replicates without a selection are excluded.
  std::vector<std::size_t> selection_counts(Variant variant, Criterion criterion) const;
  std::vector<double> selection_frequencies(Variant variant, Criterion criterion) const;

  /// One row per replicate x variant x K x criterion.
  void write_csv(std::ostream& os) const;
  /// Frequency table: rows per variant, blocks of K columns per criterion.
  void write_table(std::ostream& os) const;
};

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate);

StudyResult run_study(const StudyConfig& cfg);

}  // namespace clgpn
