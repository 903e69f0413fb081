#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>

namespace clgpn {

/// Seeded random stream used by every stochastic operation. Distributions are
/// constructed per call and carry no hidden state, so the stream is fully
/// described by the engine state (see save/restore).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent stream for (seed, stream index), e.g. one per chain.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  double uniform();            // (0, 1)
  double normal();             // N(0, 1)
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double gamma(double shape);  // Gamma(shape, 1)
  double inverse_gamma(double shape, double rate) { return rate / gamma(shape); }
  std::size_t uniform_index(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

  std::string save() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace clgpn
