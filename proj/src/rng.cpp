#include "clgpn/rng.hpp"

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <sstream>

#include "clgpn/errors.hpp"

namespace clgpn {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng Rng::stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x9e3779b9u};
  Rng rng;
  rng.engine_.seed(seq);
  return rng;
}

double Rng::uniform() {
  // uniform_01 can return exactly 0; reject it so logs stay finite
  for (;;) {
    const double u = boost::random::uniform_01<double>{}(engine_);
    if (u > 0.0) return u;
  }
}

double Rng::normal() { return boost::random::normal_distribution<double>{}(engine_); }

double Rng::gamma(double shape) { return boost::random::gamma_distribution<double>{shape, 1.0}(engine_); }

std::size_t Rng::uniform_index(std::size_t n) {
  return boost::random::uniform_int_distribution<std::size_t>{0, n - 1}(engine_);
}

std::string Rng::save() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream is(state);
  is >> engine_;
  if (!is) throw InputError("Rng::restore: malformed engine state");
}

}  // namespace clgpn
