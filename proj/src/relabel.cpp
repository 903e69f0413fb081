#include <algorithm>
#include <limits>
#include <numeric>

#include "clgpn/errors.hpp"
#include "clgpn/sampler.hpp"

namespace clgpn {

namespace {

constexpr std::size_t kMaxExhaustiveK = 8;

double regime_distance(const RegimeParams& a, const RegimeParams& b) {
  const auto va = a.as_array();
  const auto vb = b.as_array();
  double d = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) d += (va[i] - vb[i]) * (va[i] - vb[i]);
  return d;
}

}  // namespace

Draw permute_draw(const Draw& d, std::span<const int> perm) {
  const std::size_t K = d.params.size();
  if (perm.size() != K) throw InputError("permute_draw: permutation size does not match K");
  Draw out = d;
  std::vector<int> inverse(K);
  for (std::size_t j = 0; j < K; ++j) {
    out.params[j] = d.params[static_cast<std::size_t>(perm[j])];
    inverse[static_cast<std::size_t>(perm[j])] = static_cast<int>(j);
  }
  for (int& l : out.states.labels) l = inverse[static_cast<std::size_t>(l)];
  return out;
}

std::vector<int> best_permutation(std::span<const RegimeParams> draw, std::span<const RegimeParams> pivot) {
  const std::size_t K = draw.size();
  if (pivot.size() != K) throw InputError("best_permutation: K mismatch");
  if (K > kMaxExhaustiveK) throw InputError("pivotal reordering supports at most 8 regimes");

  // cost[j][i]: placing old regime i at position j
  std::vector<double> cost(K * K);
  for (std::size_t j = 0; j < K; ++j) {
    for (std::size_t i = 0; i < K; ++i) cost[j * K + i] = regime_distance(draw[i], pivot[j]);
  }
  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t j = 0; j < K; ++j) c += cost[j * K + static_cast<std::size_t>(perm[j])];
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

ChainOutput align_to_pivot(const ChainOutput& out, std::span<const RegimeParams> pivot) {
  ChainOutput result = out;
  for (auto& d : result.draws) d = permute_draw(d, best_permutation(d.params, pivot));
  return result;
}

ChainOutput pivotal_reorder(const ChainOutput& out) {
  if (out.draws.empty()) throw InputError("pivotal_reorder: no draws");
  const std::size_t pivot_index = map_index(out);
  const std::vector<RegimeParams> pivot = out.draws[pivot_index].params;
  ChainOutput result = align_to_pivot(out, pivot);
  result.map_index = pivot_index;
  return result;
}

}  // namespace clgpn
