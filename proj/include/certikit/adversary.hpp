#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "certikit/domain.hpp"
#include "certikit/error.hpp"
#include "certikit/hypoclasses.hpp"
#include "certikit/oracles.hpp"
#include "certikit/rng.hpp"
#include "certikit/stars.hpp"

namespace certikit {

struct Corruption {
  Dataset data;
  /// Indices whose labels were flipped, ascending.
  std::vector<std::size_t> flipped;
};

inline Dataset flip_labels(const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<LabeledExample> ex(data.examples().begin(), data.examples().end());
  for (auto i : indices) {
    if (i >= ex.size()) throw InputError("flip index out of range");
    ex[i].label = flip(ex[i].label);
  }
  return Dataset(std::move(ex), std::vector<std::size_t>(data.origins().begin(), data.origins().end()));
}

/// Flips b distinct indices chosen uniformly (partial Fisher-Yates).
inline Corruption corrupt_random(const Dataset& data, std::uint64_t b, std::uint64_t seed) {
  if (b > data.size()) throw InputError("corruption budget exceeds dataset size");
  Rng rng(seed);
  auto idx = all_indices(data.size());
  for (std::size_t i = 0; i < b; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(b);
  std::sort(idx.begin(), idx.end());
  return {flip_labels(data, idx), idx};
}

struct WorstCaseOptions {
  /// Max flip sets examined.
  std::uint64_t guard = 1'000'000;
  /// Max (flip sets x scored subsets) for the tie-break score.
  std::uint64_t score_guard = 50'000'000;
  bool compute_score = true;
  OracleOptions oracle{};
};

struct WorstCase {
  Corruption corruption;
  /// The flip set ejects (test, label) from the b-robust agreement region.
  bool success = false;
  /// Surviving size-(s0-1) certificates of the chosen corrupted data.
  std::uint64_t score = 0;
  std::uint64_t flip_sets_examined = 0;
};

namespace detail {

// s0 - 1 for the score: the 0-star number for finite families, the lifted
// dimension (Caratheodory size) for halfspaces.
inline std::size_t score_subset_size(const HypothesisFamily& family) {
  if (const auto* h = std::get_if<Halfspaces>(&family)) return h->lifted_dimension();
  StarSearchOptions opt;
  opt.multiplicity_cap = 1;
  return robust_star_number(family, 0, opt).value - 1;
}

inline std::uint64_t surviving_certificates(const HypothesisFamily& family, const Dataset& data, std::size_t size,
                                            std::uint64_t b, const Point& test, Label label, const OracleOptions& opt) {
  const auto items = all_indices(data.size());
  const std::vector<std::uint64_t> unit(data.size(), 1);
  std::uint64_t count = 0;
  for_each_deletion_set(items, unit, size, [&](std::span<const std::size_t> s) {
    if (s.size() == size && is_certificate(family, data, s, b, test, label, opt)) ++count;
    return false;
  });
  return count;
}

}  // namespace detail

/// Exhaustive search over flip sets of size <= b, sizes ascending then
/// lexicographic. Returns the first that ejects (test, label) from the
/// b-robust agreement region; otherwise the one with the fewest surviving
/// certificates (first in order among ties).
inline WorstCase corrupt_worst_case(const HypothesisFamily& family, const Dataset& data, std::uint64_t b,
                                    const Point& test, Label label, const WorstCaseOptions& wopt = {}) {
  const std::size_t n = data.size();
  std::uint64_t sets = 0;
  for (std::uint64_t s = 0; s <= b && s <= n; ++s) {
    const auto c = binomial(n, s);
    sets = (c == UINT64_MAX || sets + c < sets) ? UINT64_MAX : sets + c;
  }
  if (sets > wopt.guard) {
    throw CapacityError("worst-case search: " + std::to_string(sets) + " flip sets exceed guard " +
                        std::to_string(wopt.guard));
  }

  std::size_t score_size = 0;
  bool scoring = wopt.compute_score && b > 0;
  if (scoring) {
    score_size = detail::score_subset_size(family);
    const auto per = binomial(n, score_size);
    if (per != 0 && (per == UINT64_MAX || sets > wopt.score_guard / per)) {
      throw CapacityError("worst-case tie-break score exceeds guard");
    }
  }

  WorstCase best;
  best.score = std::numeric_limits<std::uint64_t>::max();
  bool have = false;
  const auto items = all_indices(n);
  const std::vector<std::uint64_t> unit(n, 1);
  std::uint64_t examined = 0;
  detail::for_each_deletion_set(items, unit, b, [&](std::span<const std::size_t> flips) {
    ++examined;
    Dataset corrupted = flip_labels(data, flips);
    if (!in_robust_agreement(family, corrupted, b, test, label, wopt.oracle)) {
      best.corruption = {std::move(corrupted), {flips.begin(), flips.end()}};
      best.success = true;
      best.score = 0;
      return true;
    }
    const std::uint64_t score =
        scoring ? detail::surviving_certificates(family, corrupted, score_size, b, test, label, wopt.oracle) : 0;
    if (!have || score < best.score) {
      best.corruption = {std::move(corrupted), {flips.begin(), flips.end()}};
      best.score = score;
      have = true;
    }
    return false;
  });
  best.flip_sets_examined = examined;
  return best;
}

}  // namespace certikit
