#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "certikit/domain.hpp"
#include "certikit/error.hpp"
#include "certikit/hypoclasses.hpp"
#include "certikit/oracles.hpp"

namespace certikit {

/// Labeled sequence with one heavy element (weight budget+1) that is not
/// budget-robustly realizable, while every single-element removal is.
struct HollowStar {
  std::vector<LabeledExample> elements;
  std::size_t heavy_index = 0;
  std::uint64_t budget = 0;
  bool verified = false;

  std::size_t size() const noexcept { return elements.size(); }

  std::vector<WeightedExample> weighted() const {
    std::vector<WeightedExample> out;
    out.reserve(elements.size());
    for (std::size_t i = 0; i < elements.size(); ++i) {
      out.push_back({elements[i].point, elements[i].label, i == heavy_index ? budget + 1 : 1});
    }
    return out;
  }
};

/// Checks non-realizability of the weighted star and realizability of each
/// single removal. Identical removals are evaluated once.
inline bool verify_star(const HypothesisFamily& family, const HollowStar& star, const OracleOptions& opt = {}) {
  if (star.elements.empty() || star.heavy_index >= star.elements.size()) return false;
  const auto seq = star.weighted();
  if (is_robustly_realizable(family, std::span<const WeightedExample>(seq), star.budget, opt).realizable) {
    return false;
  }
  std::vector<WeightedExample> checked;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (std::find(checked.begin(), checked.end(), seq[i]) != checked.end()) continue;
    checked.push_back(seq[i]);
    auto rest = seq;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
    if (!is_robustly_realizable(family, std::span<const WeightedExample>(rest), star.budget, opt).realizable) {
      return false;
    }
  }
  return true;
}

/// b+1 copies of a 0-star's body followed by its distinguished element as
/// the heavy one. Size (b+1)(s0-1)+1.
inline HollowStar lift_star(const HollowStar& star, std::uint64_t b) {
  if (star.budget != 0) throw InputError("lift_star expects a 0-robust hollow star");
  if (star.heavy_index >= star.elements.size()) throw InputError("hollow star heavy index out of range");
  if (b == 0) return star;
  std::vector<LabeledExample> body;
  for (std::size_t i = 0; i < star.elements.size(); ++i) {
    if (i != star.heavy_index) body.push_back(star.elements[i]);
  }
  HollowStar out;
  out.budget = b;
  out.elements.reserve((b + 1) * body.size() + 1);
  for (std::uint64_t copy = 0; copy <= b; ++copy) out.elements.insert(out.elements.end(), body.begin(), body.end());
  out.elements.push_back(star.elements[star.heavy_index]);
  out.heavy_index = out.elements.size() - 1;
  return out;
}

/// Training set = star minus its heavy element; the pair to certify is the
/// heavy point with its label flipped.
inline CertificationInstance hardest_instance(const HollowStar& star) {
  if (star.heavy_index >= star.elements.size()) throw InputError("hollow star heavy index out of range");
  std::vector<LabeledExample> rest;
  for (std::size_t i = 0; i < star.elements.size(); ++i) {
    if (i != star.heavy_index) rest.push_back(star.elements[i]);
  }
  const auto& heavy = star.elements[star.heavy_index];
  return {Dataset(std::move(rest)), heavy.point, flip(heavy.label)};
}

struct StarSearchOptions {
  /// Max unit-weight copies of one (point, label) pair; 0 means b+1.
  std::uint64_t multiplicity_cap = 0;
  /// Max star size; 0 means (b+1) * |domain| * 2.
  std::size_t size_cap = 0;
  /// Max (count vectors x heavy choices) examined.
  std::uint64_t guard = 200'000'000;
};

struct StarNumber {
  std::size_t value = 0;
  HollowStar witness;
  /// False when the guard cut the search; value is then only a lower bound.
  bool complete = true;
};

namespace detail {

// Exhaustive count-vector search. Pair j = 2*column + (label positive).
class StarSearch {
 public:
  StarSearch(const FiniteFamily& fam, std::uint64_t b, std::uint64_t cap, std::size_t size_cap)
      : fam_(fam), b_(b), cap_(cap), size_cap_(size_cap), pairs_(2 * fam.domain_size()), hyps_(fam.hypothesis_count()) {
    mis_.assign(hyps_ * pairs_, 0);
    for (std::size_t h = 0; h < hyps_; ++h) {
      for (std::size_t c = 0; c < fam.domain_size(); ++c) {
        const bool pos = fam.predict_column(h, c) == Label::positive;
        mis_[h * pairs_ + 2 * c] = pos ? 1 : 0;      // pair (c, -1)
        mis_[h * pairs_ + 2 * c + 1] = pos ? 0 : 1;  // pair (c, +1)
      }
    }
  }

  std::uint64_t space() const {
    long double s = static_cast<long double>(pairs_);
    for (std::size_t j = 0; j < pairs_; ++j) s *= static_cast<long double>(cap_ + 1);
    return s > 1.8e19L ? UINT64_MAX : static_cast<std::uint64_t>(s);
  }

  // Largest star with size >= min_size (lexicographically first among
  // equals: heavy pair ascending, then count vector ascending).
  std::optional<HollowStar> run(std::size_t min_size) const {
    std::optional<std::pair<std::size_t, std::vector<std::uint64_t>>> best;  // heavy, counts
    std::size_t best_size = min_size == 0 ? 0 : min_size - 1;
    std::vector<std::uint64_t> counts(pairs_, 0);
    std::vector<std::uint64_t> err(hyps_, 0);
    for (std::size_t heavy = 0; heavy < pairs_; ++heavy) {
      std::fill(counts.begin(), counts.end(), 0);
      std::fill(err.begin(), err.end(), 0);
      std::size_t total = 0;
      do {
        const std::size_t size = total + 1;
        if (size > best_size && size <= size_cap_ && is_star(heavy, counts, err)) {
          best_size = size;
          best.emplace(heavy, counts);
        }
      } while (advance(counts, total, err));
    }
    if (!best) return std::nullopt;
    return expand(best->first, best->second);
  }

  HollowStar expand(std::size_t heavy, const std::vector<std::uint64_t>& counts) const {
    HollowStar s;
    s.budget = b_;
    for (std::size_t j = 0; j < pairs_; ++j) {
      for (std::uint64_t k = 0; k < counts[j]; ++k) s.elements.push_back(pair_example(j));
    }
    s.elements.push_back(pair_example(heavy));
    s.heavy_index = s.elements.size() - 1;
    s.verified = true;
    return s;
  }

 private:
  // Mixed-radix increment, last pair fastest, so vectors come out in
  // lexicographic order. Keeps the running size and error counts in sync.
  bool advance(std::vector<std::uint64_t>& counts, std::size_t& total, std::vector<std::uint64_t>& err) const {
    for (std::size_t j = pairs_; j-- > 0;) {
      if (counts[j] < cap_) {
        ++counts[j];
        ++total;
        for (std::size_t h = 0; h < hyps_; ++h) err[h] += mis_[h * pairs_ + j];
        return true;
      }
      total -= counts[j];
      for (std::size_t h = 0; h < hyps_; ++h) err[h] -= counts[j] * mis_[h * pairs_ + j];
      counts[j] = 0;
    }
    return false;
  }

  LabeledExample pair_example(std::size_t j) const {
    return {Point::discrete(fam_.domain()[j / 2]), (j % 2) ? Label::positive : Label::negative};
  }

  bool is_star(std::size_t heavy, const std::vector<std::uint64_t>& counts, const std::vector<std::uint64_t>& err) const {
    // full weighted sequence not realizable
    for (std::size_t h = 0; h < hyps_; ++h) {
      if (err[h] + (b_ + 1) * mis_[h * pairs_ + heavy] <= b_) return false;
    }
    // heavy removed
    bool ok = false;
    for (std::size_t h = 0; h < hyps_ && !ok; ++h) ok = err[h] <= b_;
    if (!ok) return false;
    // one unit copy of pair j removed
    for (std::size_t j = 0; j < pairs_; ++j) {
      if (counts[j] == 0) continue;
      ok = false;
      for (std::size_t h = 0; h < hyps_ && !ok; ++h) {
        ok = err[h] - mis_[h * pairs_ + j] + (b_ + 1) * mis_[h * pairs_ + heavy] <= b_;
      }
      if (!ok) return false;
    }
    return true;
  }

  const FiniteFamily& fam_;
  std::uint64_t b_, cap_;
  std::size_t size_cap_, pairs_, hyps_;
  std::vector<std::uint64_t> mis_;
};

inline FiniteFamily as_finite(const HypothesisFamily& family) {
  if (const auto* f = std::get_if<FiniteFamily>(&family)) return *f;
  if (const auto* s = std::get_if<Singletons>(&family)) return s->to_finite();
  throw InputError("hollow star search needs a finite hypothesis family");
}

}  // namespace detail

/// Size of the largest b-robust hollow star, searching multisets of
/// (point, label) pairs with per-pair multiplicity <= cap plus one heavy
/// pair. The lifted 0-star seeds the search as a lower bound.
inline StarNumber robust_star_number(const HypothesisFamily& family, std::uint64_t b, StarSearchOptions opt = {}) {
  const FiniteFamily fam = detail::as_finite(family);
  const HypothesisFamily as_family = fam;
  const std::uint64_t cap = opt.multiplicity_cap == 0 ? b + 1 : opt.multiplicity_cap;
  const std::size_t size_cap = opt.size_cap == 0 ? static_cast<std::size_t>((b + 1) * fam.domain_size() * 2) : opt.size_cap;

  std::optional<HollowStar> seed;
  if (b > 0) {
    StarSearchOptions zero = opt;
    zero.multiplicity_cap = 1;
    zero.size_cap = fam.domain_size() * 2 + 1;
    const auto s0 = robust_star_number(as_family, 0, zero);
    auto lifted = lift_star(s0.witness, b);
    if (lifted.size() <= size_cap && verify_star(as_family, lifted)) {
      lifted.verified = true;
      seed = std::move(lifted);
    }
  }

  const detail::StarSearch search(fam, b, cap, size_cap);
  if (search.space() > opt.guard) {
    if (!seed) throw CapacityError("hollow star search space exceeds guard");
    return {seed->size(), *seed, false};
  }
  auto found = search.run(seed ? seed->size() : 1);
  if (found) return {found->size(), std::move(*found), true};
  if (seed) return {seed->size(), *seed, true};
  throw CapacityError("no hollow star within the size cap");
}

}  // namespace certikit
