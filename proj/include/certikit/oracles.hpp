#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "certikit/conic.hpp"
#include "certikit/domain.hpp"
#include "certikit/error.hpp"
#include "certikit/hypoclasses.hpp"

namespace certikit {

enum class OracleBackend { enumerate_hypotheses, deletion_lp };

struct OracleOptions {
  /// Upper bound on deletion subsets the halfspace backend may enumerate.
  std::uint64_t deletion_guard = 1'000'000;
  double tol = kLpTolerance;
};

inline OracleBackend backend_for(const HypothesisFamily& family) {
  return std::holds_alternative<Halfspaces>(family) ? OracleBackend::deletion_lp
                                                    : OracleBackend::enumerate_hypotheses;
}

struct RealizabilityResult {
  bool realizable = false;
  std::optional<Hypothesis> witness;

  explicit operator bool() const noexcept { return realizable; }
};

/// sum_i w_i [h(x_i) != y_i]
inline std::uint64_t weighted_error(const HypothesisFamily& family, const Hypothesis& h,
                                    std::span<const WeightedExample> seq) {
  validate_hypothesis(family, h);
  std::uint64_t err = 0;
  for (const auto& e : seq) {
    if (predict(family, h, e.point) != e.label) err += e.weight;
  }
  return err;
}

inline std::vector<WeightedExample> unit_weights(const Dataset& data) { return weighted_view(data); }

namespace detail {

template <EnumerableFamily F>
RealizabilityResult realizable_by_enumeration(const F& fam, std::span<const WeightedExample> seq,
                                              std::uint64_t b) {
  std::vector<std::size_t> cols;
  cols.reserve(seq.size());
  for (const auto& e : seq) cols.push_back(fam.column(e.point));
  const std::size_t count = fam.hypothesis_count();
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t err = 0;
    for (std::size_t i = 0; i < seq.size() && err <= b; ++i) {
      if (fam.predict_column(k, cols[i]) != seq[i].label) err += seq[i].weight;
    }
    if (err <= b) return {true, Hypothesis{fam.hypothesis_id(k)}};
  }
  return {false, std::nullopt};
}

// Calls visit(indices) for every subset of `items` (lexicographic within
// each size, sizes ascending) whose total weight is <= budget. Stops early
// when visit returns true.
template <class Visit>
bool for_each_deletion_set(std::span<const std::size_t> items, std::span<const std::uint64_t> weight,
                           std::uint64_t budget, Visit&& visit) {
  std::vector<std::size_t> chosen;
  for (std::size_t size = 0; size <= items.size() && size <= budget; ++size) {
    std::vector<std::size_t> pos(size);
    for (std::size_t i = 0; i < size; ++i) pos[i] = i;
    while (true) {
      std::uint64_t total = 0;
      chosen.clear();
      for (auto p : pos) {
        total += weight[items[p]];
        chosen.push_back(items[p]);
      }
      if (total <= budget && visit(std::span<const std::size_t>(chosen))) return true;
      if (size == 0) break;
      std::size_t i = size;
      while (i > 0 && pos[i - 1] == items.size() - size + i - 1) --i;
      if (i == 0) break;
      ++pos[i - 1];
      for (std::size_t j = i; j < size; ++j) pos[j] = pos[j - 1] + 1;
    }
  }
  return false;
}

inline RealizabilityResult realizable_by_deletion_lp(const Halfspaces& fam, std::span<const WeightedExample> seq,
                                                     std::uint64_t b, const OracleOptions& opt) {
  const std::size_t n = seq.size();
  std::vector<Vec> lifted;
  lifted.reserve(n);
  std::vector<std::uint64_t> weight(n);
  std::vector<std::size_t> deletable;
  for (std::size_t i = 0; i < n; ++i) {
    lifted.push_back(fam.lift(seq[i].point));
    weight[i] = seq[i].weight;
    if (seq[i].weight <= b) deletable.push_back(i);
  }

  std::uint64_t planned = 0;
  for (std::uint64_t s = 0; s <= b && s <= deletable.size(); ++s) {
    const auto c = binomial(deletable.size(), s);
    planned = (c > opt.deletion_guard || planned + c > opt.deletion_guard) ? opt.deletion_guard + 1 : planned + c;
  }
  if (planned > opt.deletion_guard) {
    throw CapacityError("deletion-LP backend: " + std::to_string(deletable.size()) + " deletable examples at budget " +
                        std::to_string(b) + " exceed guard " + std::to_string(opt.deletion_guard));
  }

  // Known contradictory constraint sets. A deletion set that misses one of
  // them leaves that contradiction intact, so its LP can be skipped.
  std::vector<std::vector<std::size_t>> conflicts;
  std::vector<char> removed(n, 0);
  std::optional<Vec> witness;

  detail::for_each_deletion_set(deletable, weight, b, [&](std::span<const std::size_t> del) {
    for (auto i : del) removed[i] = 1;
    bool skip = false;
    for (const auto& c : conflicts) {
      bool hit = false;
      for (auto i : c) {
        if (removed[i]) {
          hit = true;
          break;
        }
      }
      if (!hit) {
        skip = true;
        break;
      }
    }
    bool found = false;
    if (!skip) {
      std::vector<Vec> pos, neg;
      std::vector<std::size_t> pos_idx, neg_idx;
      for (std::size_t i = 0; i < n; ++i) {
        if (removed[i]) continue;
        if (seq[i].label == Label::positive) {
          pos.push_back(lifted[i]);
          pos_idx.push_back(i);
        } else {
          neg.push_back(lifted[i]);
          neg_idx.push_back(i);
        }
      }
      auto res = halfspace_consistency_lp(pos, neg, std::nullopt, opt.tol);
      if (res.feasible) {
        witness = std::move(res.witness);
        if (witness->empty()) witness = Vec(fam.lifted_dimension(), 0.0);
        found = true;
      } else {
        std::vector<std::size_t> conflict;
        for (auto j : res.conflict) conflict.push_back(j < pos_idx.size() ? pos_idx[j] : neg_idx[j - pos_idx.size()]);
        conflicts.push_back(std::move(conflict));
      }
    }
    for (auto i : del) removed[i] = 0;
    return found;
  });

  if (witness) return {true, Hypothesis{std::move(*witness)}};
  return {false, std::nullopt};
}

}  // namespace detail

/// True iff some hypothesis has weighted error <= b; the witness is the
/// lowest-index one (enumeration) or the first feasible deletion set's LP
/// solution (halfspaces).
inline RealizabilityResult is_robustly_realizable(const HypothesisFamily& family,
                                                  std::span<const WeightedExample> seq, std::uint64_t b,
                                                  const OracleOptions& opt = {}) {
  return std::visit(
      [&](const auto& fam) -> RealizabilityResult {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, Halfspaces>) {
          return detail::realizable_by_deletion_lp(fam, seq, b, opt);
        } else {
          return detail::realizable_by_enumeration(fam, seq, b);
        }
      },
      family);
}

inline RealizabilityResult is_robustly_realizable(const HypothesisFamily& family, const Dataset& data,
                                                  std::uint64_t b, const OracleOptions& opt = {}) {
  const auto seq = unit_weights(data);
  return is_robustly_realizable(family, std::span<const WeightedExample>(seq), b, opt);
}

/// Some hypothesis with at most b mistakes on `data` that predicts
/// flip(label) at `test`, or nullopt when (test, label) is in the b-robust
/// agreement region. Encoded as realizability of data plus the flipped test
/// point at weight b+1.
inline std::optional<Hypothesis> agreement_counterexample(const HypothesisFamily& family, const Dataset& data,
                                                          std::uint64_t b, const Point& test, Label label,
                                                          const OracleOptions& opt = {}) {
  const Dataset extended = data.with({test, flip(label)});
  const auto seq = weighted_view(extended, extended.size() - 1, b + 1);
  auto res = is_robustly_realizable(family, std::span<const WeightedExample>(seq), b, opt);
  if (res.realizable) return std::move(res.witness);
  return std::nullopt;
}

inline bool in_robust_agreement(const HypothesisFamily& family, const Dataset& data, std::uint64_t b,
                                const Point& test, Label label, const OracleOptions& opt = {}) {
  return !agreement_counterexample(family, data, b, test, label, opt).has_value();
}

/// Both certificate conditions on data[indices]. With trusted_superset the
/// realizability condition is assumed (the caller knows a superset is
/// b-robustly realizable).
inline bool is_certificate(const HypothesisFamily& family, const Dataset& data, std::span<const std::size_t> indices,
                           std::uint64_t b, const Point& test, Label label, const OracleOptions& opt = {},
                           bool trusted_superset = false) {
  const Dataset sub = subsequence(data, indices);
  if (!trusted_superset && !is_robustly_realizable(family, sub, b, opt).realizable) return false;
  return in_robust_agreement(family, sub, b, test, label, opt);
}

/// Certification is monotone under supersets, so checking every single-drop
/// subsequence covers all proper subsequences.
inline bool is_minimal_certificate(const HypothesisFamily& family, const Dataset& data,
                                   std::span<const std::size_t> indices, std::uint64_t b, const Point& test,
                                   Label label, const OracleOptions& opt = {}) {
  if (!is_certificate(family, data, indices, b, test, label, opt)) return false;
  std::vector<std::size_t> rest;
  for (std::size_t drop = 0; drop < indices.size(); ++drop) {
    rest.assign(indices.begin(), indices.end());
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(drop));
    if (is_certificate(family, data, rest, b, test, label, opt, true)) return false;
  }
  return true;
}

inline bool is_certificate(const HypothesisFamily& family, const Certificate& cert, const OracleOptions& opt = {}) {
  return is_certificate(family, cert.source, cert.indices, cert.budget, cert.test, cert.claimed_label, opt);
}

}  // namespace certikit
