#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "certikit/conic.hpp"
#include "certikit/domain.hpp"
#include "certikit/error.hpp"
#include "certikit/hypoclasses.hpp"
#include "certikit/oracles.hpp"
#include "certikit/stars.hpp"

namespace certikit {

/// Not certifiable because a specific hypothesis errs at most b times on the
/// data yet predicts the other label at the test point.
class CounterexampleError : public NotCertifiableError {
 public:
  CounterexampleError(const std::string& what, Hypothesis h) : NotCertifiableError(what), witness(std::move(h)) {}
  Hypothesis witness;
};

enum class DeletionOrder { descending, ascending };

namespace detail {

inline void require_certifiable(const HypothesisFamily& family, const Dataset& data, std::uint64_t b,
                                const Point& test, Label label, const OracleOptions& opt) {
  if (!is_robustly_realizable(family, data, b, opt).realizable) {
    throw NotCertifiableError("data is not " + std::to_string(b) + "-robustly realizable");
  }
  if (auto h = agreement_counterexample(family, data, b, test, label, opt)) {
    throw CounterexampleError("test pair is outside the " + std::to_string(b) +
                                  "-robust agreement region of the data",
                              std::move(*h));
  }
}

}  // namespace detail

/// Single-pass greedy deletion. Since certification is monotone under
/// supersets, an element whose removal failed once can never be removed
/// later, so the result is minimal.
inline Certificate minimal_certificate(const HypothesisFamily& family, const Dataset& data, std::uint64_t b,
                                       const Point& test, Label label, const OracleOptions& opt = {},
                                       DeletionOrder order = DeletionOrder::descending) {
  detail::require_certifiable(family, data, b, test, label, opt);
  std::vector<std::size_t> keep = all_indices(data.size());
  std::vector<std::size_t> visit = keep;
  if (order == DeletionOrder::descending) std::reverse(visit.begin(), visit.end());
  std::vector<std::size_t> trial;
  for (auto idx : visit) {
    trial.clear();
    for (auto k : keep) {
      if (k != idx) trial.push_back(k);
    }
    if (is_certificate(family, data, trial, b, test, label, opt, true)) keep = trial;
  }
  return {data, std::move(keep), b, test, label, true};
}

/// Exact minimum by enumerating index subsets in order of size, then
/// lexicographically. Subsets that pick a later copy of a repeated example
/// while skipping an earlier one are skipped; some canonical subset with the
/// same content comes first.
inline Certificate minimum_certificate(const HypothesisFamily& family, const Dataset& data, std::uint64_t b,
                                       const Point& test, Label label, std::size_t size_cap,
                                       const OracleOptions& opt = {}) {
  const std::size_t n = data.size();
  if (n > 24 && size_cap > 6) {
    throw CapacityError("minimum certificate search needs |data| <= 24 or size_cap <= 6");
  }
  detail::require_certifiable(family, data, b, test, label, opt);

  // previous occurrence of an identical example, or n
  std::vector<std::size_t> prev(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j-- > 0;) {
      if (data[j] == data[i]) {
        prev[i] = j;
        break;
      }
    }
  }

  const std::size_t max_size = std::min(size_cap, n);
  std::vector<std::size_t> pick;
  std::vector<char> chosen(n, 0);
  for (std::size_t size = 0; size <= max_size; ++size) {
    pick.resize(size);
    for (std::size_t i = 0; i < size; ++i) pick[i] = i;
    while (true) {
      std::fill(chosen.begin(), chosen.end(), 0);
      for (auto p : pick) chosen[p] = 1;
      bool canonical = true;
      for (auto p : pick) {
        if (prev[p] != n && !chosen[prev[p]]) {
          canonical = false;
          break;
        }
      }
      if (canonical && is_certificate(family, data, pick, b, test, label, opt, true)) {
        return {data, pick, b, test, label, true};
      }
      if (size == 0) break;
      std::size_t i = size;
      while (i > 0 && pick[i - 1] == n - size + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  throw CapacityError("no certificate of size <= " + std::to_string(size_cap));
}

/// b = 0 certificate for halfspaces from a basic conic representation of
/// label*test over the signed training points: at most d examples.
inline Certificate caratheodory_certificate(const Halfspaces& family, const Dataset& data, const Point& test,
                                            Label label, const OracleOptions& opt = {}) {
  const HypothesisFamily fam = family;
  if (!is_robustly_realizable(fam, data, 0, opt).realizable) {
    throw NotCertifiableError("data is not realizable by a halfspace");
  }
  ConicInstance inst;
  inst.generators.reserve(data.size());
  for (const auto& e : data.examples()) {
    auto z = family.lift(e.point);
    if (e.label == Label::negative) {
      for (double& v : z) v = -v;
    }
    inst.generators.push_back(std::move(z));
  }
  inst.target = family.lift(test);
  if (label == Label::negative) {
    for (double& v : inst.target) v = -v;
  }

  std::vector<std::size_t> support;
  const auto sol = conic_membership(inst, opt.tol);
  if (sol.feasible) {
    support = caratheodory_reduce(inst, sol.coefficients, opt.tol).support;
  } else {
    throw NotCertifiableError("signed test point is outside the cone of the signed training points");
  }

  if (!is_certificate(fam, data, support, 0, test, label, opt)) {
    if (label == Label::positive) throw NumericalError("caratheodory certificate failed revalidation");
    // For a negative label the cone only forces w.x <= 0; strictness needs a
    // negative example in the combination. Take the support of the dual
    // infeasibility certificate of {consistent with data, w.test >= 0}.
    std::vector<Vec> pos, neg;
    std::vector<std::size_t> pos_idx, neg_idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].label == Label::positive) {
        pos.push_back(family.lift(data[i].point));
        pos_idx.push_back(i);
      } else {
        neg.push_back(family.lift(data[i].point));
        neg_idx.push_back(i);
      }
    }
    const auto res = halfspace_consistency_lp(pos, neg, ExtraConstraint{family.lift(test), ExtraConstraint::Relation::nonnegative}, opt.tol);
    if (res.feasible) throw NotCertifiableError("a consistent halfspace puts the test point on the boundary");
    support.clear();
    for (auto j : res.conflict) {
      if (j < pos_idx.size()) support.push_back(pos_idx[j]);
      else if (j < pos_idx.size() + neg_idx.size()) support.push_back(neg_idx[j - pos_idx.size()]);
    }
    std::sort(support.begin(), support.end());
    if (!is_certificate(fam, data, support, 0, test, label, opt)) {
      throw NumericalError("caratheodory certificate failed revalidation");
    }
  }
  return {data, std::move(support), 0, test, label, false};
}

using ExampleStream = std::function<LabeledExample()>;

struct ChunkOptions {
  /// 0 selects the size automatically.
  std::size_t chunk_size = 0;
  /// 0 means b+1.
  std::size_t chunks_needed = 0;
  std::size_t max_chunks = 100'000;
  std::size_t probe_chunks = 20;
  std::size_t max_chunk_size = std::size_t{1} << 14;
};

struct ChunkedCertificate {
  Certificate certificate;
  std::size_t chunk_size = 0;
  std::size_t chunks_scanned = 0;
  std::vector<std::size_t> retained_chunks;
};

namespace detail {

inline Dataset draw_chunk(const ExampleStream& stream, std::size_t size) {
  std::vector<LabeledExample> ex;
  ex.reserve(size);
  for (std::size_t i = 0; i < size; ++i) ex.push_back(stream());
  return Dataset(std::move(ex));
}

inline bool chunk_qualifies(const HypothesisFamily& family, const Dataset& chunk, const Point& test, Label label,
                            const OracleOptions& opt) {
  return is_robustly_realizable(family, chunk, 0, opt).realizable &&
         in_robust_agreement(family, chunk, 0, test, label, opt);
}

}  // namespace detail

/// Splits the stream into chunks, keeps chunks that are realizable and
/// already certify (test, label) at b = 0, and concatenates minimal
/// 0-certificates of the first b+1 of them. Any hypothesis with at most b
/// mistakes on the concatenation is perfect on one of the parts.
inline ChunkedCertificate chunked_certificate(const HypothesisFamily& family, const ExampleStream& stream,
                                              std::uint64_t b, const Point& test, Label label, ChunkOptions copt = {},
                                              const OracleOptions& opt = {}) {
  const std::size_t needed = copt.chunks_needed == 0 ? static_cast<std::size_t>(b + 1) : copt.chunks_needed;
  ChunkedCertificate out;

  std::size_t size = copt.chunk_size;
  if (size == 0) {
    size = 4;
    while (true) {
      std::size_t ok = 0;
      for (std::size_t i = 0; i < copt.probe_chunks; ++i) {
        if (detail::chunk_qualifies(family, detail::draw_chunk(stream, size), test, label, opt)) ++ok;
      }
      if (2 * ok >= copt.probe_chunks || size >= copt.max_chunk_size) break;
      size = std::min(size * 2, copt.max_chunk_size);
    }
  }
  out.chunk_size = size;

  std::vector<LabeledExample> drawn;
  std::vector<std::size_t> indices;
  while (out.retained_chunks.size() < needed) {
    if (out.chunks_scanned >= copt.max_chunks) {
      throw InsufficientSampleError("stream exhausted after " + std::to_string(out.chunks_scanned) +
                                        " chunks with only " + std::to_string(out.retained_chunks.size()) +
                                        " qualifying",
                                    out.chunks_scanned);
    }
    const Dataset chunk = detail::draw_chunk(stream, size);
    const std::size_t offset = drawn.size();
    drawn.insert(drawn.end(), chunk.examples().begin(), chunk.examples().end());
    ++out.chunks_scanned;
    if (!detail::chunk_qualifies(family, chunk, test, label, opt)) continue;
    const auto part = minimal_certificate(family, chunk, 0, test, label, opt);
    for (auto i : part.indices) indices.push_back(offset + i);
    out.retained_chunks.push_back(out.chunks_scanned - 1);
  }
  std::sort(indices.begin(), indices.end());
  out.certificate = {Dataset(std::move(drawn)), std::move(indices), b, test, label, false};
  if (!is_certificate(family, out.certificate, opt)) {
    throw NotCertifiableError("concatenated chunk certificates failed validation; corruption exceeds the budget");
  }
  return out;
}

/// b+1 copies of a 0-star's body with the distinguished point as test and
/// its label flipped: every certificate must keep all copies.
inline CertificationInstance chunk_lower_instance(const HollowStar& star, std::uint64_t b) {
  if (star.budget != 0) throw InputError("chunk_lower_instance expects a 0-robust hollow star");
  auto base = hardest_instance(star);
  std::vector<LabeledExample> ex;
  ex.reserve(base.data.size() * (b + 1));
  for (std::uint64_t c = 0; c <= b; ++c) ex.insert(ex.end(), base.data.examples().begin(), base.data.examples().end());
  return {Dataset(std::move(ex)), base.test, base.label};
}

}  // namespace certikit
