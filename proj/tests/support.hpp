#pragma once

#include <vector>

#include "certikit/certikit.hpp"
#include "oracle.hpp"

namespace support {

using namespace certikit;

inline oracle::Rows rows_of(const FiniteFamily& f) {
  oracle::Rows rows(f.hypothesis_count(), std::vector<int>(f.domain_size()));
  for (std::size_t h = 0; h < f.hypothesis_count(); ++h) {
    for (std::size_t c = 0; c < f.domain_size(); ++c) rows[h][c] = to_int(f.predict_column(h, c));
  }
  return rows;
}

inline std::vector<oracle::Ex> seq_of(const FiniteFamily& f, const Dataset& d) {
  std::vector<oracle::Ex> out;
  for (const auto& e : d.examples()) out.push_back({f.column(e.point), to_int(e.label), 1});
  return out;
}

inline Dataset discrete(std::initializer_list<std::pair<std::uint64_t, int>> items) {
  std::vector<LabeledExample> ex;
  for (auto [id, y] : items) ex.push_back({Point::discrete(id), label_from_int(y)});
  return Dataset(std::move(ex));
}

inline Point vec(std::initializer_list<double> v) { return Point::vector(std::vector<double>(v)); }

/// Random finite family on domain {1..n} with `hyps` distinct rows.
inline FiniteFamily random_family(Rng& rng, std::size_t n, std::size_t hyps) {
  hyps = std::min<std::size_t>(hyps, std::size_t{1} << n);
  std::vector<std::uint64_t> masks;
  while (masks.size() < hyps) {
    const auto m = rng.below(std::uint64_t{1} << n);
    if (std::find(masks.begin(), masks.end(), m) == masks.end()) masks.push_back(m);
  }
  std::vector<std::uint64_t> domain;
  for (std::size_t i = 1; i <= n; ++i) domain.push_back(i);
  std::vector<std::vector<Label>> rows;
  for (auto m : masks) {
    std::vector<Label> r;
    for (std::size_t i = 0; i < n; ++i) r.push_back(m >> i & 1 ? Label::positive : Label::negative);
    rows.push_back(std::move(r));
  }
  return FiniteFamily(std::move(domain), std::move(rows));
}

}  // namespace support
