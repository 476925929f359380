#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "certikit/error.hpp"

namespace certikit {

enum class Label : std::int8_t { negative = -1, positive = 1 };

constexpr Label flip(Label y) noexcept {
  return y == Label::positive ? Label::negative : Label::positive;
}

constexpr int to_int(Label y) noexcept { return static_cast<int>(y); }

inline Label label_from_int(long long v) {
  if (v == 1) return Label::positive;
  if (v == -1) return Label::negative;
  throw InputError("label must be +1 or -1, got " + std::to_string(v));
}

/// A domain element: either a natural-number id from a finite domain or a
/// real coordinate vector.
class Point {
 public:
  Point() : value_(std::uint64_t{0}) {}

  static Point discrete(std::uint64_t id) { return Point(id); }
  static Point vector(std::vector<double> coords) {
    if (coords.empty()) throw InputError("vector point must have dimension >= 1");
    return Point(std::move(coords));
  }

  bool is_discrete() const noexcept { return std::holds_alternative<std::uint64_t>(value_); }
  bool is_vector() const noexcept { return !is_discrete(); }

  std::uint64_t id() const {
    if (!is_discrete()) throw InputError("expected a discrete point, got a vector");
    return std::get<std::uint64_t>(value_);
  }

  std::span<const double> coords() const {
    if (is_discrete()) throw InputError("expected a vector point, got a discrete id");
    return std::get<std::vector<double>>(value_);
  }

  /// 0 for discrete points.
  std::size_t dimension() const noexcept {
    return is_discrete() ? 0 : std::get<std::vector<double>>(value_).size();
  }

  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point& a, const Point& b) { return a.value_ <=> b.value_; }

 private:
  explicit Point(std::uint64_t id) : value_(id) {}
  explicit Point(std::vector<double> v) : value_(std::move(v)) {}

  std::variant<std::uint64_t, std::vector<double>> value_;
};

struct LabeledExample {
  Point point;
  Label label = Label::positive;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
  friend auto operator<=>(const LabeledExample&, const LabeledExample&) = default;
};

struct WeightedExample {
  Point point;
  Label label = Label::positive;
  std::uint64_t weight = 1;

  friend bool operator==(const WeightedExample&, const WeightedExample&) = default;
};

/// Ordered sequence of labeled examples. Duplicates are meaningful. Each
/// example remembers its index in the dataset it was originally cut from.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(std::vector<LabeledExample> examples) : examples_(std::move(examples)) {
    origin_.resize(examples_.size());
    for (std::size_t i = 0; i < origin_.size(); ++i) origin_[i] = i;
    check_dimensions();
  }

  Dataset(std::vector<LabeledExample> examples, std::vector<std::size_t> origin)
      : examples_(std::move(examples)), origin_(std::move(origin)) {
    if (origin_.size() != examples_.size()) throw InputError("provenance length mismatch");
    check_dimensions();
  }

  std::size_t size() const noexcept { return examples_.size(); }
  bool empty() const noexcept { return examples_.empty(); }
  const LabeledExample& operator[](std::size_t i) const { return examples_.at(i); }
  std::span<const LabeledExample> examples() const noexcept { return examples_; }

  /// Index of example i in the original source dataset.
  std::size_t origin(std::size_t i) const { return origin_.at(i); }
  std::span<const std::size_t> origins() const noexcept { return origin_; }

  /// Coordinate dimension of vector examples, 0 for discrete or empty data.
  std::size_t dimension() const noexcept {
    return examples_.empty() ? 0 : examples_.front().point.dimension();
  }

  /// Returns a copy with one example appended (provenance index = size()).
  Dataset with(LabeledExample extra) const {
    auto ex = examples_;
    auto org = origin_;
    org.push_back(ex.size());
    ex.push_back(std::move(extra));
    return Dataset(std::move(ex), std::move(org));
  }

  friend bool operator==(const Dataset& a, const Dataset& b) { return a.examples_ == b.examples_; }

 private:
  void check_dimensions() const {
    if (examples_.empty()) return;
    const auto dim = examples_.front().point.dimension();
    for (const auto& e : examples_) {
      if (e.point.dimension() != dim) throw InputError("mixed point kinds or dimensions in dataset");
    }
  }

  std::vector<LabeledExample> examples_;
  std::vector<std::size_t> origin_;
};

/// Ordered subsequence selected by `indices` (taken in the given order).
/// Provenance composes: the result's origins point into the root dataset.
inline Dataset subsequence(const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<LabeledExample> ex;
  std::vector<std::size_t> org;
  ex.reserve(indices.size());
  org.reserve(indices.size());
  for (auto i : indices) {
    if (i >= data.size()) {
      throw InputError("index " + std::to_string(i) + " out of range for dataset of size " +
                       std::to_string(data.size()));
    }
    ex.push_back(data[i]);
    org.push_back(data.origin(i));
  }
  return Dataset(std::move(ex), std::move(org));
}

/// Unit weights everywhere except the optional heavy element.
inline std::vector<WeightedExample> weighted_view(const Dataset& data,
                                                  std::optional<std::size_t> heavy_index = std::nullopt,
                                                  std::uint64_t heavy_weight = 1) {
  if (heavy_weight < 1) throw InputError("heavy weight must be >= 1");
  if (heavy_index && *heavy_index >= data.size()) throw InputError("heavy index out of range");
  std::vector<WeightedExample> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool heavy = heavy_index && *heavy_index == i;
    out.push_back({data[i].point, data[i].label, heavy ? heavy_weight : 1});
  }
  return out;
}

/// A subset of `source` claimed to pin `claimed_label` at `test` against any
/// hypothesis erring at most `budget` times on it.
struct Certificate {
  Dataset source;
  std::vector<std::size_t> indices;  // sorted, into source
  std::uint64_t budget = 0;
  Point test;
  Label claimed_label = Label::positive;
  bool minimal = false;

  std::size_t size() const noexcept { return indices.size(); }
  Dataset selected() const { return subsequence(source, indices); }
};

/// A dataset together with the (test, label) pair it is meant to certify.
struct CertificationInstance {
  Dataset data;
  Point test;
  Label label = Label::positive;
};

inline std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace certikit
