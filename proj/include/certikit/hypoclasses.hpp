#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "certikit/domain.hpp"
#include "certikit/error.hpp"

namespace certikit {

/// A row index / singleton id for enumerable families, or a weight vector
/// (in lifted coordinates) for halfspaces.
using Hypothesis = std::variant<std::size_t, std::vector<double>>;

/// Explicit sign matrix over a finite domain of natural-number ids.
class FiniteFamily {
 public:
  FiniteFamily(std::vector<std::uint64_t> domain, std::vector<std::vector<Label>> rows)
      : domain_(std::move(domain)), count_(rows.size()) {
    for (std::size_t c = 0; c < domain_.size(); ++c) {
      if (!column_.emplace(domain_[c], c).second) {
        throw InputError("duplicate domain id " + std::to_string(domain_[c]));
      }
    }
    signs_.reserve(rows.size() * domain_.size());
    std::unordered_set<std::string> seen;
    for (const auto& row : rows) {
      if (row.size() != domain_.size()) throw InputError("hypothesis row length != domain size");
      std::string key(row.size(), '\0');
      for (std::size_t c = 0; c < row.size(); ++c) {
        key[c] = row[c] == Label::positive ? '+' : '-';
        signs_.push_back(row[c]);
      }
      if (!seen.insert(std::move(key)).second) throw InputError("hypothesis rows must be distinct");
    }
  }

  std::size_t hypothesis_count() const noexcept { return count_; }
  std::size_t hypothesis_id(std::size_t k) const noexcept { return k; }
  std::size_t domain_size() const noexcept { return domain_.size(); }
  std::span<const std::uint64_t> domain() const noexcept { return domain_; }

  /// Column of a domain point; throws for points outside the domain.
  std::size_t column(const Point& p) const {
    if (!p.is_discrete()) throw InputError("finite family expects discrete points");
    const auto it = column_.find(p.id());
    if (it == column_.end()) throw InputError("point " + std::to_string(p.id()) + " not in domain");
    return it->second;
  }

  Label predict_column(std::size_t h, std::size_t col) const noexcept {
    return signs_[h * domain_.size() + col];
  }

  Label predict(std::size_t h, const Point& p) const {
    check_id(h);
    return predict_column(h, column(p));
  }

  std::span<const Label> row(std::size_t h) const {
    check_id(h);
    return {signs_.data() + h * domain_.size(), domain_.size()};
  }

  void check_id(std::size_t h) const {
    if (h >= count_) throw InputError("hypothesis index " + std::to_string(h) + " out of range");
  }

  /// Largest shattered subset size, by exhaustive search.
  std::size_t vc_dimension() const {
    std::size_t best = 0;
    for (std::size_t s = 1; s <= domain_.size(); ++s) {
      if (!shatters_some_subset(s)) break;
      best = s;
    }
    return best;
  }

 private:
  bool shatters_some_subset(std::size_t s) const {
    if (s >= 63 || (std::size_t{1} << s) > count_) return false;
    std::vector<std::size_t> pick(s);
    std::iota(pick.begin(), pick.end(), 0);
    const std::size_t n = domain_.size();
    std::vector<char> hit(std::size_t{1} << s);
    while (true) {
      std::fill(hit.begin(), hit.end(), 0);
      std::size_t distinct = 0;
      for (std::size_t h = 0; h < count_ && distinct < hit.size(); ++h) {
        std::size_t pattern = 0;
        for (std::size_t j = 0; j < s; ++j) {
          if (predict_column(h, pick[j]) == Label::positive) pattern |= std::size_t{1} << j;
        }
        if (!hit[pattern]) {
          hit[pattern] = 1;
          ++distinct;
        }
      }
      if (distinct == hit.size()) return true;
      // next combination
      std::size_t i = s;
      while (i > 0 && pick[i - 1] == n - s + i - 1) --i;
      if (i == 0) return false;
      ++pick[i - 1];
      for (std::size_t j = i; j < s; ++j) pick[j] = pick[j - 1] + 1;
    }
  }

  std::vector<std::uint64_t> domain_;
  std::unordered_map<std::uint64_t, std::size_t> column_;
  std::size_t count_ = 0;
  std::vector<Label> signs_;  // count_ x domain_.size(), row-major
};

/// Singletons on {1..n}: hypothesis i labels only point i positive.
class Singletons {
 public:
  explicit Singletons(std::size_t n) : n_(n) {
    if (n == 0) throw InputError("singletons need n >= 1");
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t hypothesis_count() const noexcept { return n_; }
  std::size_t hypothesis_id(std::size_t k) const noexcept { return k + 1; }
  std::size_t domain_size() const noexcept { return n_; }

  std::size_t column(const Point& p) const {
    if (!p.is_discrete()) throw InputError("singletons expect discrete points");
    if (p.id() < 1 || p.id() > n_) throw InputError("point " + std::to_string(p.id()) + " not in [1, n]");
    return static_cast<std::size_t>(p.id() - 1);
  }

  Label predict_column(std::size_t k, std::size_t col) const noexcept {
    return k == col ? Label::positive : Label::negative;
  }

  Label predict(std::size_t h, const Point& p) const {
    check_id(h);
    return predict_column(h - 1, column(p));
  }

  void check_id(std::size_t h) const {
    if (h < 1 || h > n_) throw InputError("singleton hypothesis " + std::to_string(h) + " not in [1, n]");
  }

  std::size_t vc_dimension() const noexcept { return n_ >= 2 ? 1 : 0; }

  FiniteFamily to_finite() const {
    std::vector<std::uint64_t> domain(n_);
    std::iota(domain.begin(), domain.end(), std::uint64_t{1});
    std::vector<std::vector<Label>> rows(n_, std::vector<Label>(n_, Label::negative));
    for (std::size_t i = 0; i < n_; ++i) rows[i][i] = Label::positive;
    return FiniteFamily(std::move(domain), std::move(rows));
  }

 private:
  std::size_t n_;
};

/// Halfspaces {x -> +1 iff w.x >= 0}. The affine variant works on the lift
/// x -> (x, 1), so every weight vector lives in lifted_dimension().
class Halfspaces {
 public:
  Halfspaces(std::size_t dim, bool affine) : dim_(dim), affine_(affine) {
    if (dim == 0) throw InputError("halfspaces need dimension >= 1");
  }

  static Halfspaces homogeneous(std::size_t d) { return Halfspaces(d, false); }
  static Halfspaces affine(std::size_t d) { return Halfspaces(d, true); }

  std::size_t ambient_dimension() const noexcept { return dim_; }
  std::size_t lifted_dimension() const noexcept { return dim_ + (affine_ ? 1 : 0); }
  bool is_affine() const noexcept { return affine_; }
  std::size_t vc_dimension() const noexcept { return lifted_dimension(); }

  std::vector<double> lift(const Point& p) const {
    const auto x = p.coords();
    if (x.size() != dim_) {
      throw InputError("point dimension " + std::to_string(x.size()) + " != family dimension " +
                       std::to_string(dim_));
    }
    std::vector<double> out(x.begin(), x.end());
    if (affine_) out.push_back(1.0);
    return out;
  }

  Label predict(std::span<const double> w, const Point& p) const {
    check_weights(w);
    const auto z = lift(p);
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += w[i] * z[i];
    return s >= 0.0 ? Label::positive : Label::negative;
  }

  void check_weights(std::span<const double> w) const {
    if (w.size() != lifted_dimension()) {
      throw InputError("weight vector has dimension " + std::to_string(w.size()) + ", expected " +
                       std::to_string(lifted_dimension()));
    }
  }

 private:
  std::size_t dim_;
  bool affine_;
};

using HypothesisFamily = std::variant<FiniteFamily, Singletons, Halfspaces>;

enum class FamilyKind { finite, singletons, halfspace, affine_halfspace };

inline FamilyKind kind(const HypothesisFamily& f) {
  if (std::holds_alternative<FiniteFamily>(f)) return FamilyKind::finite;
  if (std::holds_alternative<Singletons>(f)) return FamilyKind::singletons;
  return std::get<Halfspaces>(f).is_affine() ? FamilyKind::affine_halfspace : FamilyKind::halfspace;
}

inline std::size_t vc_dimension(const HypothesisFamily& f) {
  return std::visit([](const auto& fam) { return fam.vc_dimension(); }, f);
}

template <class F>
concept EnumerableFamily = requires(const F& f, std::size_t k, const Point& p) {
  { f.hypothesis_count() } -> std::convertible_to<std::size_t>;
  { f.hypothesis_id(k) } -> std::convertible_to<std::size_t>;
  { f.column(p) } -> std::convertible_to<std::size_t>;
  { f.predict_column(k, k) } -> std::same_as<Label>;
};

inline void validate_hypothesis(const HypothesisFamily& family, const Hypothesis& h) {
  std::visit(
      [&](const auto& fam) {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, Halfspaces>) {
          if (!std::holds_alternative<std::vector<double>>(h)) throw InputError("halfspace hypothesis must be a weight vector");
          fam.check_weights(std::get<std::vector<double>>(h));
        } else {
          if (!std::holds_alternative<std::size_t>(h)) throw InputError("enumerable hypothesis must be an index");
          fam.check_id(std::get<std::size_t>(h));
        }
      },
      family);
}

inline Label predict(const HypothesisFamily& family, const Hypothesis& h, const Point& p) {
  validate_hypothesis(family, h);
  return std::visit(
      [&](const auto& fam) -> Label {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, Halfspaces>) {
          return fam.predict(std::get<std::vector<double>>(h), p);
        } else {
          return fam.predict(std::get<std::size_t>(h), p);
        }
      },
      family);
}

/// The unknown target h* the data is labeled by.
struct TargetHypothesis {
  HypothesisFamily family;
  Hypothesis id;

  TargetHypothesis(HypothesisFamily f, Hypothesis h) : family(std::move(f)), id(std::move(h)) {
    validate_hypothesis(family, id);
  }

  Label operator()(const Point& p) const { return predict(family, id, p); }
};

inline Dataset label_dataset(const HypothesisFamily& family, const Hypothesis& target,
                             std::span<const Point> points) {
  validate_hypothesis(family, target);
  std::vector<LabeledExample> ex;
  ex.reserve(points.size());
  for (const auto& p : points) ex.push_back({p, predict(family, target, p)});
  return Dataset(std::move(ex));
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > static_cast<unsigned __int128>(UINT64_MAX)) return UINT64_MAX;
  }
  return static_cast<std::uint64_t>(r);
}

inline constexpr std::uint64_t kProp53Guard = 10'000'000;

/// Domain {0..k}: one hypothesis per d-subset of {1..k} labeling exactly that
/// subset positive (lexicographic order), then the target labeling only 0
/// positive, at index prop53_target(d, k).
inline FiniteFamily prop53_family(std::size_t d, std::size_t k) {
  if (d < 1 || k < d) throw InputError("prop53 family needs k >= d >= 1");
  const auto count = binomial(k, d);
  if (count > kProp53Guard) throw CapacityError("prop53 family: C(k,d) exceeds enumeration guard");
  std::vector<std::uint64_t> domain(k + 1);
  std::iota(domain.begin(), domain.end(), std::uint64_t{0});
  std::vector<std::vector<Label>> rows;
  rows.reserve(count + 1);
  std::vector<std::size_t> pick(d);
  std::iota(pick.begin(), pick.end(), std::size_t{1});
  while (true) {
    std::vector<Label> row(k + 1, Label::negative);
    for (auto i : pick) row[i] = Label::positive;
    rows.push_back(std::move(row));
    std::size_t i = d;
    while (i > 0 && pick[i - 1] == k - d + i) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < d; ++j) pick[j] = pick[j - 1] + 1;
  }
  std::vector<Label> star(k + 1, Label::negative);
  star[0] = Label::positive;
  rows.push_back(std::move(star));
  return FiniteFamily(std::move(domain), std::move(rows));
}

inline std::size_t prop53_target(std::size_t d, std::size_t k) {
  return static_cast<std::size_t>(binomial(k, d));
}

}  // namespace certikit
