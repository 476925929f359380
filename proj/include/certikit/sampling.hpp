#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "certikit/certify.hpp"
#include "certikit/conic.hpp"
#include "certikit/domain.hpp"
#include "certikit/error.hpp"
#include "certikit/hypoclasses.hpp"
#include "certikit/oracles.hpp"
#include "certikit/parallel.hpp"
#include "certikit/rng.hpp"

namespace certikit {

class Distribution {
 public:
  static Distribution finite_support(std::vector<Point> points, std::vector<double> probs) {
    if (points.empty() || points.size() != probs.size()) throw InputError("finite support needs matching nonempty points and probabilities");
    double total = 0;
    for (double p : probs) {
      if (!(p >= 0)) throw InputError("probabilities must be nonnegative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("probabilities must sum to 1");
    Distribution d;
    std::vector<double> cum(probs.size());
    std::partial_sum(probs.begin(), probs.end(), cum.begin());
    d.value_ = Finite{std::move(points), std::move(probs), std::move(cum)};
    return d;
  }

  static Distribution uniform_over(std::vector<Point> points) {
    std::vector<double> probs(points.size(), points.empty() ? 0.0 : 1.0 / static_cast<double>(points.size()));
    if (!probs.empty()) {
      // absorb rounding so the sum is within tolerance for any size
      probs.back() = 1.0 - std::accumulate(probs.begin(), probs.end() - 1, 0.0);
    }
    return finite_support(std::move(points), std::move(probs));
  }

  static Distribution uniform_ball(std::vector<double> center, double radius) {
    if (center.empty()) throw InputError("ball center must have dimension >= 1");
    if (!(radius > 0)) throw InputError("ball radius must be positive");
    Distribution d;
    d.value_ = Ball{std::move(center), radius};
    return d;
  }

  bool is_finite() const noexcept { return std::holds_alternative<Finite>(value_); }

  const std::vector<Point>& support() const { return finite().points; }
  const std::vector<double>& probabilities() const { return finite().probs; }
  std::span<const double> center() const { return ball().center; }
  double radius() const { return ball().radius; }

  /// Coordinate dimension; 0 for discrete supports.
  std::size_t dimension() const {
    if (is_finite()) return finite().points.front().dimension();
    return ball().center.size();
  }

  /// Probability of one point (finite support only).
  double mass(const Point& p) const {
    const auto& f = finite();
    double m = 0;
    for (std::size_t i = 0; i < f.points.size(); ++i) {
      if (f.points[i] == p) m += f.probs[i];
    }
    return m;
  }

  Point sample(Rng& rng) const {
    if (const auto* f = std::get_if<Finite>(&value_)) {
      const double u = rng.uniform() * f->cum.back();
      auto it = std::upper_bound(f->cum.begin(), f->cum.end(), u);
      std::size_t i = static_cast<std::size_t>(it - f->cum.begin());
      if (i >= f->points.size()) i = f->points.size() - 1;
      while (f->probs[i] == 0 && i > 0) --i;
      return f->points[i];
    }
    const auto& b = ball();
    const std::size_t d = b.center.size();
    std::vector<double> g(d);
    double norm = 0;
    do {
      norm = 0;
      for (double& v : g) {
        v = rng.normal();
        norm += v * v;
      }
    } while (norm == 0);
    norm = std::sqrt(norm);
    const double r = b.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    for (std::size_t i = 0; i < d; ++i) g[i] = b.center[i] + r * g[i] / norm;
    return Point::vector(std::move(g));
  }

  std::vector<Point> sample(std::size_t m, Rng& rng) const {
    std::vector<Point> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) out.push_back(sample(rng));
    return out;
  }

 private:
  struct Finite {
    std::vector<Point> points;
    std::vector<double> probs;
    std::vector<double> cum;
  };
  struct Ball {
    std::vector<double> center;
    double radius;
  };

  const Finite& finite() const {
    if (const auto* f = std::get_if<Finite>(&value_)) return *f;
    throw InputError("operation needs a finite-support distribution");
  }
  const Ball& ball() const {
    if (const auto* b = std::get_if<Ball>(&value_)) return *b;
    throw InputError("operation needs a uniform-ball distribution");
  }

  std::variant<Finite, Ball> value_;
};

/// A weight function w: X -> [0, 1] used to tilt D into D_w ~ w * D.
class ReweightingScheme {
 public:
  static ReweightingScheme ball_indicator(std::vector<double> center, double radius) {
    if (center.empty() || !(radius > 0)) throw InputError("ball indicator needs a center and positive radius");
    ReweightingScheme s;
    s.value_ = BallIndicator{std::move(center), radius};
    return s;
  }

  static ReweightingScheme constant(double c) {
    if (!(c > 0 && c <= 1)) throw InputError("constant weight must lie in (0, 1]");
    ReweightingScheme s;
    s.value_ = Constant{c};
    return s;
  }

  /// Weights for listed points; unlisted points get weight 0.
  static ReweightingScheme table(std::vector<std::pair<Point, double>> entries) {
    for (const auto& [p, w] : entries) {
      if (!(w >= 0 && w <= 1)) throw InputError("table weights must lie in [0, 1]");
    }
    ReweightingScheme s;
    s.value_ = Table{std::move(entries)};
    return s;
  }

  double weight(const Point& z) const {
    if (const auto* c = std::get_if<Constant>(&value_)) return c->c;
    if (const auto* t = std::get_if<Table>(&value_)) {
      for (const auto& [p, w] : t->entries) {
        if (p == z) return w;
      }
      return 0.0;
    }
    const auto& b = std::get<BallIndicator>(value_);
    const auto x = z.coords();
    if (x.size() != b.center.size()) throw InputError("ball indicator dimension mismatch");
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - b.center[i]) * (x[i] - b.center[i]);
    return s <= b.radius * b.radius ? 1.0 : 0.0;
  }

  /// D_w when it has a closed form: finite support, a constant weight, or a
  /// ball indicator lying inside a uniform ball.
  std::optional<Distribution> tilted(const Distribution& dist) const {
    if (std::holds_alternative<Constant>(value_)) return dist;
    if (dist.is_finite()) {
      const auto& pts = dist.support();
      const auto& pr = dist.probabilities();
      std::vector<Point> keep;
      std::vector<double> mass;
      double z = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double m = weight(pts[i]) * pr[i];
        if (m > 0) {
          keep.push_back(pts[i]);
          mass.push_back(m);
          z += m;
        }
      }
      if (keep.empty()) return std::nullopt;
      for (double& m : mass) m /= z;
      const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
      mass.back() += 1.0 - total;
      return Distribution::finite_support(std::move(keep), std::move(mass));
    }
    if (const auto* b = std::get_if<BallIndicator>(&value_)) {
      if (contained(*b, dist)) return Distribution::uniform_ball(b->center, b->radius);
    }
    return std::nullopt;
  }

  /// Z = E_D[w]. Exact when a closed form exists, else a Monte Carlo mean.
  double normalizer(const Distribution& dist, std::size_t mc_samples = 100'000, std::uint64_t seed = 0) const {
    if (const auto* c = std::get_if<Constant>(&value_)) return c->c;
    if (dist.is_finite()) {
      double z = 0;
      for (std::size_t i = 0; i < dist.support().size(); ++i) z += weight(dist.support()[i]) * dist.probabilities()[i];
      return z;
    }
    const auto& b = std::get<BallIndicator>(value_);
    if (contained(b, dist)) return std::pow(b.radius / dist.radius(), static_cast<double>(dist.dimension()));
    Rng rng(seed);
    double z = 0;
    for (std::size_t i = 0; i < mc_samples; ++i) z += weight(dist.sample(rng));
    return z / static_cast<double>(std::max<std::size_t>(mc_samples, 1));
  }

 private:
  struct BallIndicator {
    std::vector<double> center;
    double radius;
  };
  struct Constant {
    double c;
  };
  struct Table {
    std::vector<std::pair<Point, double>> entries;
  };

  static bool contained(const BallIndicator& b, const Distribution& dist) {
    if (dist.is_finite() || dist.dimension() != b.center.size()) return false;
    const auto c = dist.center();
    double s = 0;
    for (std::size_t i = 0; i < c.size(); ++i) s += (c[i] - b.center[i]) * (c[i] - b.center[i]);
    return std::sqrt(s) + b.radius <= dist.radius() * (1 + 1e-12);
  }

  std::variant<BallIndicator, Constant, Table> value_ = Constant{1.0};
};

/// Smallest admissible normalizer: eps^3 / (8 (b+1) (d+1)).
inline double validity_threshold(double eps, std::uint64_t b, std::size_t d) {
  return eps * eps * eps / (8.0 * static_cast<double>(b + 1) * static_cast<double>(d + 1));
}

inline constexpr double kNoCoefficient = std::numeric_limits<double>::infinity();

namespace detail {

template <class F>
void for_each_hypothesis(const HypothesisFamily& family, F&& f) {
  std::visit(
      [&](const auto& fam) {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Halfspaces>) {
          throw InputError("operation needs a finite hypothesis family");
        } else {
          for (std::size_t k = 0; k < fam.hypothesis_count(); ++k) f(Hypothesis{fam.hypothesis_id(k)});
        }
      },
      family);
}

}  // namespace detail

/// eps_x = min over hypotheses h with h(test) != target(test) of
/// Pr_D[h != target]; infinity when no hypothesis disagrees at the test.
inline double certificate_coefficient(const HypothesisFamily& family, const Distribution& dist,
                                      const Hypothesis& target, const Point& test) {
  validate_hypothesis(family, target);
  if (!dist.is_finite()) throw InputError("exact certificate coefficient needs a finite-support distribution");
  const Label at_test = predict(family, target, test);
  const auto& pts = dist.support();
  const auto& pr = dist.probabilities();
  std::vector<Label> truth;
  truth.reserve(pts.size());
  for (const auto& p : pts) truth.push_back(predict(family, target, p));
  double best = kNoCoefficient;
  detail::for_each_hypothesis(family, [&](const Hypothesis& h) {
    if (predict(family, h, test) == at_test) return;
    double mass = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (predict(family, h, pts[i]) != truth[i]) mass += pr[i];
    }
    best = std::min(best, mass);
  });
  return best;
}

struct CoefficientEstimate {
  double estimate = 0;
  double half_width = 0;
  /// Lifted weights of the selected halfspace.
  std::vector<double> witness;
};

/// Upper estimate of eps_x for halfspaces. The infimum is restricted to
/// hyperplanes through the test point: random directions plus, for a
/// uniform ball, the one orthogonal to test - center. Half the samples pick
/// the best candidate, the other half estimate its disagreement, so the
/// estimate is unbiased for a member of H_x and hence an upper estimate.
inline CoefficientEstimate certificate_coefficient_mc(const Halfspaces& family, const Distribution& dist,
                                                      const std::vector<double>& target, const Point& test,
                                                      std::size_t samples, std::uint64_t seed,
                                                      std::size_t directions = 256) {
  if (samples < 1000) throw InputError("Monte Carlo coefficient needs at least 1000 samples");
  family.check_weights(target);
  const std::size_t D = family.lifted_dimension();
  const Vec xt = family.lift(test);
  const double xt2 = dot(xt, xt);
  const bool target_positive = family.predict(target, test) == Label::positive;
  const double shift = 1e-9;

  // W.lift(test) == 0 predicts +1 at the test; shifting along -lift(test)
  // makes it -1.
  auto orient = [&](Vec w) {
    if (xt2 > 0) {
      const double a = dot(w, xt) / xt2;
      for (std::size_t i = 0; i < D; ++i) w[i] -= a * xt[i];
    }
    const double n = norm_inf(w);
    if (n == 0) return w;
    for (double& v : w) v /= n;
    if (target_positive && xt2 > 0) {
      for (std::size_t i = 0; i < D; ++i) w[i] -= shift * xt[i] / xt2;
    }
    return w;
  };

  Rng rng(derive_seed(seed, 0));
  std::vector<Vec> cand;
  if (!dist.is_finite() && dist.dimension() == family.ambient_dimension()) {
    Vec u(family.ambient_dimension(), 0.0);
    const auto t = test.coords();
    const auto c = dist.center();
    double nn = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = t[i] - c[i];
      nn += u[i] * u[i];
    }
    if (nn == 0) u[0] = 1;
    Vec w(D, 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i];
    if (family.is_affine()) w[D - 1] = -dot(u, t);
    cand.push_back(orient(w));
    for (double& v : w) v = -v;
    cand.push_back(orient(w));
  }
  for (std::size_t k = 0; k < directions; ++k) {
    Vec w(D);
    for (double& v : w) v = rng.normal();
    cand.push_back(orient(w));
  }
  std::erase_if(cand, [](const Vec& w) { return norm_inf(w) == 0; });
  std::erase_if(cand, [&](const Vec& w) { return family.predict(w, test) == (target_positive ? Label::positive : Label::negative); });
  if (cand.empty()) return {kNoCoefficient, 0, {}};

  const std::size_t select_n = samples / 2;
  const std::size_t eval_n = samples - select_n;
  Rng pick_rng(derive_seed(seed, 1));
  std::vector<std::size_t> err(cand.size(), 0);
  for (std::size_t s = 0; s < select_n; ++s) {
    const Point z = dist.sample(pick_rng);
    const Label y = family.predict(target, z);
    for (std::size_t k = 0; k < cand.size(); ++k) {
      if (family.predict(cand[k], z) != y) ++err[k];
    }
  }
  const std::size_t best = static_cast<std::size_t>(std::min_element(err.begin(), err.end()) - err.begin());

  Rng eval_rng(derive_seed(seed, 2));
  std::size_t miss = 0;
  for (std::size_t s = 0; s < eval_n; ++s) {
    const Point z = dist.sample(eval_rng);
    if (family.predict(cand[best], z) != family.predict(target, z)) ++miss;
  }
  const double p = static_cast<double>(miss) / static_cast<double>(eval_n);
  const double hw = 1.959963984540054 * std::sqrt(std::max(p * (1 - p), 0.25 / static_cast<double>(eval_n)) / static_cast<double>(eval_n));
  return {p, hw, cand[best]};
}

/// ceil(C (b + d ln(1/eps) + ln(1/delta)) / eps).
inline std::uint64_t sample_size_bound(std::uint64_t b, std::size_t d, double eps, double delta, double C = 8.0) {
  if (eps == 0) throw UnboundableError("certificate coefficient is 0: no sample size certifies this point");
  if (!(eps > 0 && eps <= 1)) throw InputError("eps must lie in (0, 1]");
  if (!(delta > 0 && delta < 1)) throw InputError("delta must lie in (0, 1)");
  if (d < 1) throw InputError("d must be >= 1");
  if (!(C > 0)) throw InputError("constant C must be positive");
  const double v = C * (static_cast<double>(b) + static_cast<double>(d) * std::log(1 / eps) + std::log(1 / delta)) / eps;
  const double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v))) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(v));
}

struct Interval {
  double low = 0;
  double high = 1;
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054) {
  if (n == 0) return {0, 1};
  const double N = static_cast<double>(n);
  const double p = static_cast<double>(successes) / N;
  const double denom = 1 + z * z / N;
  const double mid = (p + z * z / (2 * N)) / denom;
  const double hw = z * std::sqrt(p * (1 - p) / N + z * z / (4 * N * N)) / denom;
  return {successes == 0 ? 0.0 : std::max(0.0, mid - hw), successes == n ? 1.0 : std::min(1.0, mid + hw)};
}

struct TrialRecord {
  std::uint64_t seed = 0;
  std::size_t m = 0;
  std::uint64_t b = 0;
  bool in_agreement = false;
  /// The oracle hit its capacity guard; the trial has no outcome.
  bool capacity = false;
  std::optional<std::size_t> certificate_size;
  double wall_time = 0;
};

struct CurvePoint {
  std::size_t m = 0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  std::size_t capacity = 0;
  /// Over trials with an outcome.
  double prob = 0;
  Interval ci;
};

struct CurveOptions {
  OracleOptions oracle{};
  unsigned threads = 0;
  /// Reject the request up front when eps_x is computably 0.
  bool require_positive_coefficient = true;
  bool keep_records = false;
};

struct Curve {
  std::vector<CurvePoint> points;
  std::vector<TrialRecord> records;
};

/// One seeded trial: S ~ D^m labeled by the target, then the agreement test.
inline TrialRecord agreement_trial(const HypothesisFamily& family, const Distribution& dist, const Hypothesis& target,
                                   const Point& test, std::uint64_t b, std::size_t m, std::uint64_t seed,
                                   const OracleOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialRecord rec;
  rec.seed = seed;
  rec.m = m;
  rec.b = b;
  Rng rng(seed);
  const auto pts = dist.sample(m, rng);
  const Dataset S = label_dataset(family, target, pts);
  try {
    rec.in_agreement = in_robust_agreement(family, S, b, test, predict(family, target, test), opt);
  } catch (const CapacityError&) {
    rec.capacity = true;
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

/// Empirical Pr[(test, target(test)) in the b-robust agreement region of S]
/// for each m. Trial t at grid value m uses seed derive_seed(seed, m, t).
inline Curve agreement_probability_curve(const HypothesisFamily& family, const Distribution& dist,
                                         const Hypothesis& target, const Point& test, std::uint64_t b,
                                         const std::vector<std::size_t>& m_grid, std::size_t trials,
                                         std::uint64_t seed, const CurveOptions& copt = {}) {
  validate_hypothesis(family, target);
  if (copt.require_positive_coefficient && !std::holds_alternative<Halfspaces>(family) && dist.is_finite()) {
    if (certificate_coefficient(family, dist, target, test) == 0) {
      throw UnboundableError("certificate coefficient is 0: the test point is never certified");
    }
  }
  Curve out;
  const unsigned threads = thread_count(copt.threads);
  for (auto m : m_grid) {
    std::vector<TrialRecord> recs(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
      recs[t] = agreement_trial(family, dist, target, test, b, m, derive_seed(seed, m, t), copt.oracle);
    });
    CurvePoint pt;
    pt.m = m;
    pt.trials = trials;
    for (const auto& r : recs) {
      if (r.capacity) ++pt.capacity;
      else if (r.in_agreement) ++pt.successes;
    }
    const std::size_t done = trials - pt.capacity;
    pt.prob = done == 0 ? 0.0 : static_cast<double>(pt.successes) / static_cast<double>(done);
    pt.ci = wilson_interval(pt.successes, done);
    out.points.push_back(pt);
    if (copt.keep_records) out.records.insert(out.records.end(), recs.begin(), recs.end());
  }
  return out;
}

enum class TightnessTerm { b, dlog, delta };

struct TightnessParams {
  /// Budget for the b term.
  std::uint64_t b = 3;
  /// Singletons size for the b term: D uniform on {1..n-1}, test n.
  std::size_t n = 11;
  std::size_t d = 2;
  std::size_t k = 30;
  double delta = 0.1;
  /// Empty selects the critical sample sizes of the construction.
  std::vector<std::size_t> m_values;
  unsigned threads = 0;
};

struct TightnessRow {
  std::size_t m = 0;
  std::size_t trials = 0;
  /// Trials where the test pair was outside the agreement region.
  std::size_t failures = 0;
  double failure_freq = 0;
  Interval failure_ci;
  /// The construction's sufficient failure event (see term).
  std::size_t events = 0;
  double event_freq = 0;
  /// Exact probability of that event.
  double event_prob = 0;
  /// 99% interval for the event frequency.
  Interval event_ci;
};

struct TightnessReport {
  TightnessTerm term = TightnessTerm::b;
  TightnessParams params;
  double eps = 0;
  std::vector<TightnessRow> rows;
};

namespace detail {

// Pr[every one of K equally likely cells gets more than b of m draws].
inline double all_cells_exceed(std::size_t K, std::size_t m, std::uint64_t b) {
  // dp[t] = Pr-weighted count of assignments of t draws to the first i cells
  // with each cell count > b, scaled by K^-t.
  std::vector<double> dp(m + 1, 0.0), next(m + 1);
  dp[0] = 1;
  const double lnK = std::log(static_cast<double>(K));
  for (std::size_t i = 0; i < K; ++i) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t t = 0; t <= m; ++t) {
      for (std::size_t c = b + 1; c <= t; ++c) {
        if (dp[t - c] == 0) continue;
        const double lc = std::lgamma(t + 1.0) - std::lgamma(c + 1.0) - std::lgamma(t - c + 1.0) - c * lnK;
        next[t] += dp[t - c] * std::exp(lc);
      }
    }
    dp.swap(next);
  }
  return dp[m];
}

// Pr[at least `at_least` of k equally likely coupons unseen after m draws].
inline double unseen_at_least(std::size_t k, std::size_t m, std::size_t at_least) {
  std::vector<double> seen(k + 1, 0.0), next(k + 1);
  seen[0] = 1;
  for (std::size_t t = 0; t < m; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s <= k; ++s) {
      if (seen[s] == 0) continue;
      const double fresh = static_cast<double>(k - s) / static_cast<double>(k);
      next[s] += seen[s] * (1 - fresh);
      if (s < k) next[s + 1] += seen[s] * fresh;
    }
    seen.swap(next);
  }
  double p = 0;
  for (std::size_t s = 0; s + at_least <= k; ++s) p += seen[s];
  return p;
}

}  // namespace detail

/// Runs one lower-bound construction at desk scale and reports the failure
/// frequency at its critical sample sizes.
///  b:     singletons, D uniform on {1..n-1}, test n; m = (b+1)/(4 eps).
///         Event: some support point drawn at most b times.
///  dlog:  prop53 family, test x0, D uniform on {x1..xk}; m = (k/2) ln(k/d).
///         Event: at least d coupons unseen.
///  delta: same instance; m below (1/(2 eps)) ln(1/delta).
///         Event: none of x1..xd drawn.
inline TightnessReport tightness_experiments(TightnessTerm term, const TightnessParams& params, std::size_t trials,
                                             std::uint64_t seed, const OracleOptions& opt = {}) {
  TightnessReport rep;
  rep.term = term;
  rep.params = params;
  HypothesisFamily family = Singletons(2);
  Hypothesis target;
  Point test;
  std::vector<Point> support;
  std::uint64_t b = 0;

  if (term == TightnessTerm::b) {
    if (params.n < 2) throw InputError("b-term instance needs n >= 2");
    family = Singletons(params.n);
    target = std::size_t{params.n};
    test = Point::discrete(params.n);
    for (std::size_t i = 1; i < params.n; ++i) support.push_back(Point::discrete(i));
    b = params.b;
  } else {
    family = prop53_family(params.d, params.k);
    target = prop53_target(params.d, params.k);
    test = Point::discrete(0);
    for (std::size_t i = 1; i <= params.k; ++i) support.push_back(Point::discrete(i));
  }
  const Distribution dist = Distribution::uniform_over(support);
  rep.eps = certificate_coefficient(family, dist, target, test);

  std::vector<std::size_t> ms = params.m_values;
  if (ms.empty()) {
    if (term == TightnessTerm::b) {
      ms.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(b + 1) / (4 * rep.eps))));
    } else if (term == TightnessTerm::dlog) {
      const double k = static_cast<double>(params.k);
      ms.push_back(static_cast<std::size_t>(std::floor(k / 2 * std::log(k / static_cast<double>(params.d)))));
    } else {
      const double crit = std::log(1 / params.delta) / (2 * rep.eps);
      for (double f : {0.25, 0.5, 1.0}) {
        ms.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(f * crit)) - 1));
      }
    }
  }

  const unsigned threads = thread_count(params.threads);
  for (auto m : ms) {
    TightnessRow row;
    row.m = m;
    row.trials = trials;
    std::vector<char> fail(trials, 0), event(trials, 0);
    parallel_for(trials, threads, [&](std::size_t t) {
      Rng rng(derive_seed(seed, m, t));
      const auto pts = dist.sample(m, rng);
      const Dataset S = label_dataset(family, target, pts);
      fail[t] = !in_robust_agreement(family, S, b, test, predict(family, target, test), opt);
      if (term == TightnessTerm::b) {
        std::vector<std::size_t> count(params.n + 1, 0);
        for (const auto& p : pts) ++count[p.id()];
        bool low = false;
        for (std::size_t i = 1; i < params.n; ++i) low = low || count[i] <= b;
        event[t] = low;
      } else if (term == TightnessTerm::dlog) {
        std::vector<char> seen(params.k + 1, 0);
        for (const auto& p : pts) seen[p.id()] = 1;
        std::size_t unseen = 0;
        for (std::size_t i = 1; i <= params.k; ++i) unseen += !seen[i];
        event[t] = unseen >= params.d;
      } else {
        bool hit = false;
        for (const auto& p : pts) hit = hit || p.id() <= params.d;
        event[t] = !hit;
      }
    });
    row.failures = static_cast<std::size_t>(std::count(fail.begin(), fail.end(), 1));
    row.events = static_cast<std::size_t>(std::count(event.begin(), event.end(), 1));
    row.failure_freq = static_cast<double>(row.failures) / static_cast<double>(std::max<std::size_t>(trials, 1));
    row.event_freq = static_cast<double>(row.events) / static_cast<double>(std::max<std::size_t>(trials, 1));
    row.failure_ci = wilson_interval(row.failures, trials);
    row.event_ci = wilson_interval(row.events, trials, 2.5758293035489);
    if (term == TightnessTerm::b) {
      row.event_prob = 1 - detail::all_cells_exceed(params.n - 1, m, b);
    } else if (term == TightnessTerm::dlog) {
      row.event_prob = detail::unseen_at_least(params.k, m, params.d);
    } else {
      row.event_prob = std::pow(1 - static_cast<double>(params.d) / static_cast<double>(params.k), static_cast<double>(m));
    }
    rep.rows.push_back(row);
  }
  return rep;
}

struct RejectionDraw {
  Point point;
  std::uint64_t draws = 0;
};

/// Draw z ~ D and accept with probability w(z), until accepted.
inline RejectionDraw rejection_sample(const Distribution& dist, const ReweightingScheme& scheme, Rng& rng,
                                      std::uint64_t attempt_cap = 10'000'000) {
  for (std::uint64_t k = 1; k <= attempt_cap; ++k) {
    Point z = dist.sample(rng);
    const double w = scheme.weight(z);
    if (w >= 1 || rng.uniform() < w) return {std::move(z), k};
  }
  throw StarvationError("rejection sampler made " + std::to_string(attempt_cap) + " attempts without acceptance");
}

inline RejectionDraw rejection_sample(const Distribution& dist, const ReweightingScheme& scheme, std::uint64_t seed,
                                      std::uint64_t attempt_cap = 10'000'000) {
  Rng rng(seed);
  return rejection_sample(dist, scheme, rng, attempt_cap);
}

struct ReweightOptions {
  /// Leading constant of the accepted-sample target.
  double C = 6.0;
  /// Divides Monte Carlo coefficient estimates (they are upper estimates).
  double safety = 2.0;
  std::size_t mc_samples = 100'000;
  /// Skips coefficient estimation when set.
  std::optional<double> eps_w;
  bool shrink = false;
  std::uint64_t attempt_cap = 10'000'000;
  /// Overrides the default eps^3 / (8 (b+1) (d+1)) validity threshold.
  std::optional<double> min_normalizer;
  OracleOptions oracle{};
};

struct ReweightedResult {
  Dataset sample;
  /// Present when the test pair is in the agreement region of the sample.
  std::optional<Certificate> certificate;
  bool in_agreement = false;
  double normalizer = 0;
  double eps_w_estimate = 0;
  double eps_w = 0;
  std::uint64_t m_w = 0;
  std::uint64_t raw_draws = 0;
};

/// Collects m_w = sample_size_bound(b, d, eps_w, delta/2, C) samples from D_w
/// by rejection, labels them with the target, and checks agreement.
inline ReweightedResult reweighted_certificate(const HypothesisFamily& family, const Distribution& dist,
                                               const ReweightingScheme& scheme, const Hypothesis& target,
                                               std::uint64_t b, const Point& test, double delta, std::uint64_t seed,
                                               const ReweightOptions& ropt = {}) {
  validate_hypothesis(family, target);
  ReweightedResult out;
  const std::size_t d = vc_dimension(family);
  out.normalizer = scheme.normalizer(dist, ropt.mc_samples, derive_seed(seed, 3));
  if (!(out.normalizer > 0)) throw InputError("reweighting scheme has zero normalizer");

  if (ropt.eps_w) {
    out.eps_w_estimate = out.eps_w = *ropt.eps_w;
  } else {
    const auto tilted = scheme.tilted(dist);
    if (!tilted) throw InputError("no closed form for the reweighted distribution; supply eps_w");
    if (const auto* hs = std::get_if<Halfspaces>(&family)) {
      const auto est = certificate_coefficient_mc(*hs, *tilted, std::get<std::vector<double>>(target), test,
                                                  ropt.mc_samples, derive_seed(seed, 4));
      out.eps_w_estimate = est.estimate;
      out.eps_w = est.estimate / ropt.safety;
    } else {
      out.eps_w_estimate = out.eps_w = certificate_coefficient(family, *tilted, target, test);
    }
  }
  if (out.eps_w == kNoCoefficient) out.eps_w = 1.0;
  out.eps_w = std::min(out.eps_w, 1.0);
  const double threshold = ropt.min_normalizer.value_or(validity_threshold(out.eps_w, b, d));
  if (out.normalizer < threshold) {
    throw InputError("reweighting scheme invalid: normalizer " + std::to_string(out.normalizer) + " below threshold " +
                     std::to_string(threshold));
  }
  out.m_w = sample_size_bound(b, d, out.eps_w, delta / 2, ropt.C);

  Rng rng(derive_seed(seed, 5));
  std::vector<Point> pts;
  pts.reserve(out.m_w);
  for (std::uint64_t i = 0; i < out.m_w; ++i) {
    auto draw = rejection_sample(dist, scheme, rng, ropt.attempt_cap);
    out.raw_draws += draw.draws;
    pts.push_back(std::move(draw.point));
  }
  out.sample = label_dataset(family, target, pts);
  const Label y = predict(family, target, test);
  out.in_agreement = in_robust_agreement(family, out.sample, b, test, y, ropt.oracle);
  if (out.in_agreement) {
    if (ropt.shrink) {
      out.certificate = minimal_certificate(family, out.sample, b, test, y, ropt.oracle);
    } else {
      out.certificate = Certificate{out.sample, all_indices(out.sample.size()), b, test, y, false};
    }
  }
  return out;
}

}  // namespace certikit
