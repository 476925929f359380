// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Every experiment is seeded.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "certikit/certikit.hpp"
#include "certikit/parallel.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace certikit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

HollowStar singleton_star(std::size_t n) {
  HollowStar s;
  for (std::size_t i = 1; i <= n; ++i) s.elements.push_back({Point::discrete(i), Label::negative});
  s.heavy_index = n - 1;
  return s;
}

std::vector<oracle::Ex> to_ex(const FiniteFamily& fam, const HollowStar& s) {
  std::vector<oracle::Ex> seq;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != s.heavy_index) seq.push_back({fam.column(s.elements[i].point), to_int(s.elements[i].label), 1});
  }
  const auto& h = s.elements[s.heavy_index];
  seq.push_back({fam.column(h.point), to_int(h.label), 1});
  return seq;
}

Outcome c1_singleton_stars() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string seen;
  for (std::size_t n = 2; n <= 4; ++n) {
    for (std::uint64_t b = 0; b <= 2; ++b) {
      const auto r = robust_star_number(Singletons(n), b);
      const auto want = (b + 1) * (n - 1) + 1;
      ok = ok && r.complete && r.value == want;
      seen += fmt(" s_%llu(n=%zu)=%zu", static_cast<unsigned long long>(b), n, r.value);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs < 60;
  return {ok, fmt("%s; %.2fs", seen.c_str(), secs)};
}

Outcome c2_lift_inequality() {
  Rng rng(2002);
  std::size_t families = 0, violations = 0, lift_failures = 0, brute_mismatch = 0;
  while (families < 200) {
    const std::size_t n = 2 + rng.below(3);
    const auto fam = support::random_family(rng, n, 1 + rng.below(8));
    const auto rows = support::rows_of(fam);
    ++families;
    const auto s0 = robust_star_number(fam, 0);
    if (s0.value != oracle::star_number(rows, n, 0, 1)) ++brute_mismatch;
    const std::uint64_t b = 1;
    const auto lifted = lift_star(s0.witness, b);
    if (!verify_star(fam, lifted) || !oracle::is_star(rows, to_ex(fam, lifted), b)) ++lift_failures;
    const auto sb = robust_star_number(fam, b);
    if (sb.value < (b + 1) * (s0.value - 1) + 1 || !sb.complete) ++violations;
    if (n <= 3 && sb.value != oracle::star_number(rows, n, b, b + 1)) ++brute_mismatch;
  }
  return {violations == 0 && lift_failures == 0 && brute_mismatch == 0,
          fmt("%zu families, %zu inequality violations, %zu lifted stars rejected, %zu brute-force mismatches", families,
              violations, lift_failures, brute_mismatch)};
}

// Largest minimal certificate over all (S, x, y), by brute force. A minimal
// certificate never holds more than b+1 copies of one (point, label) pair
// (dropping a copy beyond b+1 changes no hypothesis's eligibility), so
// multisets with per-pair multiplicity <= b+1 cover every case.
std::size_t max_minimal_certificate(const oracle::Rows& rows, std::size_t cols, std::uint64_t b) {
  const std::size_t pairs = 2 * cols;
  std::vector<std::uint64_t> count(pairs, 0);
  std::size_t best = 0;
  while (true) {
    std::vector<oracle::Ex> seq;
    for (std::size_t j = 0; j < pairs; ++j) {
      for (std::uint64_t c = 0; c < count[j]; ++c) seq.push_back({j / 2, j % 2 ? 1 : -1, 1});
    }
    if (seq.size() > best && oracle::realizable(rows, seq, b)) {
      for (std::size_t col = 0; col < cols; ++col) {
        for (int y : {-1, 1}) {
          if (!oracle::agrees(rows, seq, b, col, y)) continue;
          bool minimal = true;
          for (std::size_t i = 0; i < seq.size() && minimal; ++i) {
            auto rest = seq;
            rest.erase(rest.begin() + static_cast<long>(i));
            minimal = !oracle::agrees(rows, rest, b, col, y);
          }
          if (minimal) best = std::max(best, seq.size());
        }
      }
    }
    std::size_t j = 0;
    while (j < pairs && count[j] == b + 1) count[j++] = 0;
    if (j == pairs) break;
    ++count[j];
  }
  return best;
}

FiniteFamily family_from_masks(std::size_t n, const std::vector<std::uint64_t>& masks) {
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

Outcome c3_duality() {
  // every family of 1..8 distinct rows on domains of size 2, 3 and 4
  std::vector<FiniteFamily> fams;
  for (std::size_t n = 2; n <= 4; ++n) {
    const std::size_t all = std::size_t{1} << n;
    for (std::uint64_t pick = 1; pick < (std::uint64_t{1} << all); ++pick) {
      if (std::popcount(pick) > 8) continue;
      std::vector<std::uint64_t> masks;
      for (std::size_t m = 0; m < all; ++m) {
        if (pick >> m & 1) masks.push_back(m);
      }
      fams.push_back(family_from_masks(n, masks));
    }
  }
  std::vector<char> ok(fams.size() * 2, 0);
  parallel_for(ok.size(), thread_count(0), [&](std::size_t t) {
    const auto& fam = fams[t / 2];
    const std::uint64_t b = t % 2;
    const auto sb = robust_star_number(fam, b);
    const auto worst = max_minimal_certificate(support::rows_of(fam), fam.domain_size(), b);
    ok[t] = sb.complete && worst + 1 == sb.value;
  });
  const auto bad = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 0));
  return {bad == 0, fmt("%zu families (all with |H| <= 8 on domains 2-4), b in {0,1}: %zu with max minimum "
                        "certificate != s_b - 1",
                        fams.size(), bad)};
}

Outcome c4_caratheodory() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(4004);
  std::size_t made = 0, too_big = 0, bad_residual = 0, invalid = 0;
  double worst_residual = 0;
  while (made < 500) {
    const std::size_t d = 2 + rng.below(3);
    const std::size_t n = 20 + rng.below(181);
    const Halfspaces fam = Halfspaces::homogeneous(d);
    std::vector<double> w(d);
    for (double& v : w) v = rng.normal();
    std::vector<LabeledExample> ex;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p(d);
      for (double& v : p) v = rng.normal();
      const Point pt = Point::vector(std::move(p));
      ex.push_back({pt, fam.predict(w, pt)});
    }
    const Dataset data(ex);
    const Label y = rng.below(2) ? Label::positive : Label::negative;
    // test = positive combination of a few same-label points
    std::vector<double> x(d, 0.0);
    std::size_t used = 0;
    for (std::size_t i = 0, want = 1 + rng.below(d + 2); i < n && used < want; ++i) {
      if (ex[i].label != y) continue;
      const double a = 0.1 + rng.uniform();
      for (std::size_t k = 0; k < d; ++k) x[k] += a * ex[i].point.coords()[k];
      ++used;
    }
    if (used == 0) continue;
    const Point test = Point::vector(x);
    if (!in_robust_agreement(fam, data, 0, test, y)) continue;
    ++made;

    ConicInstance inst;
    for (const auto& e : ex) {
      Vec z(e.point.coords().begin(), e.point.coords().end());
      if (e.label == Label::negative) for (double& v : z) v = -v;
      inst.generators.push_back(std::move(z));
    }
    inst.target = x;
    if (y == Label::negative) for (double& v : inst.target) v = -v;
    const auto sol = conic_membership(inst);
    const auto red = caratheodory_reduce(inst, sol.coefficients);
    const double res = inst.residual(red.coefficients);
    worst_residual = std::max(worst_residual, res);
    if (res > 1e-7) ++bad_residual;

    const auto cert = caratheodory_certificate(fam, data, test, y);
    if (cert.size() > d || red.support.size() > d) ++too_big;
    if (!is_certificate(fam, cert)) ++invalid;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {too_big == 0 && bad_residual == 0 && invalid == 0 && secs < 120,
          fmt("%zu instances, %zu over size d, %zu residual > 1e-7 (worst %.2e), %zu failed revalidation; %.1fs", made,
              too_big, bad_residual, worst_residual, invalid, secs)};
}

Outcome c5_singletons_example() {
  bool ok = true;
  std::string sizes;
  for (std::size_t n = 3; n <= 8; ++n) {
    std::vector<LabeledExample> ex;
    for (std::size_t i = 1; i < n; ++i) ex.push_back({Point::discrete(i), Label::negative});
    const auto c = minimum_certificate(Singletons(n), Dataset(ex), 0, Point::discrete(n), Label::positive, n);
    ok = ok && c.size() == n - 1;
    sizes += fmt(" n=%zu:%zu", n, c.size());
  }
  return {ok, "minimum certificate sizes" + sizes};
}

Outcome c6_chunking() {
  std::size_t small = 0;
  const std::size_t trials = 200;
  const std::vector<LabeledExample> support{{Point::discrete(1), Label::negative}, {Point::discrete(2), Label::negative}};
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(6006, t));
    const ExampleStream stream = [&] { return support[rng.below(2)]; };
    const auto r = chunked_certificate(Singletons(3), stream, 1, Point::discrete(3), Label::positive);
    if (r.certificate.size() <= 4 && is_certificate(Singletons(3), r.certificate)) ++small;
  }
  const auto inst = chunk_lower_instance(singleton_star(3), 1);
  const auto lower = minimum_certificate(Singletons(3), inst.data, 1, inst.test, inst.label, 6).size();
  return {small * 100 >= 95 * trials && lower == 4,
          fmt("%zu/%zu chunked certificates of size <= 4; lower-bound instance minimum = %zu", small, trials, lower)};
}

Outcome c7_sample_complexity() {
  struct Setup {
    const char* name;
    HypothesisFamily family;
    Distribution dist;
    Hypothesis target;
    Point test;
  };
  std::vector<Point> eight;
  for (std::size_t i = 1; i <= 8; ++i) eight.push_back(Point::discrete(i));
  const std::vector<Setup> setups{
      {"singletons(3)", Singletons(3), Distribution::uniform_over({Point::discrete(1), Point::discrete(2)}),
       std::size_t{3}, Point::discrete(3)},
      {"prop53(2,8)", prop53_family(2, 8), Distribution::uniform_over(eight), prop53_target(2, 8), Point::discrete(0)}};
  const std::size_t trials = 500;
  const double floor = 0.9 - 3 * std::sqrt(0.9 * 0.1 / trials);
  bool ok = true;
  std::string out;
  for (const auto& s : setups) {
    const double eps = certificate_coefficient(s.family, s.dist, s.target, s.test);
    for (std::uint64_t b : {0u, 2u}) {
      const auto m = sample_size_bound(b, vc_dimension(s.family), eps, 0.1);
      const auto c = agreement_probability_curve(s.family, s.dist, s.target, s.test, b, {static_cast<std::size_t>(m)},
                                                 trials, 7007);
      ok = ok && c.points[0].prob >= floor;
      out += fmt(" %s b=%llu eps=%.4g m=%llu p=%.3f;", s.name, static_cast<unsigned long long>(b), eps,
                 static_cast<unsigned long long>(m), c.points[0].prob);
    }
  }
  return {ok, fmt("threshold %.4f:", floor) + out};
}

Outcome c8_b_term() {
  const auto rep = tightness_experiments(TightnessTerm::b, TightnessParams{}, 2000, 8008);
  const auto& r = rep.rows.at(0);
  return {r.failure_freq > 0.01, fmt("b=3, eps=%.3g, m=%zu: failure frequency %.4f (95%% CI %.4f-%.4f) over %zu trials",
                                     rep.eps, r.m, r.failure_freq, r.failure_ci.low, r.failure_ci.high, r.trials)};
}

Outcome c9_delta_term() {
  const auto rep = tightness_experiments(TightnessTerm::delta, TightnessParams{}, 2000, 9009);
  bool ok = rep.rows.size() == 3;
  std::string out;
  for (const auto& r : rep.rows) {
    const bool inside = r.event_prob >= r.event_ci.low && r.event_prob <= r.event_ci.high;
    ok = ok && inside;
    out += fmt(" m=%zu freq=%.4f exact=%.4f 99%%CI=[%.4f,%.4f];", r.m, r.event_freq, r.event_prob, r.event_ci.low,
               r.event_ci.high);
  }
  return {ok, "d=2 k=30:" + out};
}

Outcome c10_reweighting() {
  const std::size_t d = 6;
  const std::uint64_t b = 1;
  const Halfspaces family = Halfspaces::affine(d);
  std::vector<double> target(d + 1, 0.0);
  target[d] = 1;
  std::vector<double> t(d, 0.0);
  t[0] = 0.5;
  const Point test = Point::vector(t);
  const auto dist = Distribution::uniform_ball(std::vector<double>(d, 0.0), 1.0);
  const auto scheme = ReweightingScheme::ball_indicator(t, 0.5);

  const auto tilted = scheme.tilted(dist);
  const auto est = certificate_coefficient_mc(family, *tilted, target, test, 100000, 10010);
  const bool eps_ok = std::abs(est.estimate - 0.5) <= 0.03;

  ReweightOptions ro;
  ro.shrink = true;
  const auto res = reweighted_certificate(family, dist, scheme, target, b, test, 0.1, 10011, ro);
  const auto bound = sample_size_bound(1, 6, 0.25, 0.1);
  const bool size_ok = res.certificate && res.m_w <= bound && res.certificate->size() <= bound;
  const double ratio = static_cast<double>(res.raw_draws) / static_cast<double>(res.m_w);
  const double expected = std::pow(2.0, static_cast<double>(d));
  const bool draws_ok = ratio >= expected / 2 && ratio <= expected * 2;

  // direct sampling with the same number of raw draws
  const std::size_t trials = 20;
  CurveOptions copt;
  copt.oracle.deletion_guard = 100'000'000;
  const auto direct = agreement_probability_curve(family, dist, target, test, b,
                                                  {static_cast<std::size_t>(res.raw_draws)}, trials, 10012, copt);
  const auto& p = direct.points[0];
  const bool gap_ok = p.prob < 0.9;

  return {eps_ok && size_ok && draws_ok && gap_ok,
          fmt("eps(D_w) estimate %.4f +- %.4f [%s]; m_w=%llu, certificate size %zu (shrunk) <= %llu [%s]; raw/accepted "
              "= %.1f vs 2^d=%.0f [%s]; direct agreement at %llu raw draws = %.2f (%zu/%zu trials, 95%% CI %.2f-%.2f), "
              "needs < 0.9 [%s]",
              est.estimate, est.half_width, eps_ok ? "ok" : "FAIL", static_cast<unsigned long long>(res.m_w),
              res.certificate ? res.certificate->size() : std::size_t{0}, static_cast<unsigned long long>(bound),
              size_ok ? "ok" : "FAIL", ratio, expected, draws_ok ? "ok" : "FAIL",
              static_cast<unsigned long long>(res.raw_draws), p.prob, p.successes, p.trials - p.capacity, p.ci.low,
              p.ci.high, gap_ok ? "ok" : "FAIL")};
}

Outcome c11_copies() {
  std::vector<FiniteFamily> fams{Singletons(3).to_finite(), Singletons(4).to_finite(), prop53_family(2, 4)};
  Rng rng(11011);
  for (int i = 0; i < 10; ++i) fams.push_back(support::random_family(rng, 4, 2 + rng.below(7)));
  std::size_t instances = 0, ejected = 0;
  for (const auto& fam : fams) {
    for (std::size_t h = 0; h < fam.hypothesis_count(); ++h) {
      for (auto id : fam.domain()) {
        const Point x = Point::discrete(id);
        const Label y = fam.predict(h, x);
        for (std::uint64_t b = 0; b <= 2; ++b) {
          std::vector<LabeledExample> ex(2 * b + 1, {x, y});
          for (int extra = 0; extra < 2; ++extra) {
            const Point z = Point::discrete(fam.domain()[rng.below(fam.domain_size())]);
            ex.push_back({z, fam.predict(h, z)});
          }
          WorstCaseOptions w;
          w.compute_score = false;
          const auto wc = corrupt_worst_case(fam, Dataset(ex), b, x, y, w);
          ++instances;
          if (wc.success) ++ejected;
        }
      }
    }
  }
  return {ejected == 0, fmt("%zu instances (13 families, every target and point, b = 0..2), %zu ejected by the "
                            "exhaustive adversary",
                            instances, ejected)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"1 singletons hollow-star exactness", c1_singleton_stars},
      {"2 lifted-star inequality", c2_lift_inequality},
      {"3 certificate size duality", c3_duality},
      {"4 Caratheodory size bound", c4_caratheodory},
      {"5 singletons example", c5_singletons_example},
      {"6 chunked certificates both directions", c6_chunking},
      {"7 sample complexity bound", c7_sample_complexity},
      {"8 b-term tightness", c8_b_term},
      {"9 delta-term exact oracle", c9_delta_term},
      {"10 reweighting at d=6", c10_reweighting},
      {"11 2b+1 copies robustness", c11_copies},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
