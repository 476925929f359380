#include <gtest/gtest.h>

#include <map>

#include "support.hpp"

using namespace certikit;

namespace {

Distribution uniform_ids(std::initializer_list<std::uint64_t> ids) {
  std::vector<Point> pts;
  for (auto id : ids) pts.push_back(Point::discrete(id));
  return Distribution::uniform_over(pts);
}

std::vector<double> unit(std::size_t d, std::size_t axis, double v) {
  std::vector<double> x(d, 0.0);
  x[axis] = v;
  return x;
}

}  // namespace

TEST(Distribution, RejectsBadInput) {
  EXPECT_THROW(Distribution::finite_support({Point::discrete(1)}, {0.5}), InputError);
  EXPECT_THROW(Distribution::finite_support({}, {}), InputError);
  EXPECT_THROW(Distribution::uniform_ball({0, 0}, 0), InputError);
}

TEST(Distribution, BallSamplesStayInside) {
  const auto dist = Distribution::uniform_ball({1, -1, 2}, 0.5);
  Rng rng(3);
  for (const auto& p : dist.sample(2000, rng)) {
    const auto x = p.coords();
    const double r2 = (x[0] - 1) * (x[0] - 1) + (x[1] + 1) * (x[1] + 1) + (x[2] - 2) * (x[2] - 2);
    EXPECT_LE(r2, 0.25 + 1e-12);
  }
}

TEST(CertificateCoefficient, Examples) {
  EXPECT_DOUBLE_EQ(certificate_coefficient(Singletons(3), uniform_ids({1, 2}), std::size_t{3}, Point::discrete(3)), 0.5);
  for (auto [d, k] : {std::pair<std::size_t, std::size_t>{1, 2}, {2, 8}, {2, 30}, {3, 7}}) {
    std::vector<Point> pts;
    for (std::size_t i = 1; i <= k; ++i) pts.push_back(Point::discrete(i));
    const double eps = certificate_coefficient(prop53_family(d, k), Distribution::uniform_over(pts),
                                               prop53_target(d, k), Point::discrete(0));
    EXPECT_NEAR(eps, static_cast<double>(d) / static_cast<double>(k), 1e-12);
  }
  const FiniteFamily agree({1, 2}, {{Label::positive, Label::negative}, {Label::positive, Label::positive}});
  EXPECT_EQ(certificate_coefficient(agree, uniform_ids({2}), std::size_t{0}, Point::discrete(1)), kNoCoefficient);
}

TEST(CertificateCoefficient, MatchesBruteForce) {
  Rng rng(401);
  for (int t = 0; t < 200; ++t) {
    const auto fam = support::random_family(rng, 4, 2 + rng.below(8));
    const auto rows = support::rows_of(fam);
    std::vector<double> w(4);
    double total = 0;
    for (double& v : w) total += v = rng.uniform();
    for (double& v : w) v /= total;
    w[3] = 1 - w[0] - w[1] - w[2];
    const auto dist = Distribution::finite_support(
        {Point::discrete(1), Point::discrete(2), Point::discrete(3), Point::discrete(4)}, w);
    const std::size_t target = rng.below(fam.hypothesis_count());
    const std::size_t col = rng.below(4);
    double expected = kNoCoefficient;
    for (const auto& r : rows) {
      if (r[col] == rows[target][col]) continue;
      double m = 0;
      for (std::size_t c = 0; c < 4; ++c) m += r[c] != rows[target][c] ? w[c] : 0;
      expected = std::min(expected, m);
    }
    const double got = certificate_coefficient(fam, dist, target, Point::discrete(col + 1));
    if (expected == kNoCoefficient) EXPECT_EQ(got, kNoCoefficient);
    else EXPECT_NEAR(got, expected, 1e-12);
  }
}

TEST(CertificateCoefficientMc, OffCenterTestIsCapMass) {
  for (std::size_t d : {2u, 3u, 6u}) {
    const auto fam = Halfspaces::affine(d);
    const auto est = certificate_coefficient_mc(fam, Distribution::uniform_ball(std::vector<double>(d, 0.0), 1),
                                                unit(d + 1, d, 1), Point::vector(unit(d, 0, 0.5)), 200000, 7);
    const double cap = oracle::cap_mass(d, 0.5);
    EXPECT_LE(est.estimate, cap + 3 * est.half_width) << "d=" << d;
    EXPECT_GE(est.estimate, cap - 3 * est.half_width) << "d=" << d;
    EXPECT_GT(est.half_width, 0);
    EXPECT_EQ(fam.predict(est.witness, Point::vector(unit(d, 0, 0.5))), Label::negative);
  }
}

TEST(CertificateCoefficientMc, ReweightedBallAndCenter) {
  const std::size_t d = 6;
  const auto fam = Halfspaces::affine(d);
  const auto test = unit(d, 0, 0.5);
  const auto tilted = Distribution::uniform_ball(test, 0.5);
  const auto a = certificate_coefficient_mc(fam, tilted, unit(d + 1, d, 1), Point::vector(test), 100000, 11);
  EXPECT_NEAR(a.estimate, 0.5, 3 * a.half_width + 0.01);
  const auto b = certificate_coefficient_mc(fam, Distribution::uniform_ball(std::vector<double>(d, 0.0), 1),
                                            unit(d + 1, d, 1), Point::vector(std::vector<double>(d, 0.0)), 100000, 13);
  EXPECT_NEAR(b.estimate, 0.5, 3 * b.half_width + 0.01);
  EXPECT_THROW(certificate_coefficient_mc(fam, tilted, unit(d + 1, d, 1), Point::vector(test), 10, 1), InputError);
}

TEST(SampleSizeBound, Examples) {
  EXPECT_EQ(sample_size_bound(0, 1, 1, std::exp(-1.0)), 8u);
  EXPECT_EQ(sample_size_bound(2, 1, 0.5, std::exp(-1.0)), 60u);
  EXPECT_THROW(sample_size_bound(0, 1, 0, 0.1), UnboundableError);
  EXPECT_THROW(sample_size_bound(0, 1, 0.5, 0), InputError);
}

TEST(SampleSizeBound, Monotone) {
  const auto base = sample_size_bound(1, 2, 0.2, 0.1);
  EXPECT_LE(base, sample_size_bound(2, 2, 0.2, 0.1));
  EXPECT_LE(base, sample_size_bound(1, 3, 0.2, 0.1));
  EXPECT_LE(base, sample_size_bound(1, 2, 0.1, 0.1));
  EXPECT_LE(base, sample_size_bound(1, 2, 0.2, 0.01));
  double prev = 0;
  for (double eps = 1.0; eps > 0.01; eps *= 0.8) {
    const double m = static_cast<double>(sample_size_bound(0, 2, eps, 0.1));
    EXPECT_GE(m, prev);
    prev = m;
  }
}

TEST(Wilson, Properties) {
  const auto z = wilson_interval(0, 50);
  EXPECT_EQ(z.low, 0.0);
  EXPECT_GT(z.high, 0.0);
  const auto f = wilson_interval(50, 50);
  EXPECT_EQ(f.high, 1.0);
  const auto h = wilson_interval(5, 10);
  EXPECT_NEAR(h.low + h.high, 1.0, 1e-12);
  EXPECT_LT(wilson_interval(50, 100, 2.5758).low, wilson_interval(50, 100).low);
}

TEST(AgreementCurve, Examples) {
  const auto dist = uniform_ids({1, 2});
  const auto c = agreement_probability_curve(Singletons(3), dist, std::size_t{3}, Point::discrete(3), 0, {0, 1, 40},
                                             200, 5);
  ASSERT_EQ(c.points.size(), 3u);
  EXPECT_EQ(c.points[0].prob, 0.0);
  EXPECT_EQ(c.points[1].prob, 0.0);
  EXPECT_EQ(c.points[2].prob, 1.0);
  EXPECT_EQ(c.points[2].ci.high, 1.0);

  std::vector<Point> pts;
  for (std::size_t i = 1; i <= 8; ++i) pts.push_back(Point::discrete(i));
  const auto d8 = Distribution::uniform_over(pts);
  const auto fam = prop53_family(2, 8);
  const double eps = certificate_coefficient(fam, d8, prop53_target(2, 8), Point::discrete(0));
  const auto m = static_cast<std::size_t>(sample_size_bound(0, 2, eps, 0.1));
  const auto p = agreement_probability_curve(fam, d8, prop53_target(2, 8), Point::discrete(0), 0, {m}, 500, 9);
  EXPECT_GE(p.points[0].prob, 0.9);
}

TEST(AgreementCurve, ZeroCoefficientNeverCertifies) {
  const auto dist = uniform_ids({1});
  EXPECT_THROW(
      agreement_probability_curve(Singletons(3), dist, std::size_t{3}, Point::discrete(3), 0, {10}, 10, 1),
      UnboundableError);
  CurveOptions copt;
  copt.require_positive_coefficient = false;
  const auto c = agreement_probability_curve(Singletons(3), dist, std::size_t{3}, Point::discrete(3), 0,
                                             {1, 10, 100, 1000}, 50, 1, copt);
  for (const auto& pt : c.points) EXPECT_EQ(pt.successes, 0u);
}

TEST(AgreementCurve, ThreadCountInvariant) {
  const auto dist = uniform_ids({1, 2, 3});
  CurveOptions one, many;
  one.threads = 1;
  many.threads = 4;
  one.keep_records = many.keep_records = true;
  const auto a = agreement_probability_curve(Singletons(4), dist, std::size_t{4}, Point::discrete(4), 1,
                                             {2, 6, 12}, 300, 21, one);
  const auto b = agreement_probability_curve(Singletons(4), dist, std::size_t{4}, Point::discrete(4), 1,
                                             {2, 6, 12}, 300, 21, many);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].successes, b.points[i].successes);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].seed, b.records[i].seed);
    EXPECT_EQ(a.records[i].in_agreement, b.records[i].in_agreement);
  }
}

TEST(Tightness, ExactEventProbabilities) {
  // all_cells_exceed against explicit enumeration of draw sequences
  for (std::size_t K : {2u, 3u}) {
    for (std::size_t m = 0; m <= 8; ++m) {
      for (std::uint64_t b = 0; b <= 2; ++b) {
        std::size_t total = 1, good = 0;
        for (std::size_t i = 0; i < m; ++i) total *= K;
        for (std::size_t code = 0; code < total; ++code) {
          std::vector<std::size_t> cnt(K, 0);
          for (std::size_t c = code, i = 0; i < m; ++i, c /= K) ++cnt[c % K];
          good += std::all_of(cnt.begin(), cnt.end(), [&](std::size_t v) { return v > b; });
        }
        EXPECT_NEAR(detail::all_cells_exceed(K, m, b), static_cast<double>(good) / static_cast<double>(total), 1e-12);
      }
    }
  }
  // unseen_at_least against counting surjections: exactly s distinct coupons
  // seen has probability C(k,s) s! S(m,s) / k^m (Stirling numbers of the
  // second kind, all terms positive)
  for (std::size_t k : {5u, 12u, 30u}) {
    for (std::size_t m : {3u, 20u, 40u}) {
      std::vector<std::vector<long double>> S(m + 1, std::vector<long double>(k + 1, 0));
      S[0][0] = 1;
      for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= k; ++j) S[i][j] = j * S[i - 1][j] + S[i - 1][j - 1];
      }
      for (std::size_t a : {1u, 2u, 3u}) {
        long double p = 0;
        for (std::size_t s = 0; s + a <= k; ++s) {
          long double ways = S[m][s];
          for (std::size_t i = 0; i < s; ++i) ways *= static_cast<long double>(k - i);  // C(k,s) s!
          p += ways / std::pow(static_cast<long double>(k), static_cast<long double>(m));
        }
        EXPECT_NEAR(detail::unseen_at_least(k, m, a), static_cast<double>(p), 1e-12) << k << ' ' << m << ' ' << a;
      }
    }
  }
}

TEST(Tightness, BTermFailsOftenAndMatchesEvent) {
  TightnessParams p;
  const auto rep = tightness_experiments(TightnessTerm::b, p, 2000, 31);
  EXPECT_NEAR(rep.eps, 0.1, 1e-12);
  ASSERT_EQ(rep.rows.size(), 1u);
  const auto& row = rep.rows[0];
  EXPECT_EQ(row.m, 10u);
  EXPECT_EQ(row.failures, row.events);
  EXPECT_GT(row.failure_ci.low, 0.01);
  EXPECT_GE(row.event_prob, row.event_ci.low);
  EXPECT_LE(row.event_prob, row.event_ci.high);
}

TEST(Tightness, DlogAndDeltaTerms) {
  TightnessParams p;
  const auto dlog = tightness_experiments(TightnessTerm::dlog, p, 2000, 37);
  EXPECT_NEAR(dlog.eps, 2.0 / 30.0, 1e-12);
  for (const auto& row : dlog.rows) {
    EXPECT_EQ(row.failures, row.events);
    EXPECT_GE(row.event_prob, row.event_ci.low);
    EXPECT_LE(row.event_prob, row.event_ci.high);
    EXPECT_GT(row.failure_freq, 0.01);
  }
  const auto delta = tightness_experiments(TightnessTerm::delta, p, 2000, 41);
  ASSERT_EQ(delta.rows.size(), 3u);
  for (const auto& row : delta.rows) {
    EXPECT_GE(row.failures, row.events);
    EXPECT_NEAR(row.event_prob, std::pow(1 - 2.0 / 30.0, static_cast<double>(row.m)), 1e-12);
    EXPECT_GT(row.event_prob, p.delta);
    EXPECT_GE(row.event_prob, row.event_ci.low);
    EXPECT_LE(row.event_prob, row.event_ci.high);
    EXPECT_GT(row.failure_ci.low, p.delta);
  }
}

TEST(RejectionSampling, ConstantIsIdentity) {
  const auto dist = Distribution::uniform_ball({0, 0}, 1);
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) {
    const auto r = rejection_sample(dist, ReweightingScheme::constant(1), a);
    EXPECT_EQ(r.draws, 1u);
    EXPECT_EQ(r.point, dist.sample(b));
  }
}

TEST(RejectionSampling, BallIndicatorAcceptanceRate) {
  const auto dist = Distribution::uniform_ball({0, 0}, 1);
  const auto scheme = ReweightingScheme::ball_indicator({0.5, 0}, 0.5);
  EXPECT_DOUBLE_EQ(scheme.normalizer(dist), 0.25);
  Rng rng(17);
  std::uint64_t draws = 0;
  const int accepts = 20000;
  for (int i = 0; i < accepts; ++i) {
    const auto r = rejection_sample(dist, scheme, rng);
    EXPECT_EQ(scheme.weight(r.point), 1.0);
    draws += r.draws;
  }
  const double rate = accepts / static_cast<double>(draws);
  EXPECT_NEAR(rate, 0.25, 0.01);
}

TEST(RejectionSampling, TableFrequenciesPassChiSquare) {
  const auto dist = uniform_ids({1, 2, 3, 4});
  const auto scheme = ReweightingScheme::table(
      {{Point::discrete(1), 1.0}, {Point::discrete(2), 0.5}, {Point::discrete(3), 0.25}, {Point::discrete(4), 0.0}});
  EXPECT_DOUBLE_EQ(scheme.normalizer(dist), 1.75 / 4);
  const auto tilted = scheme.tilted(dist);
  ASSERT_TRUE(tilted);
  EXPECT_EQ(tilted->support().size(), 3u);
  Rng rng(19);
  const int n = 7000;
  std::map<std::uint64_t, int> count;
  for (int i = 0; i < n; ++i) ++count[rejection_sample(dist, scheme, rng).point.id()];
  EXPECT_EQ(count[4], 0);
  const double expect[] = {4.0 / 7, 2.0 / 7, 1.0 / 7};
  double chi2 = 0;
  for (int i = 0; i < 3; ++i) {
    const double e = expect[i] * n;
    chi2 += (count[i + 1] - e) * (count[i + 1] - e) / e;
  }
  EXPECT_LT(chi2, 13.8);  // 2 degrees of freedom, p = 0.001
}

TEST(RejectionSampling, Starvation) {
  const auto dist = uniform_ids({1});
  const auto scheme = ReweightingScheme::table({{Point::discrete(2), 1.0}});
  EXPECT_THROW(rejection_sample(dist, scheme, 1, 1000), StarvationError);
}

TEST(Reweighting, ValidityThreshold) {
  EXPECT_DOUBLE_EQ(validity_threshold(0.5, 1, 6), 0.125 / (8.0 * 2 * 7));
}

TEST(Reweighting, ConstantSchemeIsDirectSampling) {
  const auto dist = uniform_ids({1, 2});
  const auto r = reweighted_certificate(Singletons(3), dist, ReweightingScheme::constant(1), std::size_t{3}, 0,
                                        Point::discrete(3), 0.1, 23);
  EXPECT_EQ(r.normalizer, 1.0);
  EXPECT_EQ(r.eps_w, 0.5);
  EXPECT_EQ(r.m_w, sample_size_bound(0, 1, 0.5, 0.05, 6));
  EXPECT_EQ(r.raw_draws, r.m_w);
  Rng rng(derive_seed(23, 5));
  const auto pts = dist.sample(r.m_w, rng);
  EXPECT_EQ(r.sample, label_dataset(Singletons(3), std::size_t{3}, pts));
  EXPECT_TRUE(r.in_agreement);
  ASSERT_TRUE(r.certificate);
  EXPECT_TRUE(is_certificate(Singletons(3), *r.certificate));
}

TEST(Reweighting, TableBoostsCoefficient) {
  // Mass mostly on an uninformative point: reweighting onto the informative
  // ones raises eps and shrinks the required sample.
  const auto dist = Distribution::finite_support(
      {Point::discrete(1), Point::discrete(2), Point::discrete(3)}, {0.05, 0.05, 0.9});
  const double eps = certificate_coefficient(Singletons(4), dist, std::size_t{4}, Point::discrete(4));
  EXPECT_NEAR(eps, 0.05, 1e-12);
  const auto scheme =
      ReweightingScheme::table({{Point::discrete(1), 1.0}, {Point::discrete(2), 1.0}, {Point::discrete(3), 0.1}});
  ReweightOptions ropt;
  ropt.shrink = true;
  const auto r = reweighted_certificate(Singletons(4), dist, scheme, std::size_t{4}, 1, Point::discrete(4), 0.1, 29, ropt);
  EXPECT_GT(r.eps_w, eps);
  EXPECT_LT(r.m_w, sample_size_bound(1, 1, eps, 0.05, 6));
  ASSERT_TRUE(r.certificate);
  EXPECT_EQ(r.certificate->size(), 6u);  // b+1 copies of each of 1, 2, 3
  EXPECT_TRUE(is_certificate(Singletons(4), *r.certificate));
}

TEST(Reweighting, RejectsInvalidScheme) {
  const auto dist = Distribution::uniform_ball(std::vector<double>(6, 0.0), 1);
  const auto scheme = ReweightingScheme::ball_indicator(unit(6, 0, 0.5), 0.5);
  ReweightOptions ropt;
  ropt.eps_w = 0.5;
  ropt.min_normalizer = 0.5;
  EXPECT_THROW(reweighted_certificate(Halfspaces::affine(6), dist, scheme, unit(7, 6, 1), 1,
                                      Point::vector(unit(6, 0, 0.5)), 0.1, 1, ropt),
               InputError);
}
