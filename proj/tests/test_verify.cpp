#include <cmath>
#include <functional>

#include "doctest.h"
#include "mjo/verify.hpp"
#include "support/test_util.hpp"

using namespace mjo;

TEST_SUITE_BEGIN("verify");

namespace {

RmmBatch random_batch(int n_cases, int n_leads, Rng& rng, std::int64_t first_init = 0,
                      int stride = 7) {
  RmmBatch b;
  for (int i = 0; i < n_cases; ++i) {
    RmmSeries s;
    for (int t = 0; t < n_leads; ++t) {
      s.rmm1.push_back(rng.normal());
      s.rmm2.push_back(rng.normal());
    }
    b.push_case(s, first_init + static_cast<std::int64_t>(i) * stride);
  }
  return b;
}

RmmBatch transform(const RmmBatch& src, const std::function<std::pair<double, double>(
                                             double, double, int lead)>& f) {
  RmmBatch out;
  for (int i = 0; i < src.n_cases; ++i) {
    RmmSeries s;
    for (int t = 0; t < src.n_leads; ++t) {
      auto [r1, r2] = f(src.rmm1[src.idx(i, t)], src.rmm2[src.idx(i, t)], t);
      s.rmm1.push_back(r1);
      s.rmm2.push_back(r2);
    }
    out.push_case(s, src.init_dates[i]);
  }
  return out;
}

}  // namespace

TEST_CASE("correlation skill trivial identities") {
  Rng rng(51);
  RmmBatch obs = random_batch(20, 5, rng);

  SUBCASE("perfect forecast scores 1 at every lead") {
    for (int t = 0; t < 5; ++t) CHECK(cor(obs, obs, t) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("negated forecast scores -1") {
    RmmBatch neg = transform(obs, [](double a, double b, int) { return std::pair{-a, -b}; });
    for (int t = 0; t < 5; ++t) CHECK(cor(obs, neg, t) == doctest::Approx(-1.0).epsilon(1e-14));
  }
  SUBCASE("per-sample 90-degree rotation scores exactly 0") {
    RmmBatch rot = transform(obs, [](double a, double b, int) { return std::pair{-b, a}; });
    for (int t = 0; t < 5; ++t) CHECK(cor(obs, rot, t) == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("positive rescaling leaves the score unchanged, negation flips it") {
    RmmBatch fc = random_batch(20, 5, rng);
    for (int t = 0; t < 5; ++t) {
      const double base = cor(obs, fc, t);
      RmmBatch scaled =
          transform(fc, [](double a, double b, int) { return std::pair{3.7 * a, 3.7 * b}; });
      CHECK(cor(obs, scaled, t) == doctest::Approx(base).epsilon(1e-12));
      RmmBatch neg = transform(fc, [](double a, double b, int) { return std::pair{-a, -b}; });
      CHECK(cor(obs, neg, t) == doctest::Approx(-base).epsilon(1e-12));
    }
  }
  SUBCASE("degenerate denominator throws") {
    RmmBatch zero = transform(obs, [](double, double, int) { return std::pair{0.0, 0.0}; });
    CHECK_THROWS_AS(cor(obs, zero, 0), DataError);
  }
}

TEST_CASE("rmse identities") {
  Rng rng(52);
  RmmBatch obs = random_batch(15, 4, rng);
  SUBCASE("identical series gives zero") {
    for (int t = 0; t < 4; ++t) CHECK(rmse(obs, obs, t) == 0.0);
  }
  SUBCASE("zero forecast reduces to the observed quadratic mean") {
    RmmBatch zero = transform(obs, [](double, double, int) { return std::pair{0.0, 0.0}; });
    for (int t = 0; t < 4; ++t) {
      double expect = 0.0;
      for (int i = 0; i < obs.n_cases; ++i)
        expect += obs.rmm1[obs.idx(i, t)] * obs.rmm1[obs.idx(i, t)] +
                  obs.rmm2[obs.idx(i, t)] * obs.rmm2[obs.idx(i, t)];
      CHECK(rmse(obs, zero, t) == doctest::Approx(std::sqrt(expect / obs.n_cases)).epsilon(1e-14));
    }
  }
  SUBCASE("single 3-4-5 sample") {
    RmmBatch a, b;
    RmmSeries sa, sb;
    sa.rmm1 = {3.0};
    sa.rmm2 = {4.0};
    sb.rmm1 = {0.0};
    sb.rmm2 = {0.0};
    a.push_case(sa, 0);
    b.push_case(sb, 0);
    CHECK(rmse(a, b, 0) == doctest::Approx(5.0));
  }
}

TEST_CASE("msss identities") {
  Rng rng(53);
  RmmBatch obs = random_batch(25, 3, rng);
  SUBCASE("perfect forecast scores 1") {
    for (int t = 0; t < 3; ++t) CHECK(msss(obs, obs, t) == doctest::Approx(1.0));
  }
  SUBCASE("zero forecast scores 0") {
    RmmBatch zero = transform(obs, [](double, double, int) { return std::pair{0.0, 0.0}; });
    for (int t = 0; t < 3; ++t) CHECK(msss(obs, zero, t) == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("doubled forecast cancels algebraically to 0") {
    RmmBatch twice =
        transform(obs, [](double a, double b, int) { return std::pair{2 * a, 2 * b}; });
    for (int t = 0; t < 3; ++t) CHECK(msss(obs, twice, t) == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("metrics match a brute-force accumulator on large random batches") {
  Rng rng(54);
  for (int n : {10, 137, 1000}) {
    RmmBatch obs = random_batch(n, 3, rng);
    RmmBatch fc = transform(obs, [&](double a, double b, int) {
      return std::pair{0.7 * a + 0.2 * rng.normal(), 0.7 * b + 0.2 * rng.normal()};
    });
    for (int t = 0; t < 3; ++t) {
      long double s_ab = 0, s_aa = 0, s_bb = 0, s_sq = 0;
      for (int i = 0; i < n; ++i) {
        const long double a1 = obs.rmm1[obs.idx(i, t)], a2 = obs.rmm2[obs.idx(i, t)];
        const long double b1 = fc.rmm1[fc.idx(i, t)], b2 = fc.rmm2[fc.idx(i, t)];
        s_ab += a1 * b1 + a2 * b2;
        s_aa += a1 * a1 + a2 * a2;
        s_bb += b1 * b1 + b2 * b2;
        s_sq += (a1 - b1) * (a1 - b1) + (a2 - b2) * (a2 - b2);
      }
      const double cor_expect = static_cast<double>(s_ab / (std::sqrt(s_aa) * std::sqrt(s_bb)));
      const double rmse_expect = static_cast<double>(std::sqrt(s_sq / n));
      const double msss_expect = static_cast<double>(1.0L - s_sq / s_aa);
      CHECK(cor(obs, fc, t) == doctest::Approx(cor_expect).epsilon(1e-12));
      CHECK(rmse(obs, fc, t) == doctest::Approx(rmse_expect).epsilon(1e-12));
      CHECK(msss(obs, fc, t) == doctest::Approx(msss_expect).epsilon(1e-12));
      // Cross-metric identity: RMSE^2 is the MSE_f inside MSSS.
      const double mse_f = rmse(obs, fc, t) * rmse(obs, fc, t);
      const double mse_c = static_cast<double>(s_aa) / n;
      CHECK(msss(obs, fc, t) == doctest::Approx(1.0 - mse_f / mse_c).epsilon(1e-12));
    }
  }
}

TEST_CASE("skillful lead definition") {
  CHECK(skillful_lead(std::vector<double>{0.9, 0.7, 0.55, 0.45, 0.3}) == 3);
  CHECK(skillful_lead(std::vector<double>{0.9, 0.8, 0.7}) == 3);
  CHECK(skillful_lead(std::vector<double>{0.4, 0.9, 0.9}) == 0);
  CHECK(skillful_lead(std::vector<double>{0.5, 0.5, 0.49}) == 2);

  SUBCASE("pointwise increase never shortens the skillful lead") {
    Rng rng(55);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> curve(12), higher(12);
      for (int t = 0; t < 12; ++t) {
        curve[t] = rng.uniform(-0.2, 1.0);
        higher[t] = std::min(1.0, curve[t] + rng.uniform(0.0, 0.3));
      }
      CHECK(skillful_lead(higher) >= skillful_lead(curve));
    }
  }
}

TEST_CASE("steiger z basics") {
  SUBCASE("equal correlations give z = 0 and no significance") {
    auto r = steiger_z(0.6, 0.6, 0.5, 200);
    CHECK(r.z == doctest::Approx(0.0));
    CHECK(r.band == SigBand::None);
  }
  SUBCASE("sample count must exceed 3") {
    CHECK_THROWS_AS(steiger_z(0.5, 0.4, 0.3, 3), DataError);
  }
  SUBCASE("perfect correlation is rejected") {
    CHECK_THROWS_AS(steiger_z(1.0, 0.4, 0.3, 100), DataError);
  }
  SUBCASE("clearly different skills at large n are significant") {
    auto r = steiger_z(0.8, 0.5, 0.55, 400);
    CHECK(r.z > 1.96);
    CHECK(r.band == SigBand::P95);
  }
}

TEST_CASE("steiger z null calibration (bivariate Monte Carlo)") {
  // Two equally skillful forecasts sharing the observed series; the
  // rejection rate at the 95% band must sit near 5%. The acceptance suite
  // repeats this with 10,000 trials.
  Rng rng(56);
  const int n_cases = 200, trials = 2000;
  const double lambda = 0.7;
  const double c = std::sqrt(1.0 - lambda * lambda);
  int rejections = 0;
  for (int trial = 0; trial < trials; ++trial) {
    RmmBatch bo, b1, b2;
    for (int i = 0; i < n_cases; ++i) {
      RmmSeries so, s1, s2;
      const double a1 = rng.normal(), a2 = rng.normal();
      so.rmm1 = {a1};
      so.rmm2 = {a2};
      s1.rmm1 = {lambda * a1 + c * rng.normal()};
      s1.rmm2 = {lambda * a2 + c * rng.normal()};
      s2.rmm1 = {lambda * a1 + c * rng.normal()};
      s2.rmm2 = {lambda * a2 + c * rng.normal()};
      bo.push_case(so, i);
      b1.push_case(s1, i);
      b2.push_case(s2, i);
    }
    const double r1 = cor(bo, b1, 0);
    const double r2 = cor(bo, b2, 0);
    const double r12 = cor(b1, b2, 0);
    if (steiger_z(r1, r2, r12, 2L * n_cases).band == SigBand::P95) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / trials;
  MESSAGE("null rejection rate: ", rate);
  CHECK(rate > 0.027);
  CHECK(rate < 0.073);
}

TEST_CASE("skill report assembles metrics and significance") {
  Rng rng(57);
  RmmBatch obs = random_batch(60, 8, rng);
  RmmBatch raw = transform(obs, [&](double a, double b, int) {
    return std::pair{0.4 * a + 0.6 * rng.normal(), 0.4 * b + 0.6 * rng.normal()};
  });
  RmmBatch corr = transform(obs, [&](double a, double b, int) {
    return std::pair{0.9 * a + 0.1 * rng.normal(), 0.9 * b + 0.1 * rng.normal()};
  });
  SkillReport rep = make_skill_report(obs, raw, corr);
  CHECK(rep.n_leads == 8);
  CHECK(rep.skillful_corr >= rep.skillful_raw);
  for (int t = 0; t < 8; ++t) {
    CHECK(rep.cor_corr[t] > rep.cor_raw[t]);
    CHECK(rep.rmse_corr[t] < rep.rmse_raw[t]);
    CHECK(rep.msss_corr[t] > rep.msss_raw[t]);
  }
  const std::string csv = rep.to_csv();
  CHECK(csv.find("lead,cor_raw,cor_corr,rmse_raw,rmse_corr,msss_raw,msss_corr,z,sig") == 0);

  SUBCASE("verify on identical forecast and truth yields cor 1, rmse 0, msss 1") {
    SkillReport perfect = make_skill_report(obs, obs, obs);
    for (int t = 0; t < 8; ++t) {
      CHECK(perfect.cor_raw[t] == doctest::Approx(1.0));
      CHECK(perfect.rmse_raw[t] == 0.0);
      CHECK(perfect.msss_raw[t] == doctest::Approx(1.0));
    }
    CHECK(perfect.skillful_raw == 8);
  }
}

TEST_CASE("phase composites") {
  // One strong case per phase plus an amplitude-1.0 case that the strict
  // filter must exclude.
  RmmBatch obs, raw, corr;
  auto spiral = [](double angle0, double amp) {
    RmmSeries s;
    for (int t = 0; t < 6; ++t) {
      const double a = angle0 + 0.15 * t;
      s.rmm1.push_back(amp * std::cos(a));
      s.rmm2.push_back(amp * std::sin(a));
    }
    return s;
  };
  // Phase 5 spans [0, 45) degrees; phase p sits (p - 5 mod 8) octants on.
  auto phase_center = [](int phase) {
    return (((phase - 5 + 8) % 8) + 0.5) * M_PI / 4.0;
  };
  for (int p = 1; p <= 8; ++p) {
    const double angle = phase_center(p);
    obs.push_case(spiral(angle, 1.5), (p - 1) * 10);
    raw.push_case(spiral(angle - 0.3, 1.2), (p - 1) * 10);
    corr.push_case(spiral(angle - 0.1, 1.4), (p - 1) * 10);
  }
  obs.push_case(spiral(0.1, 1.0), 900);
  raw.push_case(spiral(0.1, 1.0), 900);
  corr.push_case(spiral(0.1, 1.0), 900);

  auto comps = phase_composites(obs, raw, corr, 1.0);
  int total = 0;
  for (const auto& g : comps) {
    CHECK_FALSE(g.missing);
    CHECK(g.n_cases == 1);  // the amplitude-1.0 case joined no group
    total += g.n_cases;
    const double angle = phase_center(g.phase);
    CHECK(g.obs1[0] == doctest::Approx(1.5 * std::cos(angle)));
    CHECK(g.obs2[0] == doctest::Approx(1.5 * std::sin(angle)));
  }
  CHECK(total == 8);

  SUBCASE("raising the cutoff empties every group") {
    auto none = phase_composites(obs, raw, corr, 2.0);
    for (const auto& g : none) CHECK(g.missing);
  }
}

TEST_CASE("month arithmetic on the idealized calendar") {
  CHECK(month_of(0) == 1);
  CHECK(month_of(30) == 1);
  CHECK(month_of(31) == 2);
  CHECK(month_of(58) == 2);
  CHECK(month_of(59) == 3);
  CHECK(month_of(364) == 12);
  CHECK(month_of(365) == 1);  // periodic
  CHECK(month_of(365 * 10 + 200) == month_of(200));
}

TEST_CASE("stratified skill") {
  Rng rng(58);
  RmmBatch obs = random_batch(80, 6, rng, 0, 5);
  RmmBatch raw = transform(obs, [&](double a, double b, int) {
    return std::pair{0.5 * a + 0.5 * rng.normal(), 0.5 * b + 0.5 * rng.normal()};
  });
  RmmBatch corr = transform(obs, [&](double a, double b, int) {
    return std::pair{0.9 * a + 0.15 * rng.normal(), 0.9 * b + 0.15 * rng.normal()};
  });
  StratifiedSkill s = stratified_skill(obs, raw, corr, 2);
  int populated = 0;
  for (std::size_t i = 0; i < s.by_phase_raw.size(); ++i) {
    if (std::isfinite(s.by_phase_raw[i])) {
      ++populated;
      CHECK(s.by_phase_diff[i] ==
            doctest::Approx(s.by_phase_corr[i] - s.by_phase_raw[i]).epsilon(1e-12));
    }
  }
  CHECK(populated > 0);
  const std::string csv = s.to_csv();
  CHECK(csv.find("stratum_kind,stratum,n,lead,cor_raw,cor_corr,diff,sig") == 0);

  SUBCASE("all cases in one stratum reproduce the global correlation") {
    RmmBatch obs_m = obs;
    for (auto& d : obs_m.init_dates) d = 10;  // every init in January
    StratifiedSkill sm = stratified_skill(obs_m, raw, corr, 2);
    for (int t = 0; t < 6; ++t) {
      CHECK(sm.by_month_raw[t] == doctest::Approx(cor(obs, raw, t)).epsilon(1e-12));
      CHECK(std::isnan(sm.by_month_raw[static_cast<std::size_t>(5) * 6 + t]));  // June is empty
    }
  }
}

TEST_CASE("hovmoller matrices and pattern correlation") {
  const GridSpec g = GridSpec::tropics();
  AnomalyField f = AnomalyField::zeros(g, 5, 0);
  for (int v = 0; v < kNumVars; ++v)
    for (int t = 0; t < 5; ++t)
      for (int lat = 0; lat < g.n_lat; ++lat)
        for (int lon = 0; lon < g.n_lon; ++lon)
          f.at(v, t, lat, lon) = std::cos(2.0 * M_PI * (2.0 * lon / 144.0 - t / 45.0) + v);
  auto hm = hovmoller(f);
  CHECK(hm[0].n_leads == 5);
  CHECK(hm[0].n_lon == 144);

  SUBCASE("identical matrices correlate to 1, negated to -1") {
    CHECK(pattern_cc(hm[0], hm[0]) == doctest::Approx(1.0));
    HovmollerMatrix neg = hm[0];
    for (double& v : neg.values) v = -v;
    CHECK(pattern_cc(hm[0], neg) == doctest::Approx(-1.0));
  }
  SUBCASE("quarter-wavelength shift is orthogonal") {
    HovmollerMatrix shifted = hm[0];
    for (int t = 0; t < 5; ++t)
      for (int lon = 0; lon < 144; ++lon)
        shifted.values[static_cast<std::size_t>(t) * 144 + lon] =
            hm[0].at(t, (lon + 18) % 144);  // 18 columns = quarter wavelength at wavenumber 2
    CHECK(pattern_cc(hm[0], shifted) == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("constant matrix is rejected") {
    HovmollerMatrix c = hm[0];
    std::fill(c.values.begin(), c.values.end(), 2.0);
    CHECK_THROWS_AS(pattern_cc(hm[0], c), DataError);
  }
}

TEST_SUITE_END();
