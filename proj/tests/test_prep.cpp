#include <cmath>
#include <functional>

#include "doctest.h"
#include "mjo/prep.hpp"
#include "support/test_util.hpp"

using namespace mjo;

TEST_SUITE_BEGIN("prep");

namespace {

HistoryCube fill_cube(const GridSpec& g, std::int64_t start, int n_days,
                      const std::function<double(int v, std::int64_t day, int lat, int lon)>& f) {
  HistoryCube c = HistoryCube::zeros(g, start, n_days);
  for (int v = 0; v < kNumVars; ++v)
    for (int d = 0; d < n_days; ++d)
      for (int lat = 0; lat < g.n_lat; ++lat)
        for (int lon = 0; lon < g.n_lon; ++lon) c.at(v, d, lat, lon) = f(v, start + d, lat, lon);
  return c;
}

}  // namespace

TEST_CASE("pure first harmonic is fit exactly") {
  const GridSpec g = testutil::tiny_grid(2, 3);
  auto cube = fill_cube(g, 0, 4 * kDaysPerYear, [](int, std::int64_t day, int, int) {
    return 10.0 * std::cos(2.0 * M_PI * static_cast<double>(day) / kDaysPerYear);
  });
  Climatology clim = fit_climatology(cube);
  HistoryCube anom = subtract_climatology(cube, clim);
  double worst = 0.0;
  for (double v : anom.values) worst = std::max(worst, std::fabs(v));
  CHECK(worst < 1e-9 * 10.0);
}

TEST_CASE("constant series gives the constant mean and zero harmonics") {
  const GridSpec g = testutil::tiny_grid(2, 2);
  auto cube = fill_cube(g, 100, 2 * kDaysPerYear, [](int v, std::int64_t, int, int) {
    return 3.5 + static_cast<double>(v);
  });
  Climatology clim = fit_climatology(cube);
  for (int v = 0; v < kNumVars; ++v) {
    const std::size_t i = static_cast<std::size_t>(v) * g.n_lat * g.n_lon;
    CHECK(clim.mean[i] == doctest::Approx(3.5 + v).epsilon(1e-12));
    for (int k = 0; k < kClimatologyHarmonics; ++k) {
      CHECK(std::fabs(clim.cos_coef[k][i]) < 1e-10);
      CHECK(std::fabs(clim.sin_coef[k][i]) < 1e-10);
    }
  }
}

TEST_CASE("harmonic coefficients recovered from noisy series within estimator bounds") {
  const GridSpec g = testutil::tiny_grid(1, 2);
  const int years = 30;
  const double sigma = 0.1;
  const double planted_a[3] = {2.0, -1.3, 0.6};
  const double planted_b[3] = {0.8, 0.5, -0.4};
  Rng rng(31);
  auto cube = fill_cube(g, 0, years * kDaysPerYear, [&](int, std::int64_t day, int, int) {
    double x = 5.0;
    for (int k = 1; k <= 3; ++k) {
      const double arg = 2.0 * M_PI * k * static_cast<double>(day) / kDaysPerYear;
      x += planted_a[k - 1] * std::cos(arg) + planted_b[k - 1] * std::sin(arg);
    }
    return x + sigma * rng.normal();
  });
  Climatology clim = fit_climatology(cube);
  // OLS on orthogonal regressors: each coefficient has standard error
  // sigma * sqrt(2 / n).
  const double bound = 3.0 * sigma * std::sqrt(2.0 / (years * kDaysPerYear));
  for (int k = 0; k < 3; ++k) {
    CHECK(std::fabs(clim.cos_coef[k][0] - planted_a[k]) < bound);
    CHECK(std::fabs(clim.sin_coef[k][0] - planted_b[k]) < bound);
  }
}

TEST_CASE("climatology reconstruction is 365-day periodic and subtraction is exact") {
  const GridSpec g = testutil::tiny_grid(2, 2);
  Rng rng(32);
  auto cube = fill_cube(g, 50, 3 * kDaysPerYear, [&](int v, std::int64_t day, int lat, int lon) {
    return std::sin(0.3 * v + lat - lon) *
           std::cos(2.0 * M_PI * static_cast<double>(day) / kDaysPerYear + lon);
  });
  Climatology clim = fit_climatology(cube);
  CHECK(clim.reconstruct(1, 1, 0, 77) == doctest::Approx(clim.reconstruct(1, 1, 0, 77 + 365)));

  SUBCASE("series equal to the reconstruction maps to zero anomalies") {
    auto recon = fill_cube(g, 200, 2 * kDaysPerYear, [&](int v, std::int64_t day, int lat, int lon) {
      return clim.reconstruct(v, lat, lon, day);
    });
    HistoryCube anom = subtract_climatology(recon, clim);
    for (double v : anom.values) CHECK(std::fabs(v) < 1e-10);
  }
  SUBCASE("zero climatology is the identity") {
    Climatology zero;
    zero.grid = g;
    zero.mean.assign(static_cast<std::size_t>(kNumVars) * g.n_lat * g.n_lon, 0.0);
    for (int k = 0; k < kClimatologyHarmonics; ++k) {
      zero.cos_coef[k] = zero.mean;
      zero.sin_coef[k] = zero.mean;
    }
    HistoryCube anom = subtract_climatology(cube, zero);
    CHECK(anom.values == cube.values);
  }
}

TEST_CASE("running-mean filter closed forms") {
  const GridSpec g = testutil::tiny_grid(1, 1);

  SUBCASE("constant series maps to zero") {
    auto cube = fill_cube(g, 0, 400, [](int, std::int64_t, int, int) { return 7.5; });
    HistoryCube out = remove_lowfreq(cube);
    CHECK(out.n_days == 400 - 119);
    CHECK(out.start_day == 119);
    for (double v : out.values) CHECK(std::fabs(v) < 1e-12);
  }

  SUBCASE("period-40 sinusoid matches the Dirichlet-kernel response") {
    const double period = 40.0;
    const double omega = 2.0 * M_PI / period;
    auto cube = fill_cube(g, 0, 600, [&](int, std::int64_t day, int, int) {
      return std::cos(omega * static_cast<double>(day));
    });
    HistoryCube out = remove_lowfreq(cube);
    const int m = kRunningMeanDays;
    // Trailing moving average of cos(w d): gain * cos(w d - w (m-1)/2)
    // with gain = sin(m w / 2) / (m sin(w / 2)).
    const double gain = std::sin(m * omega / 2.0) / (m * std::sin(omega / 2.0));
    for (int d = 0; d < out.n_days; d += 13) {
      const std::int64_t day = out.start_day + d;
      const double expected = std::cos(omega * static_cast<double>(day)) -
                              gain * std::cos(omega * (static_cast<double>(day) - (m - 1) / 2.0));
      CHECK(out.at(0, d, 0, 0) == doctest::Approx(expected).epsilon(1e-6));
    }
    // 120 days is three full periods, so the mean term vanishes entirely.
    CHECK(std::fabs(gain) < 1e-12);
  }

  SUBCASE("linear trend leaves the constant offset m*119/2") {
    const double slope = 0.02;
    auto cube = fill_cube(g, 10, 500, [&](int, std::int64_t day, int, int) {
      return slope * static_cast<double>(day);
    });
    HistoryCube out = remove_lowfreq(cube);
    for (int d = 0; d < out.n_days; d += 17)
      CHECK(out.at(0, d, 0, 0) == doctest::Approx(slope * 119.0 / 2.0).epsilon(1e-10));
  }

  SUBCASE("insufficient history throws") {
    auto cube = fill_cube(g, 0, 119, [](int, std::int64_t, int, int) { return 1.0; });
    CHECK_THROWS_AS(remove_lowfreq(cube), DataError);
  }
}

TEST_CASE("running-mean filter on forecast leads splices observed history") {
  const GridSpec g = testutil::tiny_grid(1, 1);
  const double slope = 0.01;
  auto hist = fill_cube(g, 0, 300, [&](int, std::int64_t day, int, int) {
    return slope * static_cast<double>(day);
  });

  AnomalyField fc = AnomalyField::zeros(g, 10, 250);
  for (int v = 0; v < kNumVars; ++v)
    for (int lead = 0; lead < 10; ++lead)
      fc.at(v, lead, 0, 0) = slope * static_cast<double>(fc.init_date + lead + 1);

  AnomalyField out = remove_lowfreq(fc, hist);
  // The forecast continues the same trend, so every lead keeps the
  // closed-form trend offset.
  for (int lead = 0; lead < 10; ++lead)
    CHECK(out.at(0, lead, 0, 0) == doctest::Approx(slope * 119.0 / 2.0).epsilon(1e-9));

  SUBCASE("missing history coverage throws") {
    AnomalyField early = fc;
    early.init_date = 50;  // needs days back to -67
    CHECK_THROWS_AS(remove_lowfreq(early, hist), DataError);
  }
}

TEST_CASE("z-score standardization") {
  Rng rng(33);
  const GridSpec g = testutil::tiny_grid();
  std::vector<AnomalyField> fields;
  for (int i = 0; i < 5; ++i) fields.push_back(testutil::random_field(rng, g, 6, 100 + i, 2.5));
  std::vector<const AnomalyField*> ptrs;
  for (const auto& f : fields) ptrs.push_back(&f);

  ZScoreParams p = zscore_fit(ptrs);

  SUBCASE("apply then invert is the identity to 1e-12") {
    AnomalyField z = zscore_apply(fields[0], p);
    AnomalyField back = zscore_invert(z, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < back.values.size(); ++i)
      worst = std::max(worst, std::fabs(back.values[i] - fields[0].values[i]));
    CHECK(worst < 1e-12);
  }

  SUBCASE("standardized training data has mean 0 and variance 1") {
    for (int v = 0; v < kNumVars; ++v) {
      double sum = 0.0, sumsq = 0.0;
      std::size_t n = 0;
      for (const auto& f : fields) {
        AnomalyField z = zscore_apply(f, p);
        const std::size_t per_var = z.size() / kNumVars;
        for (std::size_t i = 0; i < per_var; ++i) {
          const double x = z.values[static_cast<std::size_t>(v) * per_var + i];
          sum += x;
          sumsq += x * x;
        }
        n += per_var;
      }
      const double mean = sum / n;
      const double var = sumsq / n - mean * mean;
      CHECK(std::fabs(mean) < 1e-10);
      CHECK(std::fabs(var - 1.0) < 1e-10);
    }
  }

  SUBCASE("constant field triggers the degenerate-variable error") {
    AnomalyField c = AnomalyField::zeros(g, 4, 7);
    const AnomalyField* cp = &c;
    CHECK_THROWS_AS(zscore_fit(std::span<const AnomalyField* const>(&cp, 1)), DataError);
  }
}

TEST_CASE("full preprocessing chain annihilates a pure-climatology world") {
  // No propagating signal, no noise: after climatology removal and the
  // 120-day filter the anomalies must vanish relative to the climatology
  // amplitude.
  const GridSpec g = testutil::tiny_grid(3, 4);
  const double amp = 25.0;
  auto clim_fn = [&](int v, std::int64_t day, int lat, int lon) {
    const double arg = 2.0 * M_PI * static_cast<double>(day) / kDaysPerYear;
    return amp * (1.0 + 0.1 * v + 0.05 * lat - 0.02 * lon) *
           (1.0 + 0.5 * std::cos(arg + 0.3 * v) + 0.2 * std::sin(2.0 * arg));
  };
  auto cube = fill_cube(g, 0, 3 * kDaysPerYear, clim_fn);
  Climatology clim = fit_climatology(cube);
  HistoryCube anom = subtract_climatology(cube, clim);
  HistoryCube filtered = remove_lowfreq(anom);
  double worst = 0.0;
  for (double v : filtered.values) worst = std::max(worst, std::fabs(v));
  CHECK(worst < 1e-6 * amp);
}

TEST_CASE("prep artifacts round trip through their containers") {
  testutil::TempDir dir("prep");
  const GridSpec g = testutil::tiny_grid(2, 3);
  Rng rng(34);
  auto cube = fill_cube(g, 0, 2 * kDaysPerYear, [&](int v, std::int64_t day, int lat, int lon) {
    return std::cos(2.0 * M_PI * day / 365.0 + v + lat + lon) + 0.1 * rng.normal();
  });
  Climatology clim = fit_climatology(cube);
  clim.save(dir.path() / "c.mjoc");
  Climatology clim2 = Climatology::load(dir.path() / "c.mjoc");
  CHECK(clim2.mean == clim.mean);
  for (int k = 0; k < kClimatologyHarmonics; ++k) {
    CHECK(clim2.cos_coef[k] == clim.cos_coef[k]);
    CHECK(clim2.sin_coef[k] == clim.sin_coef[k]);
  }

  ZScoreParams p;
  p.mu = {0.5, -1.0, 2.0};
  p.sigma = {1.5, 2.5, 0.25};
  p.save(dir.path() / "z.mjoz");
  ZScoreParams p2 = ZScoreParams::load(dir.path() / "z.mjoz");
  CHECK(p2.mu == p.mu);
  CHECK(p2.sigma == p.sigma);
}

TEST_SUITE_END();
