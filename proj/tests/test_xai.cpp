#include <cmath>

#include "doctest.h"
#include "mjo/container.hpp"
#include "mjo/xai.hpp"
#include "support/test_util.hpp"

using namespace mjo;

TEST_SUITE_BEGIN("xai");

namespace {

/// Degenerate corrector whose refined output is an exactly linear
/// functional of the input: both stages disabled, hand-built basis.
CorrectorModel linear_model(const GridSpec& grid, int n_leads) {
  UNetConfig cfg;
  cfg.channels = {1, 1, 1, 1};
  CorrectorModel m = build_corrector(grid, n_leads, cfg, 4, true, 17);
  m.stage1_active = false;
  m.stage2_active = false;
  m.band = MeridionalBand{-15.0, 15.0};
  m.z_forecast.mu = {0.1, -0.2, 0.3};
  m.z_forecast.sigma = {1.5, 0.8, 1.2};
  m.z_truth = m.z_forecast;

  m.basis.n_lon = grid.n_lon;
  m.basis.band = m.band;
  m.basis.field_norms = {0.9, 1.1, 1.3};
  const int dim = m.basis.profile_len();
  m.basis.eof1.resize(dim);
  m.basis.eof2.resize(dim);
  for (int i = 0; i < dim; ++i) {
    m.basis.eof1[i] = std::cos(2.0 * M_PI * i / dim + 0.3);
    m.basis.eof2[i] = std::sin(2.0 * M_PI * i / dim + 0.3);
  }
  auto normalize = [&](std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    for (double& x : v) x /= std::sqrt(n);
  };
  normalize(m.basis.eof1);
  normalize(m.basis.eof2);
  m.basis.scale1 = 1.7;
  m.basis.scale2 = 0.6;
  finalize_basis(m);
  return m;
}

/// The analytic weight of the linear model for one element. With both
/// stages bypassed, standardization and its inverse cancel exactly, so
/// only the band mean, field norm, and projection remain.
double linear_weight(const CorrectorModel& m, RmmTarget target, int target_lead, int v, int lead,
                     int lat, int lon, int band_rows) {
  if (lead != target_lead - 1) return 0.0;
  const double lat_deg = m.grid.lat_deg(lat);
  if (lat_deg < m.band.south_deg - 1e-9 || lat_deg > m.band.north_deg + 1e-9) return 0.0;
  const auto& eof = target == RmmTarget::Rmm1 ? m.basis.eof1 : m.basis.eof2;
  const double scale = target == RmmTarget::Rmm1 ? m.basis.scale1 : m.basis.scale2;
  return (1.0 / band_rows) * (1.0 / m.basis.field_norms[v]) *
         eof[static_cast<std::size_t>(v) * m.grid.n_lon + lon] / scale;
}

}  // namespace

TEST_CASE("integrated gradients are exact for a linear model at any step count") {
  const GridSpec grid = GridSpec::tropics();
  Rng rng(71);
  CorrectorModel m = linear_model(grid, 6);
  AnomalyField x = testutil::random_field(rng, grid, 6, 0, 0.7);
  const int band_rows = static_cast<int>(grid.rows_within(-15.0, 15.0).size());

  for (int steps : {16, 64}) {
    AttributionMap map = integrated_gradients(m, x, RmmTarget::Rmm1, 3, steps);

    CHECK(map.completeness_residual() < 1e-12 * std::max(1.0, std::fabs(map.output_at_input)));

    // attribution = w (.) x elementwise, against the hand-derived weight.
    double worst = 0.0;
    for (int v = 0; v < kNumVars; ++v)
      for (int lead = 0; lead < 6; ++lead)
        for (int lat = 0; lat < grid.n_lat; ++lat)
          for (int lon = 0; lon < grid.n_lon; ++lon) {
            const double w = linear_weight(m, RmmTarget::Rmm1, 3, v, lead, lat, lon, band_rows);
            const double expect = w * x.at(v, lead, lat, lon);
            worst = std::max(worst, std::fabs(map.values[x.index(v, lead, lat, lon)] - expect));
          }
    CHECK(worst < 1e-14);
  }
}

TEST_CASE("attribution of a zero input against the zero baseline vanishes") {
  const GridSpec grid = testutil::tiny_grid(5, 12);
  CorrectorModel m = linear_model(grid, 4);
  AnomalyField zero = AnomalyField::zeros(grid, 4, 0);
  AttributionMap map = integrated_gradients(m, zero, RmmTarget::Rmm2, 2, 16);
  for (double v : map.values) CHECK(v == 0.0);
}

TEST_CASE("attribution is deterministic across repeated runs") {
  const GridSpec grid = testutil::tiny_grid(5, 12);
  Rng rng(73);
  CorrectorModel m = linear_model(grid, 4);
  AnomalyField x = testutil::random_field(rng, grid, 4, 0);
  AttributionMap a = integrated_gradients(m, x, RmmTarget::Rmm1, 2, 32);
  AttributionMap b = integrated_gradients(m, x, RmmTarget::Rmm1, 2, 32);
  CHECK(a.values == b.values);
  CHECK(a.output_at_input == b.output_at_input);
}

TEST_CASE("step-count and lead preconditions") {
  const GridSpec grid = testutil::tiny_grid(5, 12);
  Rng rng(74);
  CorrectorModel m = linear_model(grid, 4);
  AnomalyField x = testutil::random_field(rng, grid, 4, 0);
  CHECK_THROWS_AS(integrated_gradients(m, x, RmmTarget::Rmm1, 2, 8), DataError);
  CHECK_THROWS_AS(integrated_gradients(m, x, RmmTarget::Rmm1, 99, 16), DataError);
}

TEST_CASE("composite attributions") {
  const GridSpec grid = testutil::tiny_grid(5, 12);
  Rng rng(75);
  CorrectorModel m = linear_model(grid, 4);
  AnomalyField x = testutil::random_field(rng, grid, 4, 0);
  AttributionMap a = integrated_gradients(m, x, RmmTarget::Rmm1, 2, 16);

  SUBCASE("a single map composites to itself") {
    AttributionMap c = composite_attributions(std::vector<AttributionMap>{a}, RmmTarget::Rmm1);
    CHECK(c.values == a.values);
  }
  SUBCASE("two opposite maps cancel") {
    AttributionMap b = flip_map(a);
    AttributionMap c = composite_attributions(std::vector<AttributionMap>{a, b}, RmmTarget::Rmm1);
    for (double v : c.values) CHECK(v == doctest::Approx(0.0));
  }
  SUBCASE("sample order does not matter") {
    AnomalyField y = testutil::random_field(rng, grid, 4, 0);
    AttributionMap b = integrated_gradients(m, y, RmmTarget::Rmm1, 2, 16);
    AttributionMap ab = composite_attributions(std::vector<AttributionMap>{a, b}, RmmTarget::Rmm1);
    AttributionMap ba = composite_attributions(std::vector<AttributionMap>{b, a}, RmmTarget::Rmm1);
    for (std::size_t i = 0; i < ab.values.size(); ++i)
      CHECK(ab.values[i] == doctest::Approx(ba.values[i]).epsilon(1e-14));
  }
  SUBCASE("maps for a different target are ignored; empty set rejected") {
    AttributionMap other = integrated_gradients(m, x, RmmTarget::Rmm2, 2, 16);
    std::vector<AttributionMap> mixed{a, other};
    AttributionMap c = composite_attributions(mixed, RmmTarget::Rmm1);
    CHECK(c.values == a.values);
    CHECK_THROWS_AS(composite_attributions(std::span<const AttributionMap>(&a, 0), RmmTarget::Rmm1),
                    DataError);
  }
}

TEST_CASE("meridional attribution profiles") {
  const GridSpec grid = GridSpec::tropics();
  AttributionMap map;
  map.grid = grid;
  map.n_leads = 3;
  map.values.assign(static_cast<std::size_t>(kNumVars) * 3 * grid.n_lat * grid.n_lon, 0.0);

  SUBCASE("constant map gives a constant profile") {
    std::fill(map.values.begin(), map.values.end(), 1.25);
    auto profile = meridional_attribution(map);
    CHECK(profile.size() == static_cast<std::size_t>(kNumVars) * grid.n_lon);
    for (double v : profile) CHECK(v == doctest::Approx(1.25));
  }
  SUBCASE("latitude-antisymmetric map averages to zero") {
    for (int v = 0; v < kNumVars; ++v)
      for (int t = 0; t < 3; ++t)
        for (int lat = 0; lat < grid.n_lat; ++lat)
          for (int lon = 0; lon < grid.n_lon; ++lon)
            map.values[((static_cast<std::size_t>(v) * 3 + t) * grid.n_lat + lat) * grid.n_lon +
                       lon] = grid.lat_deg(lat) * (lon + 1);
    auto profile = meridional_attribution(map);
    for (double v : profile) CHECK(std::fabs(v) < 1e-9);
  }
  SUBCASE("exactly the 13 in-band rows contribute") {
    for (int lat = 0; lat < grid.n_lat; ++lat)
      for (int lon = 0; lon < grid.n_lon; ++lon)
        map.values[static_cast<std::size_t>(lat) * grid.n_lon + lon] =
            std::fabs(grid.lat_deg(lat)) <= 15.0 ? 3.0 : 500.0;
    auto profile = meridional_attribution(map);
    // Value 3.0 in-band on lead 1 of 3 for the first variable.
    CHECK(profile[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("eof congruence") {
  EofBasis basis;
  basis.n_lon = 12;
  const int dim = basis.profile_len();
  basis.eof1.resize(dim);
  basis.eof2.resize(dim);
  for (int i = 0; i < dim; ++i) {
    basis.eof1[i] = std::cos(2.0 * M_PI * i / dim);
    basis.eof2[i] = std::sin(2.0 * M_PI * i / dim);
  }

  SUBCASE("profile proportional to the mode scores 1") {
    std::vector<double> p(dim);
    for (int i = 0; i < dim; ++i) p[i] = 4.0 * basis.eof1[i] + 0.5;  // shift is centered away
    CHECK(eof_congruence(p, basis, RmmTarget::Rmm1) == doctest::Approx(1.0));
    for (int i = 0; i < dim; ++i) p[i] = -2.0 * basis.eof2[i];
    CHECK(eof_congruence(p, basis, RmmTarget::Rmm2) == doctest::Approx(-1.0));
  }
  SUBCASE("orthogonal profile scores 0") {
    std::vector<double> p(dim);
    for (int i = 0; i < dim; ++i) p[i] = basis.eof2[i];
    CHECK(eof_congruence(p, basis, RmmTarget::Rmm1) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("constant profile is rejected") {
    std::vector<double> p(dim, 2.0);
    CHECK_THROWS_AS(eof_congruence(p, basis, RmmTarget::Rmm1), DataError);
  }
  SUBCASE("length mismatch is rejected") {
    std::vector<double> p(dim + 1, 0.0);
    CHECK_THROWS_AS(eof_congruence(p, basis, RmmTarget::Rmm1), DataError);
  }
}

TEST_CASE("completeness residual shrinks with the step count on a nonlinear model") {
  // Tiny trained model: the LSTM nonlinearity makes completeness inexact
  // at finite m; the midpoint rule must converge as m grows.
  SyntheticConfig sc;
  sc.grid = testutil::tiny_grid(5, 12);
  sc.n_cases = 16;
  sc.n_leads = 6;
  sc.truth_amplitude = 1.0;
  sc.noise_sigma = 0.05;
  sc.mjo_zonal_wavenumber = 1;
  Dataset d = generate_synthetic(sc);
  d.split_fraction = 0.25;
  Split split = chronological_split(d);

  UNetConfig ucfg;
  ucfg.channels = {1, 1, 2, 2};
  TrainConfig tcfg;
  tcfg.batch_size = 6;
  tcfg.stage1_epochs = 1;
  tcfg.stage2_epochs = 30;
  tcfg.seed = 5;
  CorrectorModel m = train(split.train, ucfg, tcfg);

  const AnomalyField& x = split.test.front().forecast;
  const double res16 = integrated_gradients(m, x, RmmTarget::Rmm1, 4, 16).completeness_residual();
  const double res64 = integrated_gradients(m, x, RmmTarget::Rmm1, 4, 64).completeness_residual();
  const double res256 =
      integrated_gradients(m, x, RmmTarget::Rmm1, 4, 256).completeness_residual();
  MESSAGE("completeness residuals m=16/64/256: ", res16, " ", res64, " ", res256);
  CHECK(res64 <= res16 * 1.05 + 1e-12);
  CHECK(res256 <= res64 * 1.05 + 1e-12);
  CHECK(res256 <= res16 * 0.5 + 1e-12);
}

TEST_CASE("attribution map container round trip") {
  const GridSpec grid = testutil::tiny_grid(3, 8);
  AttributionMap map;
  map.target = RmmTarget::Rmm2;
  map.target_lead = 3;
  map.steps = 32;
  map.grid = grid;
  map.n_leads = 4;
  Rng rng(76);
  map.values.resize(static_cast<std::size_t>(kNumVars) * 4 * 3 * 8);
  for (auto& v : map.values) v = rng.normal();
  map.output_at_input = 1.5;
  map.output_at_baseline = -0.25;

  testutil::TempDir dir("attr");
  map.save(dir.path() / "a.mjoa");
  ArtifactReader r(dir.path() / "a.mjoa", "MJOA");
  CHECK(r.scalar("target") == 1.0);
  CHECK(r.scalar("target_lead") == 3.0);
  CHECK(r.data("values") == map.values);
}

TEST_SUITE_END();
