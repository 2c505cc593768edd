#include <cmath>

#include "doctest.h"
#include "mjo/eofrmm.hpp"
#include "support/test_util.hpp"

using namespace mjo;

TEST_SUITE_BEGIN("eofrmm");

TEST_CASE("meridional mean basics") {
  const GridSpec g = GridSpec::tropics();

  SUBCASE("constant field gives a constant profile") {
    AnomalyField f = AnomalyField::zeros(g, 3, 0);
    for (auto& v : f.values) v = 2.75;
    LonProfiles p = meridional_mean(f);
    CHECK(p.n_leads == 3);
    CHECK(p.n_lon == 144);
    for (double v : p.values) CHECK(v == doctest::Approx(2.75));
  }

  SUBCASE("field antisymmetric about the equator averages to zero") {
    AnomalyField f = AnomalyField::zeros(g, 2, 0);
    for (int v = 0; v < kNumVars; ++v)
      for (int lead = 0; lead < 2; ++lead)
        for (int lat = 0; lat < g.n_lat; ++lat)
          for (int lon = 0; lon < g.n_lon; ++lon)
            f.at(v, lead, lat, lon) = g.lat_deg(lat) * (1.0 + lon);
    LonProfiles p = meridional_mean(f);
    for (double v : p.values) CHECK(std::fabs(v) < 1e-9);
  }

  SUBCASE("the 15S-15N band selects exactly 13 rows") {
    CHECK(g.rows_within(-15.0, 15.0).size() == 13);
    AnomalyField f = AnomalyField::zeros(g, 1, 0);
    // Ones inside the band, large values outside: the mean stays 1 only if
    // exactly the 13 in-band rows contribute.
    for (int lat = 0; lat < g.n_lat; ++lat)
      for (int lon = 0; lon < g.n_lon; ++lon)
        f.at(0, 0, lat, lon) = std::fabs(g.lat_deg(lat)) <= 15.0 ? 1.0 : 1000.0;
    LonProfiles p = meridional_mean(f);
    for (int lon = 0; lon < g.n_lon; ++lon) CHECK(p.at(0, 0, lon) == doctest::Approx(1.0));
  }

  SUBCASE("empty band throws") {
    AnomalyField f = AnomalyField::zeros(g, 1, 0);
    CHECK_THROWS_AS(meridional_mean(f, MeridionalBand{1.0, 1.2}), DataError);
  }
}

namespace {

/// Rows with two planted orthogonal modes at variances v1 > v2 plus
/// isotropic noise.
std::vector<double> planted_rows(int n, int dim, double sd1, double sd2, double noise, Rng& rng,
                                 std::vector<double>* mode1_out = nullptr,
                                 std::vector<double>* mode2_out = nullptr) {
  std::vector<double> m1(dim), m2(dim);
  for (int i = 0; i < dim; ++i) {
    m1[i] = std::cos(2.0 * M_PI * i / dim);
    m2[i] = std::sin(2.0 * M_PI * i / dim);
  }
  auto norm = [&](std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    for (double& x : v) x /= std::sqrt(s);
  };
  norm(m1);
  norm(m2);
  if (mode1_out) *mode1_out = m1;
  if (mode2_out) *mode2_out = m2;

  std::vector<double> rows(static_cast<std::size_t>(n) * dim);
  for (int s = 0; s < n; ++s) {
    const double a = sd1 * rng.normal();
    const double b = sd2 * rng.normal();
    for (int i = 0; i < dim; ++i)
      rows[static_cast<std::size_t>(s) * dim + i] =
          a * m1[i] + b * m2[i] + noise * rng.normal();
  }
  return rows;
}

double abs_dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return std::fabs(s);
}

}  // namespace

TEST_CASE("planted modes are recovered through the deflated power iteration") {
  Rng rng(41);
  std::vector<double> m1, m2;
  const int dim = 40, n = 3000;
  auto rows = planted_rows(n, dim, 2.0, 1.0, 0.01, rng, &m1, &m2);
  EofPair pair = leading_eof_pair(rows, n, dim);

  CHECK(abs_dot(pair.v1, m1) > 0.99);
  CHECK(abs_dot(pair.v2, m2) > 0.99);
  CHECK(pair.lambda1 > pair.lambda2);
  CHECK(abs_dot(pair.v1, pair.v2) < 1e-10);

  SUBCASE("eigenpairs match the dense Jacobi oracle to 1e-8 relative") {
    // Build the same covariance the production path uses and hand it to
    // the independent dense solver.
    std::vector<double> mean(dim, 0.0);
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < dim; ++i) mean[i] += rows[static_cast<std::size_t>(s) * dim + i];
    for (double& m : mean) m /= n;
    std::vector<double> cov(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          cov[static_cast<std::size_t>(i) * dim + j] +=
              (rows[static_cast<std::size_t>(s) * dim + i] - mean[i]) *
              (rows[static_cast<std::size_t>(s) * dim + j] - mean[j]);
    for (double& c : cov) c /= (n - 1);

    auto dense = testutil::jacobi_eigh(cov, dim);
    CHECK(pair.lambda1 == doctest::Approx(dense.values[0]).epsilon(1e-8));
    CHECK(pair.lambda2 == doctest::Approx(dense.values[1]).epsilon(1e-8));
    std::span<const double> d1(dense.vectors.data(), dim);
    std::span<const double> d2(dense.vectors.data() + dim, dim);
    CHECK(abs_dot(pair.v1, d1) > 1.0 - 1e-8);
    CHECK(abs_dot(pair.v2, d2) > 1.0 - 1e-8);
  }
}

TEST_CASE("power iteration against the dense oracle over random spectra") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const int dim = 8 + trial * 10;  // up to 48
    const int n = 400;
    std::vector<double> rows(static_cast<std::size_t>(n) * dim);
    for (auto& x : rows) x = rng.normal();
    // Color the spectrum so the two leading eigenvalues are separated.
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < dim; ++i)
        rows[static_cast<std::size_t>(s) * dim + i] *= 1.0 + 2.0 / (1.0 + i);

    EofPair pair = leading_eof_pair(rows, n, dim);

    std::vector<double> mean(dim, 0.0);
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < dim; ++i) mean[i] += rows[static_cast<std::size_t>(s) * dim + i];
    for (double& m : mean) m /= n;
    std::vector<double> cov(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          cov[static_cast<std::size_t>(i) * dim + j] +=
              (rows[static_cast<std::size_t>(s) * dim + i] - mean[i]) *
              (rows[static_cast<std::size_t>(s) * dim + j] - mean[j]) / (n - 1);
    auto dense = testutil::jacobi_eigh(cov, dim);
    CHECK(pair.lambda1 == doctest::Approx(dense.values[0]).epsilon(1e-8));
    CHECK(pair.lambda2 == doctest::Approx(dense.values[1]).epsilon(1e-8));
  }
}

TEST_CASE("isotropic noise spreads explained variance to about 1/dim") {
  Rng rng(43);
  const int dim = 36, n = 20000;
  std::vector<double> rows(static_cast<std::size_t>(n) * dim);
  for (auto& x : rows) x = rng.normal();
  EofPair pair = leading_eof_pair(rows, n, dim);
  const double frac1 = pair.lambda1 / pair.trace;
  const double frac2 = pair.lambda2 / pair.trace;
  // Marchenko-Pastur edge for dim/n = 0.0018: (1+sqrt(r))^2/dim of trace,
  // a few percent above 1/dim. Loose sanity bounds around 1/36 = 0.0278.
  CHECK(frac1 > 1.0 / dim * 0.9);
  CHECK(frac1 < 1.0 / dim * 1.25);
  CHECK(frac2 <= frac1);
  CHECK(frac2 > 1.0 / dim * 0.85);
}

TEST_CASE("degenerate covariance is rejected") {
  std::vector<double> rows(10 * 4, 3.0);  // identical rows, zero variance
  CHECK_THROWS_AS(leading_eof_pair(rows, 10, 4), DataError);
}

namespace {

/// Synthetic truth fields for basis fitting: eastward wavenumber-2 mode.
std::vector<AnomalyField> wave_fields(int n_cases, int n_leads, double amplitude, double noise,
                                      Rng& rng) {
  SyntheticConfig cfg;
  cfg.n_cases = n_cases;
  cfg.n_leads = n_leads;
  cfg.truth_amplitude = amplitude;
  cfg.noise_sigma = noise;
  cfg.rng_seed = rng.engine()();
  Dataset d = generate_synthetic(cfg);
  std::vector<AnomalyField> out;
  for (auto& c : d.cases) out.push_back(std::move(c.truth));
  return out;
}

}  // namespace

TEST_CASE("fitted basis on the synthetic wave world") {
  Rng rng(44);
  auto fields = wave_fields(30, 40, 1.0, 0.02, rng);
  std::vector<const AnomalyField*> ptrs;
  for (const auto& f : fields) ptrs.push_back(&f);
  EofBasis basis = fit_eof(ptrs);

  SUBCASE("unit norm and orthogonality") {
    double n1 = 0.0, n2 = 0.0, d12 = 0.0;
    for (int i = 0; i < basis.profile_len(); ++i) {
      n1 += basis.eof1[i] * basis.eof1[i];
      n2 += basis.eof2[i] * basis.eof2[i];
      d12 += basis.eof1[i] * basis.eof2[i];
    }
    CHECK(std::fabs(n1 - 1.0) < 1e-10);
    CHECK(std::fabs(n2 - 1.0) < 1e-10);
    CHECK(std::fabs(d12) < 1e-10);
  }

  SUBCASE("two wave modes dominate the variance") {
    CHECK(basis.explained_var1 >= basis.explained_var2);
    CHECK(basis.explained_var1 + basis.explained_var2 > 0.9);
  }

  SUBCASE("warm-pool sign convention for EOF1") {
    const GridSpec g = GridSpec::tropics();
    const auto cols = g.cols_within(60.0, 180.0);
    double olr_mean = 0.0;
    for (int c : cols) olr_mean += basis.eof1[c];
    CHECK(olr_mean <= 0.0);
  }

  SUBCASE("projections of training data have unit variance") {
    double s1 = 0.0, s1sq = 0.0, s2 = 0.0, s2sq = 0.0;
    std::size_t n = 0;
    for (const auto& f : fields) {
      RmmSeries s = project_rmm(meridional_mean(f), basis);
      for (int t = 0; t < s.n_leads(); ++t) {
        s1 += s.rmm1[t];
        s1sq += s.rmm1[t] * s.rmm1[t];
        s2 += s.rmm2[t];
        s2sq += s.rmm2[t] * s.rmm2[t];
        ++n;
      }
    }
    const double m1 = s1 / n, m2 = s2 / n;
    CHECK(std::fabs(s1sq / n - m1 * m1 - 1.0) < 1e-10);
    CHECK(std::fabs(s2sq / n - m2 * m2 - 1.0) < 1e-10);
  }

  SUBCASE("anticlockwise rotation convention for the eastward mode") {
    // Phase angle must advance anticlockwise with lead for eastward
    // propagation under the chosen EOF2 orientation.
    const auto& f = fields[0];
    RmmSeries s = project_rmm(meridional_mean(f), basis);
    double rotation = 0.0;
    for (int t = 0; t + 1 < s.n_leads(); ++t)
      rotation += s.rmm1[t] * s.rmm2[t + 1] - s.rmm2[t] * s.rmm1[t + 1];
    CHECK(rotation > 0.0);
  }

  SUBCASE("basis serialization round trip") {
    testutil::TempDir dir("basis");
    basis.save(dir.path() / "b.mjoe");
    EofBasis loaded = EofBasis::load(dir.path() / "b.mjoe");
    CHECK(loaded.eof1 == basis.eof1);
    CHECK(loaded.eof2 == basis.eof2);
    CHECK(loaded.scale1 == basis.scale1);
    CHECK(loaded.scale2 == basis.scale2);
    CHECK(loaded.bytes() == basis.bytes());
  }
}

TEST_CASE("projection contracts") {
  Rng rng(45);
  auto fields = wave_fields(12, 20, 1.0, 0.05, rng);
  std::vector<const AnomalyField*> ptrs;
  for (const auto& f : fields) ptrs.push_back(&f);
  EofBasis basis = fit_eof(ptrs);

  SUBCASE("profile proportional to scaled EOF1 projects to (1, 0)") {
    // Craft profiles whose normalized concatenation equals scale1 * eof1.
    LonProfiles p;
    p.n_leads = 1;
    p.n_lon = basis.n_lon;
    p.values.assign(static_cast<std::size_t>(kNumVars) * basis.n_lon, 0.0);
    for (int v = 0; v < kNumVars; ++v)
      for (int lon = 0; lon < basis.n_lon; ++lon)
        p.at(v, 0, lon) = basis.scale1 * basis.eof1[static_cast<std::size_t>(v) * basis.n_lon + lon] *
                          basis.field_norms[v];
    RmmSeries s = project_rmm(p, basis);
    CHECK(s.rmm1[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(s.rmm2[0]) < 1e-10);
  }

  SUBCASE("zero profile projects to the origin") {
    LonProfiles p;
    p.n_leads = 2;
    p.n_lon = basis.n_lon;
    p.values.assign(static_cast<std::size_t>(kNumVars) * 2 * basis.n_lon, 0.0);
    RmmSeries s = project_rmm(p, basis);
    for (int t = 0; t < 2; ++t) {
      CHECK(s.rmm1[t] == 0.0);
      CHECK(s.rmm2[t] == 0.0);
      CHECK(s.amplitude(t) == 0.0);
    }
  }

  SUBCASE("projection is linear") {
    auto more = wave_fields(2, 8, 0.7, 0.3, rng);
    LonProfiles pa = meridional_mean(more[0]);
    LonProfiles pb = meridional_mean(more[1]);
    const double alpha = 1.7, beta = -0.4;
    LonProfiles combo = pa;
    for (std::size_t i = 0; i < combo.values.size(); ++i)
      combo.values[i] = alpha * pa.values[i] + beta * pb.values[i];
    RmmSeries sa = project_rmm(pa, basis);
    RmmSeries sb = project_rmm(pb, basis);
    RmmSeries sc = project_rmm(combo, basis);
    for (int t = 0; t < sc.n_leads(); ++t) {
      CHECK(sc.rmm1[t] == doctest::Approx(alpha * sa.rmm1[t] + beta * sb.rmm1[t]).epsilon(1e-10));
      CHECK(sc.rmm2[t] == doctest::Approx(alpha * sa.rmm2[t] + beta * sb.rmm2[t]).epsilon(1e-10));
    }
  }
}

TEST_CASE("phase octants follow the anticlockwise convention") {
  CHECK(phase_of(1.0, 0.0) == 5);
  CHECK(phase_of(-1.0, 0.0) == 1);
  CHECK(phase_of(1.0, 1.0) == 6);
  CHECK(std::hypot(1.0, 1.0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(phase_of(0.0, 1.0) == 7);
  CHECK(phase_of(-1.0, 1.0) == 8);
  CHECK(phase_of(-1.0, -1.0) == 2);
  CHECK(phase_of(0.0, -1.0) == 3);
  CHECK(phase_of(1.0, -1.0) == 4);
  CHECK_THROWS_AS(phase_of(0.0, 0.0), DataError);

  SUBCASE("rotation by 45 degrees advances the phase by one octant") {
    Rng rng(46);
    for (int trial = 0; trial < 50; ++trial) {
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      const double r = rng.uniform(0.1, 3.0);
      const double x = r * std::cos(angle), y = r * std::sin(angle);
      // Stay away from octant boundaries where rounding flips the label.
      const double frac = std::fmod(angle, M_PI / 4.0);
      if (frac < 0.02 || frac > M_PI / 4.0 - 0.02) continue;
      const int p0 = phase_of(x, y);
      const double c = std::cos(M_PI / 4.0), s = std::sin(M_PI / 4.0);
      const int p1 = phase_of(c * x - s * y, s * x + c * y);
      CHECK(p1 == (p0 % 8) + 1);
      // Amplitude is rotation-invariant.
      CHECK(std::hypot(c * x - s * y, s * x + c * y) == doctest::Approx(r));
    }
  }
}

TEST_SUITE_END();
