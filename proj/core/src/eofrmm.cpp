#include "mjo/eofrmm.hpp"

#include <cmath>
#include <numeric>

#include "mjo/container.hpp"

namespace mjo {

LonProfiles meridional_mean(const AnomalyField& field, const MeridionalBand& band) {
  const auto rows = field.grid.rows_within(band.south_deg, band.north_deg);
  if (rows.empty()) throw DataError("meridional_mean: band selects no latitude rows");
  LonProfiles out;
  out.n_leads = field.n_leads;
  out.n_lon = field.grid.n_lon;
  out.values.assign(static_cast<std::size_t>(kNumVars) * field.n_leads * field.grid.n_lon, 0.0);
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (int v = 0; v < kNumVars; ++v)
    for (int lead = 0; lead < field.n_leads; ++lead)
      for (int lon = 0; lon < field.grid.n_lon; ++lon) {
        double s = 0.0;
        for (int r : rows) s += field.at(v, lead, r, lon);
        out.at(v, lead, lon) = s * inv;
      }
  return out;
}

CombinedProfile combined_profile(const LonProfiles& profiles, int lead,
                                 const std::array<double, kNumVars>& norms) {
  CombinedProfile p;
  p.norms = norms;
  p.values.resize(static_cast<std::size_t>(kNumVars) * profiles.n_lon);
  for (int v = 0; v < kNumVars; ++v) {
    if (!(norms[v] > 0.0)) throw DataError("combined_profile: non-positive field norm");
    for (int lon = 0; lon < profiles.n_lon; ++lon)
      p.values[static_cast<std::size_t>(v) * profiles.n_lon + lon] =
          profiles.at(v, lead, lon) / norms[v];
  }
  return p;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  if (!(n > 0.0)) throw DataError("eof: zero vector during iteration");
  for (double& x : v) x /= n;
}

/// One power-iteration eigenpair of the covariance implied by centered
/// rows, optionally deflated against a previous eigenpair.
struct PowerResult {
  std::vector<double> vec;
  double lambda;
};

PowerResult power_iterate(const std::vector<double>& cov, int dim, const EofFitOptions& opts,
                          const std::vector<double>* deflate_vec, double deflate_lambda) {
  std::vector<double> v(dim);
  // Deterministic, structureless start vector.
  for (int i = 0; i < dim; ++i) v[i] = 1.0 + 0.01 * std::sin(0.7 * (i + 1));
  normalize(v);

  double lambda_prev = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    std::vector<double> w(dim, 0.0);
    for (int r = 0; r < dim; ++r) {
      const double* row = &cov[static_cast<std::size_t>(r) * dim];
      double s = 0.0;
      for (int c = 0; c < dim; ++c) s += row[c] * v[c];
      w[r] = s;
    }
    if (deflate_vec) {
      const double proj = deflate_lambda * dot(*deflate_vec, v);
      for (int i = 0; i < dim; ++i) w[i] -= proj * (*deflate_vec)[i];
      // Re-orthogonalize for numerical hygiene.
      const double ortho = dot(*deflate_vec, w);
      for (int i = 0; i < dim; ++i) w[i] -= ortho * (*deflate_vec)[i];
    }
    const double lambda = dot(v, w);  // Rayleigh quotient (v is unit)
    normalize(w);
    v = std::move(w);
    if (it > 0 && std::fabs(lambda - lambda_prev) <= opts.rayleigh_tol * std::max(1.0, std::fabs(lambda))) {
      return PowerResult{std::move(v), lambda};
    }
    lambda_prev = lambda;
  }
  throw DataError("eof: power iteration did not converge within the iteration cap");
}

}  // namespace

EofPair leading_eof_pair(std::span<const double> rows, int n_samples, int dim,
                         const EofFitOptions& opts) {
  if (n_samples < 2) throw DataError("eof: need at least 2 samples");
  if (static_cast<std::size_t>(n_samples) * dim != rows.size())
    throw DataError("eof: row buffer does not match n_samples x dim");

  std::vector<double> mean(dim, 0.0);
  for (int s = 0; s < n_samples; ++s)
    for (int i = 0; i < dim; ++i) mean[i] += rows[static_cast<std::size_t>(s) * dim + i];
  for (double& m : mean) m /= n_samples;

  // Sample covariance (1/(n-1)); only eigenvector directions and
  // eigenvalue ratios are consumed downstream.
  std::vector<double> cov(static_cast<std::size_t>(dim) * dim, 0.0);
  std::vector<double> centered(dim);
  for (int s = 0; s < n_samples; ++s) {
    for (int i = 0; i < dim; ++i)
      centered[i] = rows[static_cast<std::size_t>(s) * dim + i] - mean[i];
    for (int i = 0; i < dim; ++i) {
      const double ci = centered[i];
      if (ci == 0.0) continue;
      double* row = &cov[static_cast<std::size_t>(i) * dim];
      for (int j = 0; j < dim; ++j) row[j] += ci * centered[j];
    }
  }
  const double inv_nm1 = 1.0 / (n_samples - 1);
  for (double& c : cov) c *= inv_nm1;

  double trace = 0.0;
  for (int i = 0; i < dim; ++i) trace += cov[static_cast<std::size_t>(i) * dim + i];
  if (!(trace > 0.0)) throw DataError("eof: degenerate (zero-variance) covariance");

  EofPair pair;
  pair.trace = trace;
  auto r1 = power_iterate(cov, dim, opts, nullptr, 0.0);
  pair.v1 = std::move(r1.vec);
  pair.lambda1 = r1.lambda;
  auto r2 = power_iterate(cov, dim, opts, &pair.v1, pair.lambda1);
  pair.v2 = std::move(r2.vec);
  pair.lambda2 = r2.lambda;
  return pair;
}

EofBasis fit_eof(std::span<const AnomalyField* const> truth_train, const MeridionalBand& band,
                 const EofFitOptions& opts) {
  if (truth_train.empty()) throw DataError("fit_eof: no training fields");
  const int n_lon = truth_train.front()->grid.n_lon;
  const int n_leads = truth_train.front()->n_leads;

  std::vector<LonProfiles> profiles;
  profiles.reserve(truth_train.size());
  for (const AnomalyField* f : truth_train) profiles.push_back(meridional_mean(*f, band));

  // Per-field normalization: the training-period standard deviation of the
  // meridional-mean anomalies (population convention).
  std::array<double, kNumVars> norms{};
  for (int v = 0; v < kNumVars; ++v) {
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (const auto& p : profiles)
      for (int lead = 0; lead < p.n_leads; ++lead)
        for (int lon = 0; lon < n_lon; ++lon) {
          const double x = p.at(v, lead, lon);
          sum += x;
          sumsq += x * x;
          ++n;
        }
    const double mu = sum / static_cast<double>(n);
    const double var = sumsq / static_cast<double>(n) - mu * mu;
    if (!(var > 0.0))
      throw DataError(std::string("fit_eof: zero meridional-mean variance for ") + var_name(v));
    norms[v] = std::sqrt(var);
  }

  const int dim = kNumVars * n_lon;
  const int n_samples = static_cast<int>(profiles.size()) * n_leads;
  std::vector<double> rows(static_cast<std::size_t>(n_samples) * dim);
  {
    std::size_t r = 0;
    for (const auto& p : profiles)
      for (int lead = 0; lead < p.n_leads; ++lead, ++r)
        for (int v = 0; v < kNumVars; ++v)
          for (int lon = 0; lon < n_lon; ++lon)
            rows[r * dim + static_cast<std::size_t>(v) * n_lon + lon] = p.at(v, lead, lon) / norms[v];
  }

  EofPair pair = leading_eof_pair(rows, n_samples, dim, opts);

  EofBasis basis;
  basis.n_lon = n_lon;
  basis.band = band;
  basis.field_norms = norms;
  basis.eof1 = std::move(pair.v1);
  basis.eof2 = std::move(pair.v2);
  basis.explained_var1 = pair.lambda1 / pair.trace;
  basis.explained_var2 = pair.lambda2 / pair.trace;

  // Sign convention for EOF1: enhanced convection (negative OLR) over the
  // warm pool, 60E-180E.
  {
    const GridSpec& grid = truth_train.front()->grid;
    const auto cols = grid.cols_within(60.0, 180.0);
    double olr_mean = 0.0;
    for (int c : cols) olr_mean += basis.eof1[c];
    if (olr_mean > 0.0)
      for (double& x : basis.eof1) x = -x;
  }

  // Sign convention for EOF2: projections of the training truth rotate
  // anticlockwise in (pc1, pc2) for the eastward-propagating signal.
  {
    double rotation = 0.0;
    for (const auto& p : profiles) {
      double pc1_prev = 0.0, pc2_prev = 0.0;
      for (int lead = 0; lead < p.n_leads; ++lead) {
        CombinedProfile cp = combined_profile(p, lead, norms);
        const double pc1 = dot(cp.values, basis.eof1);
        const double pc2 = dot(cp.values, basis.eof2);
        if (lead > 0) rotation += pc1_prev * pc2 - pc2_prev * pc1;
        pc1_prev = pc1;
        pc2_prev = pc2;
      }
    }
    if (rotation < 0.0)
      for (double& x : basis.eof2) x = -x;
  }

  // Projection scales: centered population standard deviation of the
  // training projections, so training RMM components have unit variance.
  {
    double s1 = 0.0, s1sq = 0.0, s2 = 0.0, s2sq = 0.0;
    std::size_t n = 0;
    for (const auto& p : profiles)
      for (int lead = 0; lead < p.n_leads; ++lead) {
        CombinedProfile cp = combined_profile(p, lead, norms);
        const double pc1 = dot(cp.values, basis.eof1);
        const double pc2 = dot(cp.values, basis.eof2);
        s1 += pc1;
        s1sq += pc1 * pc1;
        s2 += pc2;
        s2sq += pc2 * pc2;
        ++n;
      }
    const double m1 = s1 / n, m2 = s2 / n;
    const double v1 = s1sq / n - m1 * m1;
    const double v2 = s2sq / n - m2 * m2;
    if (!(v1 > 0.0) || !(v2 > 0.0)) throw DataError("fit_eof: degenerate projection variance");
    basis.scale1 = std::sqrt(v1);
    basis.scale2 = std::sqrt(v2);
  }
  return basis;
}

double RmmSeries::amplitude(int lead) const { return std::hypot(rmm1[lead], rmm2[lead]); }

RmmSeries project_rmm(const LonProfiles& profiles, const EofBasis& basis) {
  if (profiles.n_lon != basis.n_lon)
    throw DataError("project_rmm: profile/basis longitude mismatch");
  RmmSeries s;
  s.rmm1.resize(profiles.n_leads);
  s.rmm2.resize(profiles.n_leads);
  for (int lead = 0; lead < profiles.n_leads; ++lead) {
    CombinedProfile cp = combined_profile(profiles, lead, basis.field_norms);
    s.rmm1[lead] = dot(cp.values, basis.eof1) / basis.scale1;
    s.rmm2[lead] = dot(cp.values, basis.eof2) / basis.scale2;
  }
  return s;
}

int phase_of(double rmm1, double rmm2) {
  if (rmm1 == 0.0 && rmm2 == 0.0) throw DataError("phase_of: undefined phase at zero amplitude");
  double theta = std::atan2(rmm2, rmm1);
  if (theta < 0.0) theta += 2.0 * M_PI;
  int octant = static_cast<int>(theta / (M_PI / 4.0));
  if (octant > 7) octant = 7;  // theta == 2*pi edge
  return ((octant + 4) % 8) + 1;
}

void EofBasis::save(const std::filesystem::path& path) const {
  atomic_write_bytes(path, bytes());
}

std::string EofBasis::bytes() const {
  ArtifactWriter w("MJOE");
  w.add_scalar("n_lon", static_cast<double>(n_lon));
  w.add("band", {2}, {band.south_deg, band.north_deg});
  w.add("field_norms", {kNumVars}, {field_norms.begin(), field_norms.end()});
  w.add("eof1", {eof1.size()}, eof1);
  w.add("eof2", {eof2.size()}, eof2);
  w.add("explained", {2}, {explained_var1, explained_var2});
  w.add("scales", {2}, {scale1, scale2});
  return w.serialize();
}

EofBasis EofBasis::load(const std::filesystem::path& path) {
  ArtifactReader r(path, "MJOE");
  EofBasis b;
  b.n_lon = static_cast<int>(r.scalar("n_lon"));
  b.band.south_deg = r.data("band")[0];
  b.band.north_deg = r.data("band")[1];
  const auto& norms = r.data("field_norms");
  for (int v = 0; v < kNumVars; ++v) b.field_norms[v] = norms[v];
  b.eof1 = r.data("eof1");
  b.eof2 = r.data("eof2");
  b.explained_var1 = r.data("explained")[0];
  b.explained_var2 = r.data("explained")[1];
  b.scale1 = r.data("scales")[0];
  b.scale2 = r.data("scales")[1];
  return b;
}

}  // namespace mjo
