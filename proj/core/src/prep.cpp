#include "mjo/prep.hpp"

#include <cmath>
#include <cstring>

#include "mjo/container.hpp"
#include "mjo/linalg.hpp"

namespace mjo {

namespace {

constexpr int kNumCoef = 1 + 2 * kClimatologyHarmonics;  // mean + (cos, sin) per harmonic

void harmonic_basis(std::int64_t day, double* row) {
  row[0] = 1.0;
  for (int k = 1; k <= kClimatologyHarmonics; ++k) {
    const double arg = 2.0 * M_PI * k * static_cast<double>(day) / kDaysPerYear;
    row[2 * k - 1] = std::cos(arg);
    row[2 * k] = std::sin(arg);
  }
}

}  // namespace

void HistoryCube::validate() const {
  grid.validate();
  if (n_days <= 0) throw DataError("HistoryCube: non-positive day count");
  const std::size_t expect = static_cast<std::size_t>(kNumVars) * n_days * grid.n_lat * grid.n_lon;
  if (values.size() != expect) throw DataError("HistoryCube: value count does not match shape");
  for (double x : values)
    if (!std::isfinite(x)) throw DataError("HistoryCube: non-finite value");
}

HistoryCube HistoryCube::zeros(const GridSpec& g, std::int64_t start_day, int n_days) {
  HistoryCube c;
  c.grid = g;
  c.start_day = start_day;
  c.n_days = n_days;
  c.values.assign(static_cast<std::size_t>(kNumVars) * n_days * g.n_lat * g.n_lon, 0.0);
  return c;
}

double Climatology::reconstruct(int v, int lat, int lon, std::int64_t day) const {
  const std::size_t i = (static_cast<std::size_t>(v) * grid.n_lat + lat) * grid.n_lon + lon;
  double coef[kNumCoef];
  harmonic_basis(day, coef);
  double out = mean[i];
  for (int k = 0; k < kClimatologyHarmonics; ++k)
    out += cos_coef[k][i] * coef[2 * k + 1] + sin_coef[k][i] * coef[2 * k + 2];
  return out;
}

Climatology fit_climatology(const HistoryCube& series) {
  series.validate();
  if (series.n_days < 2 * kDaysPerYear)
    throw DataError("fit_climatology: need at least 2 full years of daily data");

  const int n_points = series.grid.n_lat * series.grid.n_lon;
  Climatology clim;
  clim.grid = series.grid;
  clim.mean.assign(static_cast<std::size_t>(kNumVars) * n_points, 0.0);
  for (int k = 0; k < kClimatologyHarmonics; ++k) {
    clim.cos_coef[k].assign(clim.mean.size(), 0.0);
    clim.sin_coef[k].assign(clim.mean.size(), 0.0);
  }

  // The design matrix depends only on the day axis, so its Gram matrix is
  // shared by every grid point.
  std::vector<double> basis(static_cast<std::size_t>(series.n_days) * kNumCoef);
  for (int d = 0; d < series.n_days; ++d)
    harmonic_basis(series.start_day + d, &basis[static_cast<std::size_t>(d) * kNumCoef]);

  std::vector<double> gram(kNumCoef * kNumCoef, 0.0);
  for (int d = 0; d < series.n_days; ++d) {
    const double* row = &basis[static_cast<std::size_t>(d) * kNumCoef];
    for (int i = 0; i < kNumCoef; ++i)
      for (int j = 0; j < kNumCoef; ++j) gram[i * kNumCoef + j] += row[i] * row[j];
  }

  for (int v = 0; v < kNumVars; ++v) {
    for (int lat = 0; lat < series.grid.n_lat; ++lat) {
      for (int lon = 0; lon < series.grid.n_lon; ++lon) {
        std::vector<double> rhs(kNumCoef, 0.0);
        for (int d = 0; d < series.n_days; ++d) {
          const double y = series.at(v, d, lat, lon);
          const double* row = &basis[static_cast<std::size_t>(d) * kNumCoef];
          for (int i = 0; i < kNumCoef; ++i) rhs[i] += row[i] * y;
        }
        std::vector<double> a = gram;
        solve_linear_system(a, rhs, kNumCoef);
        const std::size_t i = (static_cast<std::size_t>(v) * series.grid.n_lat + lat) * series.grid.n_lon + lon;
        clim.mean[i] = rhs[0];
        for (int k = 0; k < kClimatologyHarmonics; ++k) {
          clim.cos_coef[k][i] = rhs[2 * k + 1];
          clim.sin_coef[k][i] = rhs[2 * k + 2];
        }
      }
    }
  }
  return clim;
}

HistoryCube subtract_climatology(const HistoryCube& series, const Climatology& clim) {
  if (series.grid != clim.grid) throw DataError("subtract_climatology: grid mismatch");
  HistoryCube out = series;
  for (int v = 0; v < kNumVars; ++v)
    for (int d = 0; d < series.n_days; ++d)
      for (int lat = 0; lat < series.grid.n_lat; ++lat)
        for (int lon = 0; lon < series.grid.n_lon; ++lon)
          out.at(v, d, lat, lon) -= clim.reconstruct(v, lat, lon, series.start_day + d);
  return out;
}

AnomalyField subtract_climatology(const AnomalyField& raw, const Climatology& clim) {
  if (raw.grid != clim.grid) throw DataError("subtract_climatology: grid mismatch");
  AnomalyField out = raw;
  for (int v = 0; v < kNumVars; ++v)
    for (int lead = 0; lead < raw.n_leads; ++lead) {
      const std::int64_t valid = raw.init_date + lead + 1;
      for (int lat = 0; lat < raw.grid.n_lat; ++lat)
        for (int lon = 0; lon < raw.grid.n_lon; ++lon)
          out.at(v, lead, lat, lon) -= clim.reconstruct(v, lat, lon, valid);
    }
  return out;
}

HistoryCube remove_lowfreq(const HistoryCube& anomalies) {
  anomalies.validate();
  const int w = kRunningMeanDays;
  if (anomalies.n_days < w)
    throw DataError("remove_lowfreq: need at least 120 days of history");
  const int out_days = anomalies.n_days - (w - 1);
  HistoryCube out = HistoryCube::zeros(anomalies.grid, anomalies.start_day + (w - 1), out_days);

  const int n_points = anomalies.grid.n_lat * anomalies.grid.n_lon;
  for (int v = 0; v < kNumVars; ++v) {
    for (int p = 0; p < n_points; ++p) {
      const int lat = p / anomalies.grid.n_lon;
      const int lon = p % anomalies.grid.n_lon;
      double running = 0.0;
      for (int d = 0; d < w; ++d) running += anomalies.at(v, d, lat, lon);
      out.at(v, 0, lat, lon) = anomalies.at(v, w - 1, lat, lon) - running / w;
      for (int d = w; d < anomalies.n_days; ++d) {
        running += anomalies.at(v, d, lat, lon) - anomalies.at(v, d - w, lat, lon);
        out.at(v, d - (w - 1), lat, lon) = anomalies.at(v, d, lat, lon) - running / w;
      }
    }
  }
  return out;
}

AnomalyField remove_lowfreq(const AnomalyField& anomalies, const HistoryCube& observed_history) {
  anomalies.validate();
  observed_history.validate();
  if (anomalies.grid != observed_history.grid)
    throw DataError("remove_lowfreq: grid mismatch between forecast and history");
  const int w = kRunningMeanDays;
  // Lead 1 is valid on init_date + 1; its window reaches back w-1 days
  // before that, i.e. to init_date - 118.
  const std::int64_t earliest_needed = anomalies.init_date + 2 - w;
  if (observed_history.start_day > earliest_needed ||
      observed_history.start_day + observed_history.n_days <= anomalies.init_date)
    throw DataError("remove_lowfreq: observed history does not cover the 119 days before init");

  AnomalyField out = anomalies;
  for (int v = 0; v < kNumVars; ++v) {
    for (int lat = 0; lat < anomalies.grid.n_lat; ++lat) {
      for (int lon = 0; lon < anomalies.grid.n_lon; ++lon) {
        for (int lead = 0; lead < anomalies.n_leads; ++lead) {
          const std::int64_t valid = anomalies.init_date + lead + 1;
          double sum = 0.0;
          for (std::int64_t d = valid - (w - 1); d <= valid; ++d) {
            if (d > anomalies.init_date) {
              sum += anomalies.at(v, static_cast<int>(d - anomalies.init_date - 1), lat, lon);
            } else {
              sum += observed_history.at(v, static_cast<int>(d - observed_history.start_day), lat, lon);
            }
          }
          out.at(v, lead, lat, lon) = anomalies.at(v, lead, lat, lon) - sum / w;
        }
      }
    }
  }
  return out;
}

ZScoreParams zscore_fit(std::span<const AnomalyField* const> train_fields) {
  if (train_fields.empty()) throw DataError("zscore_fit: empty training set");
  ZScoreParams p;
  for (int v = 0; v < kNumVars; ++v) {
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (const AnomalyField* f : train_fields) {
      const std::size_t per_var = static_cast<std::size_t>(f->n_leads) * f->grid.n_lat * f->grid.n_lon;
      const double* base = f->values.data() + static_cast<std::size_t>(v) * per_var;
      for (std::size_t i = 0; i < per_var; ++i) {
        sum += base[i];
        sumsq += base[i] * base[i];
      }
      n += per_var;
    }
    const double mu = sum / static_cast<double>(n);
    const double var = sumsq / static_cast<double>(n) - mu * mu;
    if (!(var > 0.0))
      throw DataError(std::string("zscore_fit: zero variance for variable ") + var_name(v));
    p.mu[v] = mu;
    p.sigma[v] = std::sqrt(var);
  }
  return p;
}

AnomalyField zscore_apply(const AnomalyField& field, const ZScoreParams& p) {
  AnomalyField out = field;
  const std::size_t per_var =
      static_cast<std::size_t>(field.n_leads) * field.grid.n_lat * field.grid.n_lon;
  for (int v = 0; v < kNumVars; ++v) {
    if (!(p.sigma[v] > 0.0)) throw DataError("zscore_apply: non-positive sigma");
    double* base = out.values.data() + static_cast<std::size_t>(v) * per_var;
    for (std::size_t i = 0; i < per_var; ++i) base[i] = (base[i] - p.mu[v]) / p.sigma[v];
  }
  return out;
}

AnomalyField zscore_invert(const AnomalyField& field, const ZScoreParams& p) {
  AnomalyField out = field;
  const std::size_t per_var =
      static_cast<std::size_t>(field.n_leads) * field.grid.n_lat * field.grid.n_lon;
  for (int v = 0; v < kNumVars; ++v) {
    double* base = out.values.data() + static_cast<std::size_t>(v) * per_var;
    for (std::size_t i = 0; i < per_var; ++i) base[i] = base[i] * p.sigma[v] + p.mu[v];
  }
  return out;
}

void Climatology::save(const std::filesystem::path& path) const {
  ArtifactWriter w("MJOC");
  const std::vector<std::uint64_t> dims = {static_cast<std::uint64_t>(kNumVars),
                                           static_cast<std::uint64_t>(grid.n_lat),
                                           static_cast<std::uint64_t>(grid.n_lon)};
  w.add("grid", {6},
        {static_cast<double>(grid.n_lat), static_cast<double>(grid.n_lon), grid.lat_start_deg,
         grid.lat_step_deg, grid.lon_start_deg, grid.lon_step_deg});
  w.add("mean", dims, mean);
  for (int k = 0; k < kClimatologyHarmonics; ++k) {
    w.add("cos" + std::to_string(k + 1), dims, cos_coef[k]);
    w.add("sin" + std::to_string(k + 1), dims, sin_coef[k]);
  }
  w.save(path);
}

namespace {
GridSpec grid_from_record(const std::vector<double>& g) {
  GridSpec grid;
  grid.n_lat = static_cast<int>(g[0]);
  grid.n_lon = static_cast<int>(g[1]);
  grid.lat_start_deg = g[2];
  grid.lat_step_deg = g[3];
  grid.lon_start_deg = g[4];
  grid.lon_step_deg = g[5];
  return grid;
}
}  // namespace

Climatology Climatology::load(const std::filesystem::path& path) {
  ArtifactReader r(path, "MJOC");
  Climatology clim;
  clim.grid = grid_from_record(r.data("grid"));
  clim.mean = r.data("mean");
  for (int k = 0; k < kClimatologyHarmonics; ++k) {
    clim.cos_coef[k] = r.data("cos" + std::to_string(k + 1));
    clim.sin_coef[k] = r.data("sin" + std::to_string(k + 1));
  }
  return clim;
}

void ZScoreParams::save(const std::filesystem::path& path) const {
  ArtifactWriter w("MJOZ");
  w.add("mu", {kNumVars}, {mu.begin(), mu.end()});
  w.add("sigma", {kNumVars}, {sigma.begin(), sigma.end()});
  w.save(path);
}

ZScoreParams ZScoreParams::load(const std::filesystem::path& path) {
  ArtifactReader r(path, "MJOZ");
  ZScoreParams p;
  const auto& mu = r.data("mu");
  const auto& sigma = r.data("sigma");
  for (int v = 0; v < kNumVars; ++v) {
    p.mu[v] = mu[v];
    p.sigma[v] = sigma[v];
  }
  return p;
}

}  // namespace mjo
