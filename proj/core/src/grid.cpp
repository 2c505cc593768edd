#include "mjo/grid.hpp"

#include <algorithm>
#include <cmath>

#include "mjo/rng.hpp"

namespace mjo {

namespace {
constexpr const char* kVarNames[kNumVars] = {"olr", "u850", "u200"};
// Baroclinic opposition: enhanced convection (negative OLR) pairs with
// westerly U850 and easterly U200.
constexpr double kVarSign[kNumVars] = {-1.0, +1.0, -1.0};
constexpr double kDegToRad = M_PI / 180.0;
}  // namespace

const char* var_name(int v) { return kVarNames[v]; }

int var_index(const std::string& name) {
  for (int v = 0; v < kNumVars; ++v) {
    if (name == kVarNames[v]) return v;
  }
  throw DataError("unknown variable name: " + name);
}

std::vector<int> GridSpec::rows_within(double south_deg, double north_deg) const {
  std::vector<int> rows;
  for (int r = 0; r < n_lat; ++r) {
    double lat = lat_deg(r);
    if (lat >= south_deg - 1e-9 && lat <= north_deg + 1e-9) rows.push_back(r);
  }
  return rows;
}

std::vector<int> GridSpec::cols_within(double west_deg, double east_deg) const {
  std::vector<int> cols;
  for (int c = 0; c < n_lon; ++c) {
    double lon = lon_deg(c);
    if (lon >= west_deg - 1e-9 && lon <= east_deg + 1e-9) cols.push_back(c);
  }
  return cols;
}

void GridSpec::validate() const {
  if (n_lat <= 0 || n_lon <= 0) throw DataError("GridSpec: non-positive extents");
  if (lat_step_deg <= 0.0 || lon_step_deg <= 0.0) throw DataError("GridSpec: non-positive steps");
  if (!std::isfinite(lat_start_deg) || !std::isfinite(lon_start_deg))
    throw DataError("GridSpec: non-finite origin");
}

bool AnomalyField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

void AnomalyField::validate() const {
  grid.validate();
  if (n_leads <= 0) throw DataError("AnomalyField: non-positive lead count");
  const std::size_t expect =
      static_cast<std::size_t>(kNumVars) * n_leads * grid.n_lat * grid.n_lon;
  if (values.size() != expect)
    throw DataError("AnomalyField: value count " + std::to_string(values.size()) +
                    " does not match shape (expected " + std::to_string(expect) + ")");
  if (!all_finite()) throw DataError("AnomalyField: non-finite value");
}

AnomalyField AnomalyField::zeros(const GridSpec& g, int n_leads, std::int64_t init_date) {
  AnomalyField f;
  f.grid = g;
  f.n_leads = n_leads;
  f.init_date = init_date;
  f.values.assign(static_cast<std::size_t>(kNumVars) * n_leads * g.n_lat * g.n_lon, 0.0);
  return f;
}

void ForecastCase::validate() const {
  forecast.validate();
  truth.validate();
  if (forecast.grid != truth.grid) throw DataError("ForecastCase: grid mismatch");
  if (forecast.n_leads != truth.n_leads) throw DataError("ForecastCase: lead count mismatch");
  if (forecast.init_date != init_date || truth.init_date != init_date)
    throw DataError("ForecastCase: init_date mismatch");
}

int test_split_size(int n_cases, double fraction) {
  return static_cast<int>(std::ceil(fraction * n_cases));
}

Split chronological_split(const Dataset& data) {
  const int n = static_cast<int>(data.cases.size());
  if (n < 5) throw DataError("chronological_split: need at least 5 cases");
  if (!(data.split_fraction > 0.0 && data.split_fraction < 1.0))
    throw DataError("chronological_split: split fraction must lie in (0,1)");
  for (int i = 1; i < n; ++i) {
    if (data.cases[i].init_date <= data.cases[i - 1].init_date)
      throw DataError("chronological_split: cases not strictly ordered by init_date");
  }
  const int n_test = test_split_size(n, data.split_fraction);
  const int n_train = n - n_test;
  std::span<const ForecastCase> all(data.cases);
  return Split{all.subspan(0, n_train), all.subspan(n_train)};
}

void SyntheticConfig::validate() const {
  grid.validate();
  if (n_cases <= 0 || n_leads <= 0) throw DataError("SyntheticConfig: non-positive counts");
  if (!(forecast_damping_rate >= 0.0 && forecast_damping_rate < 1.0))
    throw DataError("SyntheticConfig: damping rate must lie in [0,1)");
  if (!std::isfinite(forecast_phase_lag_deg_per_day) || !std::isfinite(noise_sigma) ||
      !std::isfinite(truth_amplitude) || !std::isfinite(mjo_period_days))
    throw DataError("SyntheticConfig: non-finite rates");
  if (mjo_period_days <= 0.0) throw DataError("SyntheticConfig: period must be positive");
  if (noise_sigma < 0.0) throw DataError("SyntheticConfig: negative noise sigma");
  if (lat_envelope_sigma_deg <= 0.0) throw DataError("SyntheticConfig: envelope sigma must be positive");
  if (init_stride_days <= 0) throw DataError("SyntheticConfig: init stride must be positive");
}

double synthetic_pattern(const SyntheticConfig& cfg, int v, std::int64_t day, double lat_deg,
                         double lon_deg, double extra_phase) {
  const double omega = 2.0 * M_PI / cfg.mjo_period_days;
  const double envelope = std::exp(-0.5 * (lat_deg / cfg.lat_envelope_sigma_deg) *
                                   (lat_deg / cfg.lat_envelope_sigma_deg));
  const double phase =
      cfg.mjo_zonal_wavenumber * lon_deg * kDegToRad - omega * static_cast<double>(day) + extra_phase;
  return kVarSign[v] * cfg.truth_amplitude * envelope * std::cos(phase);
}

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.rng_seed);
  Dataset data;
  data.split_fraction = 0.2;
  data.cases.reserve(cfg.n_cases);

  for (int i = 0; i < cfg.n_cases; ++i) {
    const std::int64_t init = cfg.first_init_date + static_cast<std::int64_t>(i) * cfg.init_stride_days;
    ForecastCase fc;
    fc.init_date = init;
    fc.truth = AnomalyField::zeros(cfg.grid, cfg.n_leads, init);
    fc.forecast = AnomalyField::zeros(cfg.grid, cfg.n_leads, init);

    for (int v = 0; v < kNumVars; ++v) {
      for (int lead = 0; lead < cfg.n_leads; ++lead) {
        const int lead_day = lead + 1;
        const std::int64_t valid = init + lead_day;
        const double damp = std::pow(1.0 - cfg.forecast_damping_rate, lead_day);
        // A positive lag rotates the forecast pattern back toward where the
        // truth pattern sat on earlier days (propagation stall).
        const double lag = cfg.forecast_phase_lag_deg_per_day * lead_day * kDegToRad;
        for (int lat = 0; lat < cfg.grid.n_lat; ++lat) {
          const double lat_d = cfg.grid.lat_deg(lat);
          for (int lon = 0; lon < cfg.grid.n_lon; ++lon) {
            const double lon_d = cfg.grid.lon_deg(lon);
            const double truth_signal = synthetic_pattern(cfg, v, valid, lat_d, lon_d);
            const double fc_signal = damp * synthetic_pattern(cfg, v, valid, lat_d, lon_d, lag);
            const double noise_t = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal() : 0.0;
            const double noise_f = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal() : 0.0;
            fc.truth.at(v, lead, lat, lon) = truth_signal + noise_t;
            fc.forecast.at(v, lead, lat, lon) = fc_signal + noise_f;
          }
        }
      }
    }
    data.cases.push_back(std::move(fc));
  }
  return data;
}

}  // namespace mjo
