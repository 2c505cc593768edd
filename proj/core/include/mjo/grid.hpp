#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mjo/errors.hpp"

namespace mjo {

inline constexpr int kNumVars = 3;

/// Variable order is fixed system-wide: OLR, U850, U200.
enum class Var : int { Olr = 0, U850 = 1, U200 = 2 };

const char* var_name(int v);
int var_index(const std::string& name);

/// Uniform latitude-longitude grid. The default covers 20S-20N at 2.5
/// degree spacing (17 rows) and the full periodic longitude circle
/// (144 columns).
struct GridSpec {
  int n_lat = 17;
  int n_lon = 144;
  double lat_start_deg = -20.0;
  double lat_step_deg = 2.5;
  double lon_start_deg = 0.0;
  double lon_step_deg = 2.5;

  bool operator==(const GridSpec&) const = default;

  double lat_deg(int row) const { return lat_start_deg + lat_step_deg * row; }
  double lon_deg(int col) const { return lon_start_deg + lon_step_deg * col; }

  /// Row indices whose center latitude lies within [south, north].
  std::vector<int> rows_within(double south_deg, double north_deg) const;
  /// Column indices whose center longitude lies within [west, east].
  std::vector<int> cols_within(double west_deg, double east_deg) const;

  static GridSpec tropics() { return GridSpec{}; }
  void validate() const;
};

/// One forecast initialization's (or its verifying observation's) block of
/// subseasonal anomalies: values laid out (var, lead, lat, lon) row-major.
/// Lead index 0 corresponds to lead day 1; the field valid on day
/// init_date + (lead_index + 1).
struct AnomalyField {
  GridSpec grid;
  int n_leads = 40;
  std::int64_t init_date = 0;  // day index on the idealized 365-day calendar
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  std::size_t index(int v, int lead, int lat, int lon) const {
    return ((static_cast<std::size_t>(v) * n_leads + lead) * grid.n_lat + lat) * grid.n_lon + lon;
  }
  double at(int v, int lead, int lat, int lon) const { return values[index(v, lead, lat, lon)]; }
  double& at(int v, int lead, int lat, int lon) { return values[index(v, lead, lat, lon)]; }

  bool all_finite() const;
  void validate() const;

  static AnomalyField zeros(const GridSpec& g, int n_leads, std::int64_t init_date);
};

struct ForecastCase {
  std::int64_t init_date = 0;
  AnomalyField forecast;
  AnomalyField truth;

  void validate() const;
};

/// Chronologically ordered forecast cases; the test split is the last
/// ceil(split_fraction * n) cases.
struct Dataset {
  std::vector<ForecastCase> cases;
  double split_fraction = 0.2;
};

struct Split {
  std::span<const ForecastCase> train;
  std::span<const ForecastCase> test;
};

Split chronological_split(const Dataset& data);
/// Size of the test split under the ceiling rule.
int test_split_size(int n_cases, double fraction);

/// Configuration of the synthetic MJO-like data generator. Truth fields
/// carry an eastward-propagating coupled pattern (OLR and U200 in
/// baroclinic opposition to U850) under a Gaussian latitude envelope plus
/// white noise; forecasts are the same pattern with per-lead exponential
/// amplitude damping, a linear phase lag, and independent noise.
struct SyntheticConfig {
  int n_cases = 400;
  int n_leads = 40;
  GridSpec grid = GridSpec::tropics();
  double mjo_period_days = 45.0;
  int mjo_zonal_wavenumber = 2;
  double truth_amplitude = 0.05;
  double forecast_damping_rate = 0.05;      // per day, in [0, 1)
  double forecast_phase_lag_deg_per_day = 2.0;
  double noise_sigma = 0.1;
  double lat_envelope_sigma_deg = 10.0;
  std::int64_t first_init_date = 3650;      // leave room for spin-up history
  int init_stride_days = 1;
  std::uint64_t rng_seed = 42;

  void validate() const;
};

/// Noiseless propagating-pattern value of the generator: sign(v) * A *
/// envelope(lat) * cos(k*lon - omega*day + phase_offset).
double synthetic_pattern(const SyntheticConfig& cfg, int v, std::int64_t day, double lat_deg,
                         double lon_deg, double extra_phase = 0.0);

Dataset generate_synthetic(const SyntheticConfig& cfg);

}  // namespace mjo
