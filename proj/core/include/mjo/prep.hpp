#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "mjo/grid.hpp"

namespace mjo {

inline constexpr int kDaysPerYear = 365;  // idealized calendar, no leap years
inline constexpr int kClimatologyHarmonics = 3;
inline constexpr int kRunningMeanDays = 120;

/// Multi-year daily gridded series, values laid out (var, day, lat, lon).
/// Day-of-year of absolute day d is d mod 365.
struct HistoryCube {
  GridSpec grid;
  std::int64_t start_day = 0;
  int n_days = 0;
  std::vector<double> values;

  std::size_t index(int v, int day, int lat, int lon) const {
    return ((static_cast<std::size_t>(v) * n_days + day) * grid.n_lat + lat) * grid.n_lon + lon;
  }
  double at(int v, int day, int lat, int lon) const { return values[index(v, day, lat, lon)]; }
  double& at(int v, int day, int lat, int lon) { return values[index(v, day, lat, lon)]; }
  void validate() const;
  static HistoryCube zeros(const GridSpec& g, std::int64_t start_day, int n_days);
};

/// Mean plus the first three annual harmonics per variable and grid point.
struct Climatology {
  GridSpec grid;
  std::vector<double> mean;                                      // (var, lat, lon)
  std::array<std::vector<double>, kClimatologyHarmonics> cos_coef;  // a_k, same layout
  std::array<std::vector<double>, kClimatologyHarmonics> sin_coef;  // b_k

  double reconstruct(int v, int lat, int lon, std::int64_t day) const;
  void save(const std::filesystem::path& path) const;  // magic "MJOC"
  static Climatology load(const std::filesystem::path& path);
};

Climatology fit_climatology(const HistoryCube& series);

HistoryCube subtract_climatology(const HistoryCube& series, const Climatology& clim);
AnomalyField subtract_climatology(const AnomalyField& raw, const Climatology& clim);

/// Causal 120-day running-mean removal: out(d) = in(d) - mean(in(d-119..d)).
/// The returned cube starts 119 days after the input.
HistoryCube remove_lowfreq(const HistoryCube& anomalies);

/// Same filter applied to forecast leads, splicing the observed anomaly
/// history (must cover at least the 119 days up to and including
/// init_date) with the forecast's own earlier leads.
AnomalyField remove_lowfreq(const AnomalyField& anomalies, const HistoryCube& observed_history);

/// Per-variable standardization parameters, fit on the training split only.
struct ZScoreParams {
  std::array<double, kNumVars> mu{0.0, 0.0, 0.0};
  std::array<double, kNumVars> sigma{1.0, 1.0, 1.0};

  void save(const std::filesystem::path& path) const;  // magic "MJOZ"
  static ZScoreParams load(const std::filesystem::path& path);
};

ZScoreParams zscore_fit(std::span<const AnomalyField* const> train_fields);
AnomalyField zscore_apply(const AnomalyField& field, const ZScoreParams& p);
AnomalyField zscore_invert(const AnomalyField& field, const ZScoreParams& p);

}  // namespace mjo
