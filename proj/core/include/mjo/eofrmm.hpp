#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "mjo/grid.hpp"

namespace mjo {

struct MeridionalBand {
  double south_deg = -15.0;
  double north_deg = 15.0;
};

/// Per-lead meridional-mean longitude profiles, shape (var, lead, lon).
struct LonProfiles {
  int n_leads = 0;
  int n_lon = 0;
  std::vector<double> values;

  std::size_t index(int v, int lead, int lon) const {
    return (static_cast<std::size_t>(v) * n_leads + lead) * n_lon + lon;
  }
  double at(int v, int lead, int lon) const { return values[index(v, lead, lon)]; }
  double& at(int v, int lead, int lon) { return values[index(v, lead, lon)]; }
};

LonProfiles meridional_mean(const AnomalyField& field, const MeridionalBand& band = {});

/// Normalized concatenated profile for one lead: each variable's meridional
/// mean divided by its field norm, concatenated in (OLR, U850, U200) order.
struct CombinedProfile {
  std::array<double, kNumVars> norms;
  std::vector<double> values;  // length 3 * n_lon
};

CombinedProfile combined_profile(const LonProfiles& profiles, int lead,
                                 const std::array<double, kNumVars>& norms);

/// Two leading combined EOF modes plus the normalization and projection
/// scales fixed over the training period.
struct EofBasis {
  int n_lon = 144;
  MeridionalBand band;
  std::array<double, kNumVars> field_norms{1.0, 1.0, 1.0};
  std::vector<double> eof1, eof2;  // unit vectors, length 3 * n_lon
  double explained_var1 = 0.0, explained_var2 = 0.0;
  double scale1 = 1.0, scale2 = 1.0;

  int profile_len() const { return kNumVars * n_lon; }
  void save(const std::filesystem::path& path) const;  // magic "MJOE"
  static EofBasis load(const std::filesystem::path& path);
  /// Serialized byte image; used to assert the basis is frozen.
  std::string bytes() const;
};

struct EofFitOptions {
  double rayleigh_tol = 1e-12;
  int max_iterations = 200000;
};

/// Leading eigenpair extraction by power iteration with orthogonal
/// deflation on the sample covariance of row-major data (n_samples x dim).
/// Exposed for direct use in tests; data rows are used as given (the
/// covariance centers them internally).
struct EofPair {
  std::vector<double> v1, v2;
  double lambda1 = 0.0, lambda2 = 0.0;
  double trace = 0.0;
};
EofPair leading_eof_pair(std::span<const double> rows, int n_samples, int dim,
                         const EofFitOptions& opts = {});

/// Fits the basis from truth training fields: per-field norms from the
/// meridional-mean anomaly standard deviation, EOFs of the normalized
/// concatenated profiles, sign conventions (warm-pool negative OLR for
/// EOF1, anticlockwise phase rotation for EOF2), projection scales.
EofBasis fit_eof(std::span<const AnomalyField* const> truth_train, const MeridionalBand& band = {},
                 const EofFitOptions& opts = {});

/// Per-lead (RMM1, RMM2) with derived amplitude and phase.
struct RmmSeries {
  std::vector<double> rmm1, rmm2;

  int n_leads() const { return static_cast<int>(rmm1.size()); }
  double amplitude(int lead) const;
};

RmmSeries project_rmm(const LonProfiles& profiles, const EofBasis& basis);

/// Wheeler-Hendon octant labeling: anticlockwise from phase 5 = [0, 45)
/// degrees of atan2(rmm2, rmm1). Throws on zero amplitude.
int phase_of(double rmm1, double rmm2);

}  // namespace mjo
