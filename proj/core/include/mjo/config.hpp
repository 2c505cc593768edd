#pragma once

#include <filesystem>
#include <string>

#include "mjo/eofrmm.hpp"
#include "mjo/grid.hpp"
#include "mjo/pcc.hpp"

namespace mjo {

/// Declarative run configuration. Parsed from JSON with a strict schema:
/// unknown keys anywhere in the tree are rejected. Every command writes
/// the fully resolved document next to its outputs.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  double split_fraction = 0.2;

  SyntheticConfig synthetic;
  MeridionalBand band;
  UNetConfig unet;
  TrainConfig train;

  struct VerifyOptions {
    int min_stratum_samples = 5;
    bool include_baseline = true;
  } verify;

  struct AttributionOptions {
    int target_lead = 20;
    int steps = 64;
    int n_samples = 16;
    bool align_by_sign = true;
  } attribution;

  struct RawSyntheticOptions {
    bool emit_raw = false;          // also emit climatology-bearing raw data
    double clim_base = 240.0;       // reference level for the synthetic climatology
    double clim_annual_amp = 18.0;  // first-harmonic amplitude
    int history_years = 3;
  } raw;

  static RunConfig defaults();
  static RunConfig from_json_text(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  std::string to_json_text() const;
  void save_resolved(const std::filesystem::path& dir) const;
  void validate() const;
};

}  // namespace mjo
