#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mjo/config.hpp"
#include "mjo/pcc.hpp"
#include "mjo/prep.hpp"
#include "mjo/verify.hpp"
#include "mjo/xai.hpp"

namespace mjo {

/// Synthetic data in raw (climatology-bearing) form: a multi-year daily
/// observation history plus raw forecast fields, both carrying the same
/// propagating signal the anomaly generator plants.
struct RawSynthetic {
  HistoryCube history;
  std::vector<AnomalyField> raw_forecasts;
};

/// Synthetic climatology used by the raw generator; a mean plus first and
/// second annual harmonics, so the three-harmonic fit recovers it exactly.
double synthetic_climatology(const RunConfig::RawSyntheticOptions& opts, int v, double lat_deg,
                             std::int64_t day);

RawSynthetic generate_synthetic_raw(const SyntheticConfig& cfg,
                                    const RunConfig::RawSyntheticOptions& opts);

// ---- dataset directory layout ----
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);
void save_raw_synthetic(const RawSynthetic& raw, const Dataset& reference,
                        const std::filesystem::path& dir);

/// RMM batches over a set of cases under one model: observed (truth),
/// raw-forecast, and model-corrected series.
struct EvalBatches {
  RmmBatch observed, raw, corrected, preliminary;
};
EvalBatches evaluate_cases(const CorrectorModel& model, std::span<const ForecastCase> cases);

// ---- command bodies (file to file); each writes a resolved config ----
void run_gen_synthetic(const RunConfig& cfg, const std::filesystem::path& out_dir);
void run_preprocess(const RunConfig& cfg, const std::filesystem::path& raw_dir,
                    const std::filesystem::path& out_dir);
void run_fit_eof(const RunConfig& cfg, const std::filesystem::path& data_dir,
                 const std::filesystem::path& out_dir);
void run_train(const RunConfig& cfg, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir);
void run_correct(const RunConfig& cfg, const std::filesystem::path& model_path,
                 const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
                 bool all_cases = false);
void run_verify(const RunConfig& cfg, const std::filesystem::path& model_path,
                const std::filesystem::path& data_dir, const std::filesystem::path& out_dir);
void run_composite(const RunConfig& cfg, const std::filesystem::path& model_path,
                   const std::filesystem::path& data_dir, const std::filesystem::path& out_dir);
void run_hovmoller(const RunConfig& cfg, const std::filesystem::path& model_path,
                   const std::filesystem::path& data_dir, int test_case_index,
                   const std::filesystem::path& out_dir);
void run_stratify(const RunConfig& cfg, const std::filesystem::path& model_path,
                  const std::filesystem::path& data_dir, const std::filesystem::path& out_dir);
void run_attribute(const RunConfig& cfg, const std::filesystem::path& model_path,
                   const std::filesystem::path& data_dir, const std::filesystem::path& out_dir);
void run_ablate(const RunConfig& cfg, const std::filesystem::path& data_dir,
                const std::filesystem::path& out_dir);

/// RMM CSV export: init_date,lead,rmm1,rmm2,amplitude,phase (phase blank
/// at zero amplitude).
std::string rmm_batch_csv(const RmmBatch& batch);

}  // namespace mjo
