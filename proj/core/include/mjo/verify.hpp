#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "mjo/eofrmm.hpp"
#include "mjo/grid.hpp"

namespace mjo {

/// Batch of RMM series: one row per forecast case, columns are leads.
struct RmmBatch {
  int n_cases = 0;
  int n_leads = 0;
  std::vector<double> rmm1, rmm2;  // (case, lead) row-major
  std::vector<std::int64_t> init_dates;

  std::size_t idx(int i, int t) const { return static_cast<std::size_t>(i) * n_leads + t; }
  void push_case(const RmmSeries& s, std::int64_t init_date);
};

/// Bivariate correlation at lead t (0-based index): uncentered sum of
/// products over cases, normalized by the two root sums of squares.
double cor(const RmmBatch& observed, const RmmBatch& forecast, int t);
double rmse(const RmmBatch& observed, const RmmBatch& forecast, int t);
/// 1 - MSE_f(t)/MSE_c(t); MSE_c is the per-lead climatological variance
/// of the observed pair (forecast identically zero).
double msss(const RmmBatch& observed, const RmmBatch& forecast, int t);

/// Longest lead (1-based) with cor >= threshold before the first drop
/// below it: (first t with cor < threshold) - 1, the curve length if the
/// correlation never drops, 0 if it is below threshold at lead 1.
int skillful_lead(std::span<const double> cor_curve, double threshold = 0.5);

enum class SigBand { None, P90, P95 };

struct SteigerResult {
  double z = 0.0;
  SigBand band = SigBand::None;
};

/// Two-sided test for the difference of two dependent correlations that
/// share the observed series. Fisher-transforms both and scales by the
/// dependent-correlation covariance term derived from the correlation
/// between the two forecast series.
SteigerResult steiger_z(double cor_a, double cor_b, double cor_between, long n_samples);

struct SkillReport {
  int n_cases = 0;
  int n_leads = 0;
  std::vector<double> cor_raw, cor_corr;
  std::vector<double> rmse_raw, rmse_corr;
  std::vector<double> msss_raw, msss_corr;
  std::vector<double> z;
  std::vector<SigBand> sig;
  int skillful_raw = 0, skillful_corr = 0;

  std::string to_csv() const;
};

SkillReport make_skill_report(const RmmBatch& observed, const RmmBatch& raw,
                              const RmmBatch& corrected);

/// Per-initial-phase mean (rmm1, rmm2) trajectories over strong events
/// (initial amplitude strictly above the cutoff). Initial state is taken
/// from the observed series at the first lead.
struct PhaseComposite {
  int phase = 0;
  int n_cases = 0;
  bool missing = true;
  std::vector<double> obs1, obs2, raw1, raw2, corr1, corr2;
};

std::array<PhaseComposite, 8> phase_composites(const RmmBatch& observed, const RmmBatch& raw,
                                               const RmmBatch& corrected,
                                               double min_amplitude = 1.0);

/// Idealized 365-day calendar month (1..12) of a day index.
int month_of(std::int64_t day);

/// COR stratified by initial phase (8 rows) and initial month (12 rows),
/// raw vs corrected, with per-cell significance where the sample count
/// permits. Cells below min_samples are marked missing.
struct StratifiedSkill {
  int n_leads = 0;
  int min_samples = 5;
  // raw/corr/diff laid out (stratum, lead); missing cells hold NaN.
  std::vector<double> by_phase_raw, by_phase_corr, by_phase_diff;
  std::vector<double> by_month_raw, by_month_corr, by_month_diff;
  std::vector<SigBand> by_phase_sig, by_month_sig;
  std::vector<int> phase_counts, month_counts;

  std::string to_csv() const;
};

StratifiedSkill stratified_skill(const RmmBatch& observed, const RmmBatch& raw,
                                 const RmmBatch& corrected, int min_samples = 5);

/// Lead-by-longitude meridional-mean matrix for one variable.
struct HovmollerMatrix {
  int n_leads = 0;
  int n_lon = 0;
  std::vector<double> values;  // (lead, lon)

  double at(int lead, int lon) const { return values[static_cast<std::size_t>(lead) * n_lon + lon]; }
};

std::array<HovmollerMatrix, kNumVars> hovmoller(const AnomalyField& field,
                                                const MeridionalBand& band = {});

/// Centered Pearson correlation over all matrix cells.
double pattern_cc(const HovmollerMatrix& a, const HovmollerMatrix& b);

}  // namespace mjo
