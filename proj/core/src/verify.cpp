#include "mjo/verify.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "mjo/prep.hpp"

namespace mjo {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kZ95 = 1.959963984540054;  // two-sided 95%
constexpr double kZ90 = 1.6448536269514722;  // two-sided 90%

const char* band_str(SigBand b) {
  switch (b) {
    case SigBand::P95: return "p95";
    case SigBand::P90: return "p90";
    default: return "none";
  }
}

void check_batches(const RmmBatch& a, const RmmBatch& b, int t) {
  if (a.n_cases != b.n_cases || a.n_leads != b.n_leads)
    throw DataError("rmm batch: shape mismatch");
  if (t < 0 || t >= a.n_leads) throw DataError("rmm batch: lead index out of range");
}
}  // namespace

void RmmBatch::push_case(const RmmSeries& s, std::int64_t init_date) {
  if (n_cases == 0) n_leads = s.n_leads();
  if (s.n_leads() != n_leads) throw DataError("rmm batch: inconsistent lead counts");
  rmm1.insert(rmm1.end(), s.rmm1.begin(), s.rmm1.end());
  rmm2.insert(rmm2.end(), s.rmm2.begin(), s.rmm2.end());
  init_dates.push_back(init_date);
  ++n_cases;
}

double cor(const RmmBatch& observed, const RmmBatch& forecast, int t) {
  check_batches(observed, forecast, t);
  if (observed.n_cases < 2) throw DataError("cor: need at least 2 cases");
  double s_ab = 0.0, s_aa = 0.0, s_bb = 0.0;
  for (int i = 0; i < observed.n_cases; ++i) {
    const double a1 = observed.rmm1[observed.idx(i, t)];
    const double a2 = observed.rmm2[observed.idx(i, t)];
    const double b1 = forecast.rmm1[forecast.idx(i, t)];
    const double b2 = forecast.rmm2[forecast.idx(i, t)];
    s_ab += a1 * b1 + a2 * b2;
    s_aa += a1 * a1 + a2 * a2;
    s_bb += b1 * b1 + b2 * b2;
  }
  const double denom = std::sqrt(s_aa) * std::sqrt(s_bb);
  if (!(denom > 0.0)) throw DataError("cor: zero denominator (degenerate series)");
  return s_ab / denom;
}

double rmse(const RmmBatch& observed, const RmmBatch& forecast, int t) {
  check_batches(observed, forecast, t);
  if (observed.n_cases < 1) throw DataError("rmse: empty batch");
  double s = 0.0;
  for (int i = 0; i < observed.n_cases; ++i) {
    const double d1 = observed.rmm1[observed.idx(i, t)] - forecast.rmm1[forecast.idx(i, t)];
    const double d2 = observed.rmm2[observed.idx(i, t)] - forecast.rmm2[forecast.idx(i, t)];
    s += d1 * d1 + d2 * d2;
  }
  return std::sqrt(s / observed.n_cases);
}

double msss(const RmmBatch& observed, const RmmBatch& forecast, int t) {
  check_batches(observed, forecast, t);
  double mse_f = 0.0, mse_c = 0.0;
  for (int i = 0; i < observed.n_cases; ++i) {
    const double a1 = observed.rmm1[observed.idx(i, t)];
    const double a2 = observed.rmm2[observed.idx(i, t)];
    const double d1 = a1 - forecast.rmm1[forecast.idx(i, t)];
    const double d2 = a2 - forecast.rmm2[forecast.idx(i, t)];
    mse_f += d1 * d1 + d2 * d2;
    mse_c += a1 * a1 + a2 * a2;
  }
  if (!(mse_c > 0.0)) throw DataError("msss: zero climatological variance");
  return 1.0 - mse_f / mse_c;
}

int skillful_lead(std::span<const double> cor_curve, double threshold) {
  for (std::size_t t = 0; t < cor_curve.size(); ++t) {
    if (cor_curve[t] < threshold) return static_cast<int>(t);  // (t+1) - 1 in 1-based leads
  }
  return static_cast<int>(cor_curve.size());
}

SteigerResult steiger_z(double cor_a, double cor_b, double cor_between, long n_samples) {
  if (n_samples <= 3) throw DataError("steiger_z: need more than 3 samples");
  for (double r : {cor_a, cor_b, cor_between})
    if (!(r > -1.0 && r < 1.0))
      throw DataError("steiger_z: correlations must lie strictly inside (-1, 1)");
  const double z1 = std::atanh(cor_a);
  const double z2 = std::atanh(cor_b);
  const double rbar = 0.5 * (cor_a + cor_b);
  const double rbar2 = rbar * rbar;
  // Covariance of the two Fisher transforms for correlations sharing one
  // variable (Steiger's pooled estimate).
  const double psi =
      cor_between * (1.0 - 2.0 * rbar2) - 0.5 * rbar2 * (1.0 - 2.0 * rbar2 - cor_between * cor_between);
  const double sbar = psi / ((1.0 - rbar2) * (1.0 - rbar2));
  const double denom = 2.0 - 2.0 * sbar;
  if (!(denom > 0.0)) throw DataError("steiger_z: degenerate covariance term");
  SteigerResult res;
  res.z = (z1 - z2) * std::sqrt(static_cast<double>(n_samples - 3) / denom);
  const double az = std::fabs(res.z);
  if (az >= kZ95)
    res.band = SigBand::P95;
  else if (az >= kZ90)
    res.band = SigBand::P90;
  return res;
}

namespace {
/// Correlation between the two forecast series themselves (same uncentered
/// bivariate convention), needed by the dependent-correlation test.
double cor_between_forecasts(const RmmBatch& a, const RmmBatch& b, int t) { return cor(a, b, t); }
}  // namespace

SkillReport make_skill_report(const RmmBatch& observed, const RmmBatch& raw,
                              const RmmBatch& corrected) {
  SkillReport rep;
  rep.n_cases = observed.n_cases;
  rep.n_leads = observed.n_leads;
  for (int t = 0; t < observed.n_leads; ++t) {
    rep.cor_raw.push_back(cor(observed, raw, t));
    rep.cor_corr.push_back(cor(observed, corrected, t));
    rep.rmse_raw.push_back(rmse(observed, raw, t));
    rep.rmse_corr.push_back(rmse(observed, corrected, t));
    rep.msss_raw.push_back(msss(observed, raw, t));
    rep.msss_corr.push_back(msss(observed, corrected, t));
    // Bivariate series contribute two product terms per case.
    const long n_eff = 2L * observed.n_cases;
    SteigerResult sr{0.0, SigBand::None};
    try {
      sr = steiger_z(rep.cor_corr[t], rep.cor_raw[t], cor_between_forecasts(corrected, raw, t),
                     n_eff);
    } catch (const DataError&) {
      sr.z = kNan;
    }
    rep.z.push_back(sr.z);
    rep.sig.push_back(sr.band);
  }
  rep.skillful_raw = skillful_lead(rep.cor_raw);
  rep.skillful_corr = skillful_lead(rep.cor_corr);
  return rep;
}

std::string SkillReport::to_csv() const {
  std::string out = "lead,cor_raw,cor_corr,rmse_raw,rmse_corr,msss_raw,msss_corr,z,sig\n";
  char line[256];
  for (int t = 0; t < n_leads; ++t) {
    std::snprintf(line, sizeof(line), "%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%s\n", t + 1,
                  cor_raw[t], cor_corr[t], rmse_raw[t], rmse_corr[t], msss_raw[t], msss_corr[t],
                  z[t], band_str(sig[t]));
    out += line;
  }
  return out;
}

std::array<PhaseComposite, 8> phase_composites(const RmmBatch& observed, const RmmBatch& raw,
                                               const RmmBatch& corrected, double min_amplitude) {
  std::array<PhaseComposite, 8> comps;
  const int l = observed.n_leads;
  for (int p = 0; p < 8; ++p) {
    comps[p].phase = p + 1;
    comps[p].obs1.assign(l, 0.0);
    comps[p].obs2.assign(l, 0.0);
    comps[p].raw1.assign(l, 0.0);
    comps[p].raw2.assign(l, 0.0);
    comps[p].corr1.assign(l, 0.0);
    comps[p].corr2.assign(l, 0.0);
  }
  for (int i = 0; i < observed.n_cases; ++i) {
    const double r1 = observed.rmm1[observed.idx(i, 0)];
    const double r2 = observed.rmm2[observed.idx(i, 0)];
    const double amp = std::hypot(r1, r2);
    if (!(amp > min_amplitude)) continue;  // strong events only, strict inequality
    const int p = phase_of(r1, r2) - 1;
    auto& c = comps[p];
    for (int t = 0; t < l; ++t) {
      c.obs1[t] += observed.rmm1[observed.idx(i, t)];
      c.obs2[t] += observed.rmm2[observed.idx(i, t)];
      c.raw1[t] += raw.rmm1[raw.idx(i, t)];
      c.raw2[t] += raw.rmm2[raw.idx(i, t)];
      c.corr1[t] += corrected.rmm1[corrected.idx(i, t)];
      c.corr2[t] += corrected.rmm2[corrected.idx(i, t)];
    }
    ++c.n_cases;
  }
  for (auto& c : comps) {
    if (c.n_cases == 0) continue;
    c.missing = false;
    const double inv = 1.0 / c.n_cases;
    for (auto* v : {&c.obs1, &c.obs2, &c.raw1, &c.raw2, &c.corr1, &c.corr2})
      for (double& x : *v) x *= inv;
  }
  return comps;
}

int month_of(std::int64_t day) {
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int doy = static_cast<int>(((day % kDaysPerYear) + kDaysPerYear) % kDaysPerYear);
  for (int m = 0; m < 12; ++m) {
    if (doy < kDays[m]) return m + 1;
    doy -= kDays[m];
  }
  return 12;
}

namespace {
struct StratumView {
  RmmBatch obs, raw, corr;
};

StratumView collect(const RmmBatch& observed, const RmmBatch& raw, const RmmBatch& corrected,
                    const std::vector<int>& members) {
  StratumView v;
  for (int i : members) {
    RmmSeries so, sr, sc;
    for (int t = 0; t < observed.n_leads; ++t) {
      so.rmm1.push_back(observed.rmm1[observed.idx(i, t)]);
      so.rmm2.push_back(observed.rmm2[observed.idx(i, t)]);
      sr.rmm1.push_back(raw.rmm1[raw.idx(i, t)]);
      sr.rmm2.push_back(raw.rmm2[raw.idx(i, t)]);
      sc.rmm1.push_back(corrected.rmm1[corrected.idx(i, t)]);
      sc.rmm2.push_back(corrected.rmm2[corrected.idx(i, t)]);
    }
    v.obs.push_case(so, observed.init_dates[i]);
    v.raw.push_case(sr, 0);
    v.corr.push_case(sc, 0);
  }
  return v;
}

void fill_strata(const RmmBatch& observed, const RmmBatch& raw, const RmmBatch& corrected,
                 const std::vector<std::vector<int>>& groups, int min_samples, int n_leads,
                 std::vector<double>& out_raw, std::vector<double>& out_corr,
                 std::vector<double>& out_diff, std::vector<SigBand>& out_sig,
                 std::vector<int>& counts) {
  const int n_groups = static_cast<int>(groups.size());
  out_raw.assign(static_cast<std::size_t>(n_groups) * n_leads, kNan);
  out_corr.assign(static_cast<std::size_t>(n_groups) * n_leads, kNan);
  out_diff.assign(static_cast<std::size_t>(n_groups) * n_leads, kNan);
  out_sig.assign(static_cast<std::size_t>(n_groups) * n_leads, SigBand::None);
  counts.assign(n_groups, 0);
  for (int g = 0; g < n_groups; ++g) {
    counts[g] = static_cast<int>(groups[g].size());
    if (counts[g] < std::max(min_samples, 2)) continue;
    StratumView v = collect(observed, raw, corrected, groups[g]);
    for (int t = 0; t < n_leads; ++t) {
      const std::size_t cell = static_cast<std::size_t>(g) * n_leads + t;
      try {
        out_raw[cell] = cor(v.obs, v.raw, t);
        out_corr[cell] = cor(v.obs, v.corr, t);
        out_diff[cell] = out_corr[cell] - out_raw[cell];
        const long n_eff = 2L * counts[g];
        if (n_eff > 3) {
          out_sig[cell] =
              steiger_z(out_corr[cell], out_raw[cell], cor(v.corr, v.raw, t), n_eff).band;
        }
      } catch (const DataError&) {
        // degenerate cell stays missing
      }
    }
  }
}
}  // namespace

StratifiedSkill stratified_skill(const RmmBatch& observed, const RmmBatch& raw,
                                 const RmmBatch& corrected, int min_samples) {
  StratifiedSkill s;
  s.n_leads = observed.n_leads;
  s.min_samples = min_samples;

  std::vector<std::vector<int>> by_phase(8), by_month(12);
  for (int i = 0; i < observed.n_cases; ++i) {
    const double r1 = observed.rmm1[observed.idx(i, 0)];
    const double r2 = observed.rmm2[observed.idx(i, 0)];
    if (r1 != 0.0 || r2 != 0.0) by_phase[phase_of(r1, r2) - 1].push_back(i);
    by_month[month_of(observed.init_dates[i]) - 1].push_back(i);
  }
  fill_strata(observed, raw, corrected, by_phase, min_samples, s.n_leads, s.by_phase_raw,
              s.by_phase_corr, s.by_phase_diff, s.by_phase_sig, s.phase_counts);
  fill_strata(observed, raw, corrected, by_month, min_samples, s.n_leads, s.by_month_raw,
              s.by_month_corr, s.by_month_diff, s.by_month_sig, s.month_counts);
  return s;
}

std::string StratifiedSkill::to_csv() const {
  std::string out = "stratum_kind,stratum,n,lead,cor_raw,cor_corr,diff,sig\n";
  char line[192];
  auto emit = [&](const char* kind, int n_groups, const std::vector<double>& raw,
                  const std::vector<double>& corr, const std::vector<double>& diff,
                  const std::vector<SigBand>& sig, const std::vector<int>& counts) {
    for (int g = 0; g < n_groups; ++g)
      for (int t = 0; t < n_leads; ++t) {
        const std::size_t cell = static_cast<std::size_t>(g) * n_leads + t;
        std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%.12g,%.12g,%.12g,%s\n", kind, g + 1,
                      counts[g], t + 1, raw[cell], corr[cell], diff[cell], band_str(sig[cell]));
        out += line;
      }
  };
  emit("phase", 8, by_phase_raw, by_phase_corr, by_phase_diff, by_phase_sig, phase_counts);
  emit("month", 12, by_month_raw, by_month_corr, by_month_diff, by_month_sig, month_counts);
  return out;
}

std::array<HovmollerMatrix, kNumVars> hovmoller(const AnomalyField& field,
                                                const MeridionalBand& band) {
  LonProfiles p = meridional_mean(field, band);
  std::array<HovmollerMatrix, kNumVars> out;
  for (int v = 0; v < kNumVars; ++v) {
    out[v].n_leads = p.n_leads;
    out[v].n_lon = p.n_lon;
    out[v].values.resize(static_cast<std::size_t>(p.n_leads) * p.n_lon);
    for (int t = 0; t < p.n_leads; ++t)
      for (int lon = 0; lon < p.n_lon; ++lon)
        out[v].values[static_cast<std::size_t>(t) * p.n_lon + lon] = p.at(v, t, lon);
  }
  return out;
}

double pattern_cc(const HovmollerMatrix& a, const HovmollerMatrix& b) {
  if (a.n_leads != b.n_leads || a.n_lon != b.n_lon) throw DataError("pattern_cc: shape mismatch");
  const std::size_t n = a.values.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a.values[i];
    mb += b.values[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.values[i] - ma;
    const double db = b.values[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DataError("pattern_cc: constant matrix");
  return sab / (std::sqrt(saa) * std::sqrt(sbb));
}

}  // namespace mjo
