#include "mjo/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "mjo/container.hpp"
#include "mjo/svg.hpp"

namespace mjo {

using nlohmann::json;

namespace {

std::string case_file(int index, const char* kind) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "case_%05d_%s.mjog", index, kind);
  return buf;
}

void write_csv(const std::filesystem::path& path, const std::string& text) {
  atomic_write_text(path, text);
}

CorrectorModel load_model_checked(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("model checkpoint not found: " + path.string());
  return load_model(path);
}

}  // namespace

double synthetic_climatology(const RunConfig::RawSyntheticOptions& opts, int v, double lat_deg,
                             std::int64_t day) {
  // Per-variable reference level and seasonal cycle; shapes are arbitrary
  // but fixed, and expressible with two harmonics.
  static constexpr double kBaseScale[kNumVars] = {1.0, 0.01, -0.02};
  static constexpr double kAmpScale[kNumVars] = {1.0, 0.05, 0.10};
  static constexpr double kPhase[kNumVars] = {0.0, 1.1, 2.3};
  const double lat_shape = 1.0 - 0.3 * (lat_deg / 20.0) * (lat_deg / 20.0);
  const double arg = 2.0 * M_PI * static_cast<double>(day) / kDaysPerYear;
  return opts.clim_base * kBaseScale[v] * lat_shape +
         opts.clim_annual_amp * kAmpScale[v] *
             (std::cos(arg + kPhase[v]) + 0.3 * std::cos(2.0 * arg));
}

RawSynthetic generate_synthetic_raw(const SyntheticConfig& cfg,
                                    const RunConfig::RawSyntheticOptions& opts) {
  cfg.validate();
  // The anomaly-space generator fixes the signal and noise; the raw farm
  // layers the synthetic climatology on top of the same draws.
  Dataset anomalies = generate_synthetic(cfg);

  RawSynthetic raw;
  const std::int64_t last_valid =
      anomalies.cases.back().init_date + cfg.n_leads + 1;
  const std::int64_t start =
      cfg.first_init_date - static_cast<std::int64_t>(opts.history_years) * kDaysPerYear;
  const int n_days = static_cast<int>(last_valid - start + 1);
  raw.history = HistoryCube::zeros(cfg.grid, start, n_days);

  // Observation history: climatology + truth-pattern signal + fresh noise.
  Rng rng(cfg.rng_seed ^ 0xabcdef1234567890ULL);
  for (int v = 0; v < kNumVars; ++v)
    for (int d = 0; d < n_days; ++d) {
      const std::int64_t day = start + d;
      for (int lat = 0; lat < cfg.grid.n_lat; ++lat) {
        const double lat_d = cfg.grid.lat_deg(lat);
        const double clim = synthetic_climatology(opts, v, lat_d, day);
        for (int lon = 0; lon < cfg.grid.n_lon; ++lon) {
          const double signal = synthetic_pattern(cfg, v, day, lat_d, cfg.grid.lon_deg(lon));
          const double noise = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal() : 0.0;
          raw.history.at(v, d, lat, lon) = clim + signal + noise;
        }
      }
    }

  raw.raw_forecasts.reserve(anomalies.cases.size());
  for (const auto& c : anomalies.cases) {
    AnomalyField f = c.forecast;  // anomaly forecast (signal degradation + noise)
    for (int v = 0; v < kNumVars; ++v)
      for (int lead = 0; lead < f.n_leads; ++lead) {
        const std::int64_t valid = f.init_date + lead + 1;
        for (int lat = 0; lat < f.grid.n_lat; ++lat) {
          const double clim = synthetic_climatology(opts, v, f.grid.lat_deg(lat), valid);
          for (int lon = 0; lon < f.grid.n_lon; ++lon) f.at(v, lead, lat, lon) += clim;
        }
      }
    raw.raw_forecasts.push_back(std::move(f));
  }
  return raw;
}

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["split_fraction"] = data.split_fraction;
  manifest["n_cases"] = data.cases.size();
  json cases = json::array();
  for (std::size_t i = 0; i < data.cases.size(); ++i) {
    const auto& c = data.cases[i];
    const std::string fc = case_file(static_cast<int>(i), "fc");
    const std::string tr = case_file(static_cast<int>(i), "tr");
    write_grid_file(c.forecast, dir / fc);
    write_grid_file(c.truth, dir / tr);
    cases.push_back({{"init_date", c.init_date}, {"forecast", fc}, {"truth", tr}});
  }
  manifest["cases"] = std::move(cases);
  atomic_write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DataError("dataset manifest not found: " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError("dataset manifest parse error: " + std::string(e.what()));
  }
  Dataset data;
  data.split_fraction = manifest.at("split_fraction").get<double>();
  for (const auto& entry : manifest.at("cases")) {
    ForecastCase c;
    c.init_date = entry.at("init_date").get<std::int64_t>();
    c.forecast = read_grid_file(dir / entry.at("forecast").get<std::string>());
    c.truth = read_grid_file(dir / entry.at("truth").get<std::string>());
    c.validate();
    data.cases.push_back(std::move(c));
  }
  return data;
}

void save_raw_synthetic(const RawSynthetic& raw, const Dataset& reference,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    ArtifactWriter w("MJOH");
    w.add_scalar("start_day", static_cast<double>(raw.history.start_day));
    w.add_scalar("n_days", raw.history.n_days);
    w.add("grid", {6},
          {static_cast<double>(raw.history.grid.n_lat), static_cast<double>(raw.history.grid.n_lon),
           raw.history.grid.lat_start_deg, raw.history.grid.lat_step_deg,
           raw.history.grid.lon_start_deg, raw.history.grid.lon_step_deg});
    w.add("values",
          {static_cast<std::uint64_t>(kNumVars), static_cast<std::uint64_t>(raw.history.n_days),
           static_cast<std::uint64_t>(raw.history.grid.n_lat),
           static_cast<std::uint64_t>(raw.history.grid.n_lon)},
          raw.history.values);
    w.save(dir / "history.mjoh");
  }
  json manifest;
  manifest["history"] = "history.mjoh";
  manifest["split_fraction"] = reference.split_fraction;
  json cases = json::array();
  for (std::size_t i = 0; i < raw.raw_forecasts.size(); ++i) {
    const std::string fc = case_file(static_cast<int>(i), "rawfc");
    write_grid_file(raw.raw_forecasts[i], dir / fc);
    cases.push_back({{"init_date", raw.raw_forecasts[i].init_date}, {"forecast", fc}});
  }
  manifest["cases"] = std::move(cases);
  atomic_write_text(dir / "raw_manifest.json", manifest.dump(2) + "\n");
}

EvalBatches evaluate_cases(const CorrectorModel& model, std::span<const ForecastCase> cases) {
  EvalBatches out;
  std::vector<const AnomalyField*> fc;
  for (const auto& c : cases) fc.push_back(&c.forecast);
  auto corrections = correct_batch(model, fc);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    out.observed.push_case(observed_rmm(model, cases[i].truth), cases[i].init_date);
    out.raw.push_case(project_rmm(meridional_mean(cases[i].forecast, model.band), model.basis),
                      cases[i].init_date);
    out.corrected.push_case(corrections[i].refined, cases[i].init_date);
    out.preliminary.push_case(corrections[i].preliminary, cases[i].init_date);
  }
  return out;
}

std::string rmm_batch_csv(const RmmBatch& batch) {
  std::string out = "init_date,lead,rmm1,rmm2,amplitude,phase\n";
  char line[160];
  for (int i = 0; i < batch.n_cases; ++i) {
    for (int t = 0; t < batch.n_leads; ++t) {
      const double r1 = batch.rmm1[batch.idx(i, t)];
      const double r2 = batch.rmm2[batch.idx(i, t)];
      const double amp = std::hypot(r1, r2);
      std::string phase_str;
      if (amp > 0.0) phase_str = std::to_string(phase_of(r1, r2));
      std::snprintf(line, sizeof(line), "%lld,%d,%.12g,%.12g,%.12g,%s\n",
                    static_cast<long long>(batch.init_dates[i]), t + 1, r1, r2, amp,
                    phase_str.c_str());
      out += line;
    }
  }
  return out;
}

void run_gen_synthetic(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  Dataset data = generate_synthetic(cfg.synthetic);
  data.split_fraction = cfg.split_fraction;
  save_dataset(data, out_dir);
  if (cfg.raw.emit_raw) {
    RawSynthetic raw = generate_synthetic_raw(cfg.synthetic, cfg.raw);
    save_raw_synthetic(raw, data, out_dir / "raw");
  }
  cfg.save_resolved(out_dir);
}

void run_preprocess(const RunConfig& cfg, const std::filesystem::path& raw_dir,
                    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto manifest_path = raw_dir / "raw_manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DataError("raw manifest not found: " + manifest_path.string());
  json manifest;
  in >> manifest;

  HistoryCube history;
  {
    ArtifactReader r(raw_dir / manifest.at("history").get<std::string>(), "MJOH");
    const auto& g = r.data("grid");
    history.grid.n_lat = static_cast<int>(g[0]);
    history.grid.n_lon = static_cast<int>(g[1]);
    history.grid.lat_start_deg = g[2];
    history.grid.lat_step_deg = g[3];
    history.grid.lon_start_deg = g[4];
    history.grid.lon_step_deg = g[5];
    history.start_day = static_cast<std::int64_t>(r.scalar("start_day"));
    history.n_days = static_cast<int>(r.scalar("n_days"));
    history.values = r.data("values");
    history.validate();
  }

  // Climatology from the observation history, then anomalies and the
  // 120-day filter for both observations and forecasts.
  Climatology clim = fit_climatology(history);
  clim.save(out_dir / "climatology.mjoc");
  HistoryCube obs_anom = subtract_climatology(history, clim);
  HistoryCube obs_filtered = remove_lowfreq(obs_anom);

  Dataset data;
  data.split_fraction = manifest.at("split_fraction").get<double>();
  for (const auto& entry : manifest.at("cases")) {
    ForecastCase c;
    c.init_date = entry.at("init_date").get<std::int64_t>();
    AnomalyField raw_fc = read_grid_file(raw_dir / entry.at("forecast").get<std::string>());
    AnomalyField fc_anom = subtract_climatology(raw_fc, clim);
    c.forecast = remove_lowfreq(fc_anom, obs_anom);

    // Verifying truth: the filtered observation series over the valid days.
    c.truth = AnomalyField::zeros(history.grid, raw_fc.n_leads, c.init_date);
    for (int v = 0; v < kNumVars; ++v)
      for (int lead = 0; lead < raw_fc.n_leads; ++lead) {
        const std::int64_t valid = c.init_date + lead + 1;
        const int d = static_cast<int>(valid - obs_filtered.start_day);
        if (d < 0 || d >= obs_filtered.n_days)
          throw DataError("preprocess: history does not cover valid day of case");
        for (int lat = 0; lat < history.grid.n_lat; ++lat)
          for (int lon = 0; lon < history.grid.n_lon; ++lon)
            c.truth.at(v, lead, lat, lon) = obs_filtered.at(v, d, lat, lon);
      }
    data.cases.push_back(std::move(c));
  }

  // Standardization statistics come from the training split only.
  Split split = chronological_split(data);
  std::vector<const AnomalyField*> train_fc, train_tr;
  for (const auto& c : split.train) {
    train_fc.push_back(&c.forecast);
    train_tr.push_back(&c.truth);
  }
  zscore_fit(train_fc).save(out_dir / "zscore_forecast.mjoz");
  zscore_fit(train_tr).save(out_dir / "zscore_truth.mjoz");

  save_dataset(data, out_dir);
  cfg.save_resolved(out_dir);
}

void run_fit_eof(const RunConfig& cfg, const std::filesystem::path& data_dir,
                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  Dataset data = load_dataset(data_dir);
  data.split_fraction = cfg.split_fraction;
  Split split = chronological_split(data);
  std::vector<const AnomalyField*> truths;
  for (const auto& c : split.train) truths.push_back(&c.truth);
  EofBasis basis = fit_eof(truths, cfg.band);
  basis.save(out_dir / "basis.mjoe");

  char buf[160];
  std::snprintf(buf, sizeof(buf), "explained_var1,explained_var2\n%.12g,%.12g\n",
                basis.explained_var1, basis.explained_var2);
  write_csv(out_dir / "explained_variance.csv", buf);
  cfg.save_resolved(out_dir);
}

void run_train(const RunConfig& cfg, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  Dataset data = load_dataset(data_dir);
  data.split_fraction = cfg.split_fraction;
  Split split = chronological_split(data);
  TrainConfig train_cfg = cfg.train;
  if (train_cfg.seed == 0) train_cfg.seed = cfg.seed;
  CorrectorModel model = train(split.train, cfg.unet, train_cfg, cfg.band);
  save_model(model, out_dir / "model.mjow");
  write_csv(out_dir / "loss.csv", model.loss_csv());
  const auto counts = count_parameters(model);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "unet_parameters,lstm_parameters\n%lld,%lld\n",
                static_cast<long long>(counts.unet), static_cast<long long>(counts.lstm));
  write_csv(out_dir / "parameters.csv", buf);
  cfg.save_resolved(out_dir);
}

void run_correct(const RunConfig& cfg, const std::filesystem::path& model_path,
                 const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
                 bool all_cases) {
  std::filesystem::create_directories(out_dir);
  CorrectorModel model = load_model_checked(model_path);
  Dataset data = load_dataset(data_dir);
  data.split_fraction = cfg.split_fraction;
  Split split = chronological_split(data);
  std::span<const ForecastCase> cases = all_cases ? std::span<const ForecastCase>(data.cases)
                                                  : split.test;

  EvalBatches ev = evaluate_cases(model, cases);
  std::vector<const AnomalyField*> fc;
  for (const auto& c : cases) fc.push_back(&c.forecast);
  auto corrections = correct_batch(model, fc);
  for (std::size_t i = 0; i < corrections.size(); ++i)
    write_grid_file(corrections[i].corrected, out_dir / case_file(static_cast<int>(i), "corr"));

  write_csv(out_dir / "rmm_corrected.csv", rmm_batch_csv(ev.corrected));
  write_csv(out_dir / "rmm_preliminary.csv", rmm_batch_csv(ev.preliminary));
  write_csv(out_dir / "rmm_raw.csv", rmm_batch_csv(ev.raw));
  write_csv(out_dir / "rmm_observed.csv", rmm_batch_csv(ev.observed));
  cfg.save_resolved(out_dir);
}

void run_verify(const RunConfig& cfg, const std::filesystem::path& model_path,
                const std::filesystem::path& data_dir, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  CorrectorModel model = load_model_checked(model_path);
  Dataset data = load_dataset(data_dir);
  data.split_fraction = cfg.split_fraction;
  Split split = chronological_split(data);

  EvalBatches test = evaluate_cases(model, split.test);
  SkillReport report = make_skill_report(test.observed, test.raw, test.corrected);
  write_csv(out_dir / "skill.csv", report.to_csv());
  atomic_write_text(out_dir / "skill.svg", svg::skill_curves(report, "RMM bivariate correlation"));
  atomic_write_text(out_dir / "errors.svg", svg::error_curves(report, "RMM error metrics"));

  if (cfg.verify.include_baseline) {
    EvalBatches tr = evaluate_cases(model, split.train);
    LinearBaseline lb = fit_linear_baseline(tr.observed, tr.raw);
    RmmBatch base_test = apply_linear_baseline(lb, test.raw);
    std::string csv = "lead,cor_baseline,cor_corrected\n";
    char line[96];
    for (int t = 0; t < test.observed.n_leads; ++t) {
      std::snprintf(line, sizeof(line), "%d,%.12g,%.12g\n", t + 1,
                    cor(test.observed, base_test, t), report.cor_corr[t]);
      csv += line;
    }
    write_csv(out_dir / "baseline.csv", csv);
  }
  cfg.save_resolved(out_dir);
}

void run_composite(const RunConfig& cfg, const std::filesystem::path& model_path,
                   const std::filesystem::path& data_dir, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  CorrectorModel model = load_model_checked(model_path);
  Dataset data = load_dataset(data_dir);
  data.split_fraction = cfg.split_fraction;
  Split split = chronological_split(data);
  EvalBatches test = evaluate_cases(model, split.test);
  auto comps = phase_composites(test.observed, test.raw, test.corrected);

  std::string csv = "phase,n,lead,obs1,obs2,raw1,raw2,corr1,corr2\n";
  char line[224];
  for (const auto& g : comps) {
    if (g.missing) continue;
    for (std::size_t t = 0; t < g.obs1.size(); ++t) {
      std::snprintf(line, sizeof(line), "%d,%d,%zu,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", g.phase,
                    g.n_cases, t + 1, g.obs1[t], g.obs2[t], g.raw1[t], g.raw2[t], g.corr1[t],
                    g.corr2[t]);
      csv += line;
    }
  }
  write_csv(out_dir / "composites.csv", csv);
  atomic_write_text(out_dir / "phase_wheel.svg",
                    svg::phase_wheel(comps, "Composite RMM trajectories by initial phase"));
  cfg.save_resolved(out_dir);
}

void run_hovmoller(const RunConfig& cfg, const std::filesystem::path& model_path,
                   const std::filesystem::path& data_dir, int test_case_index,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  CorrectorModel model = load_model_checked(model_path);
  Dataset data = load_dataset(data_dir);
  data.split_fraction = cfg.split_fraction;
  Split split = chronological_split(data);
  if (test_case_index < 0 || test_case_index >= static_cast<int>(split.test.size()))
    throw DataError("hovmoller: test case index out of range");
  const ForecastCase& c = split.test[test_case_index];
  CorrectionResult corr = correct(model, c.forecast);

  const auto obs = hovmoller(c.truth, model.band);
  const auto raw = hovmoller(c.forecast, model.band);
  const auto cor_h = hovmoller(corr.corrected, model.band);

  std::string csv = "source,var,lead,lon_idx,value\n";
  char line[128];
  auto emit = [&](const char* src, const std::array<HovmollerMatrix, kNumVars>& hm) {
    for (int v = 0; v < kNumVars; ++v)
      for (int t = 0; t < hm[v].n_leads; ++t)
        for (int lon = 0; lon < hm[v].n_lon; ++lon) {
          std::snprintf(line, sizeof(line), "%s,%s,%d,%d,%.12g\n", src, var_name(v), t + 1, lon,
                        hm[v].at(t, lon));
          csv += line;
        }
  };
  emit("observed", obs);
  emit("raw", raw);
  emit("corrected", cor_h);
  write_csv(out_dir / "hovmoller.csv", csv);

  // OLR panels, observed first so PCC annotations are relative to it.
  std::vector<HovmollerMatrix> panels = {obs[0], raw[0], cor_h[0]};
  atomic_write_text(out_dir / "hovmoller.svg",
                    svg::hovmoller_panel(panels, {"observed OLR", "raw OLR", "corrected OLR"},
                                         "Equatorial OLR anomalies"));
  std::snprintf(line, sizeof(line), "pcc_raw,pcc_corrected\n%.12g,%.12g\n",
                pattern_cc(obs[0], raw[0]), pattern_cc(obs[0], cor_h[0]));
  write_csv(out_dir / "pcc.csv", line);
  cfg.save_resolved(out_dir);
}

void run_stratify(const RunConfig& cfg, const std::filesystem::path& model_path,
                  const std::filesystem::path& data_dir, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  CorrectorModel model = load_model_checked(model_path);
  Dataset data = load_dataset(data_dir);
  data.split_fraction = cfg.split_fraction;
  Split split = chronological_split(data);
  EvalBatches test = evaluate_cases(model, split.test);
  StratifiedSkill strat =
      stratified_skill(test.observed, test.raw, test.corrected, cfg.verify.min_stratum_samples);
  write_csv(out_dir / "stratified.csv", strat.to_csv());
  atomic_write_text(out_dir / "stratified_phase.svg",
                    svg::stratified_heatmap(strat, true, "Skill change by initial phase"));
  atomic_write_text(out_dir / "stratified_month.svg",
                    svg::stratified_heatmap(strat, false, "Skill change by initial month"));
  cfg.save_resolved(out_dir);
}

void run_attribute(const RunConfig& cfg, const std::filesystem::path& model_path,
                   const std::filesystem::path& data_dir, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  CorrectorModel model = load_model_checked(model_path);
  Dataset data = load_dataset(data_dir);
  data.split_fraction = cfg.split_fraction;
  Split split = chronological_split(data);

  const int n_samples = std::min<int>(cfg.attribution.n_samples, static_cast<int>(split.test.size()));
  if (n_samples < 1) throw DataError("attribute: no test cases");

  std::string congruence_csv = "target,congruence,n_samples,target_lead,steps\n";
  for (RmmTarget target : {RmmTarget::Rmm1, RmmTarget::Rmm2}) {
    std::vector<AttributionMap> maps;
    for (int i = 0; i < n_samples; ++i) {
      const auto& c = split.test[i];
      AttributionMap m = integrated_gradients(model, c.forecast, target,
                                              cfg.attribution.target_lead, cfg.attribution.steps);
      // Aligning by the sign of the attributed output keeps opposite MJO
      // phases from cancelling in the composite.
      if (cfg.attribution.align_by_sign && m.output_at_input < 0.0) m = flip_map(m);
      maps.push_back(std::move(m));
    }
    AttributionMap comp = composite_attributions(maps, target);
    const std::string tag = target == RmmTarget::Rmm1 ? "rmm1" : "rmm2";
    comp.save(out_dir / ("attribution_" + tag + ".mjoa"));

    const auto profile = meridional_attribution(comp, model.band);
    std::string csv = "var,lon_idx,value\n";
    char line[96];
    for (int v = 0; v < kNumVars; ++v)
      for (int lon = 0; lon < comp.grid.n_lon; ++lon) {
        std::snprintf(line, sizeof(line), "%s,%d,%.12g\n", var_name(v), lon,
                      profile[static_cast<std::size_t>(v) * comp.grid.n_lon + lon]);
        csv += line;
      }
    write_csv(out_dir / ("attribution_profile_" + tag + ".csv"), csv);

    const double congruence = eof_congruence(profile, model.basis, target);
    char cl[128];
    std::snprintf(cl, sizeof(cl), "%s,%.12g,%d,%d,%d\n", tag.c_str(), congruence, n_samples,
                  cfg.attribution.target_lead, cfg.attribution.steps);
    congruence_csv += cl;
  }
  write_csv(out_dir / "congruence.csv", congruence_csv);
  cfg.save_resolved(out_dir);
}

void run_ablate(const RunConfig& cfg, const std::filesystem::path& data_dir,
                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  Dataset data = load_dataset(data_dir);
  data.split_fraction = cfg.split_fraction;
  Split split = chronological_split(data);

  struct Variant {
    std::string name;
    UNetConfig unet;
    TrainStage stage;
  };
  std::vector<Variant> variants;
  variants.push_back({"tuned-kernels", cfg.unet, TrainStage::Cascade});
  {
    UNetConfig flat = cfg.unet;
    for (auto& k : flat.spatial_kernels) k = {3, 3};
    variants.push_back({"uniform-spatial-3x3", flat, TrainStage::Cascade});
  }
  {
    UNetConfig flat = cfg.unet;
    for (auto& k : flat.temporal_kernels) k = 3;
    variants.push_back({"uniform-temporal-3", flat, TrainStage::Cascade});
  }
  variants.push_back({"stage1-only", cfg.unet, TrainStage::Stage1});
  variants.push_back({"stage2-only", cfg.unet, TrainStage::Stage2});

  std::vector<std::vector<double>> curves;
  std::vector<std::string> labels;
  std::string csv = "variant,lead,cor\n";
  char line[128];
  for (const auto& v : variants) {
    TrainConfig tc = cfg.train;
    if (tc.seed == 0) tc.seed = cfg.seed;
    tc.stage = v.stage;
    CorrectorModel model = train(split.train, v.unet, tc, cfg.band);
    EvalBatches test = evaluate_cases(model, split.test);
    std::vector<double> curve;
    for (int t = 0; t < test.observed.n_leads; ++t) {
      curve.push_back(cor(test.observed, test.corrected, t));
      std::snprintf(line, sizeof(line), "%s,%d,%.12g\n", v.name.c_str(), t + 1, curve.back());
      csv += line;
    }
    curves.push_back(std::move(curve));
    labels.push_back(v.name);
  }
  write_csv(out_dir / "ablation.csv", csv);
  atomic_write_text(out_dir / "ablation.svg",
                    svg::ablation_curves(curves, labels, "Kernel-schedule and stage ablations"));
  cfg.save_resolved(out_dir);
}

}  // namespace mjo
