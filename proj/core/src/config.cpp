#include "mjo/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"
#include "mjo/container.hpp"

namespace mjo {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& known) {
  if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key))
      throw ConfigError("config: unknown key '" + where + (where.empty() ? "" : ".") + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

TrainStage stage_from_string(const std::string& s) {
  if (s == "stage1") return TrainStage::Stage1;
  if (s == "stage2") return TrainStage::Stage2;
  if (s == "cascade") return TrainStage::Cascade;
  throw ConfigError("config: train.stage must be one of stage1|stage2|cascade");
}

std::string stage_to_string(TrainStage s) {
  switch (s) {
    case TrainStage::Stage1: return "stage1";
    case TrainStage::Stage2: return "stage2";
    default: return "cascade";
  }
}

}  // namespace

RunConfig RunConfig::defaults() { return RunConfig{}; }

RunConfig RunConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }

  RunConfig cfg;
  require_keys(root, "",
               {"seed", "out_dir", "split_fraction", "synthetic", "band", "unet", "train",
                "verify", "attribution", "raw"});
  read(root, "seed", cfg.seed);
  read(root, "out_dir", cfg.out_dir);
  read(root, "split_fraction", cfg.split_fraction);

  if (root.contains("synthetic")) {
    const auto& s = root["synthetic"];
    require_keys(s, "synthetic",
                 {"n_cases", "n_leads", "mjo_period_days", "mjo_zonal_wavenumber",
                  "truth_amplitude", "forecast_damping_rate", "forecast_phase_lag_deg_per_day",
                  "noise_sigma", "lat_envelope_sigma_deg", "first_init_date", "init_stride_days",
                  "rng_seed"});
    read(s, "n_cases", cfg.synthetic.n_cases);
    read(s, "n_leads", cfg.synthetic.n_leads);
    read(s, "mjo_period_days", cfg.synthetic.mjo_period_days);
    read(s, "mjo_zonal_wavenumber", cfg.synthetic.mjo_zonal_wavenumber);
    read(s, "truth_amplitude", cfg.synthetic.truth_amplitude);
    read(s, "forecast_damping_rate", cfg.synthetic.forecast_damping_rate);
    read(s, "forecast_phase_lag_deg_per_day", cfg.synthetic.forecast_phase_lag_deg_per_day);
    read(s, "noise_sigma", cfg.synthetic.noise_sigma);
    read(s, "lat_envelope_sigma_deg", cfg.synthetic.lat_envelope_sigma_deg);
    read(s, "first_init_date", cfg.synthetic.first_init_date);
    read(s, "init_stride_days", cfg.synthetic.init_stride_days);
    read(s, "rng_seed", cfg.synthetic.rng_seed);
  }
  if (root.contains("band")) {
    const auto& b = root["band"];
    require_keys(b, "band", {"south_deg", "north_deg"});
    read(b, "south_deg", cfg.band.south_deg);
    read(b, "north_deg", cfg.band.north_deg);
  }
  if (root.contains("unet")) {
    const auto& u = root["unet"];
    require_keys(u, "unet",
                 {"levels", "spatial_kernels", "temporal_kernels", "channels", "pool_factors",
                  "residual"});
    read(u, "levels", cfg.unet.levels);
    if (u.contains("spatial_kernels")) {
      cfg.unet.spatial_kernels.clear();
      for (const auto& k : u["spatial_kernels"])
        cfg.unet.spatial_kernels.push_back({k.at(0).get<int>(), k.at(1).get<int>()});
    }
    if (u.contains("temporal_kernels"))
      cfg.unet.temporal_kernels = u["temporal_kernels"].get<std::vector<int>>();
    if (u.contains("channels")) cfg.unet.channels = u["channels"].get<std::vector<int>>();
    if (u.contains("pool_factors")) {
      cfg.unet.pool_factors.clear();
      for (const auto& p : u["pool_factors"])
        cfg.unet.pool_factors.push_back(
            {p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>()});
    }
    read(u, "residual", cfg.unet.residual);
  }
  if (root.contains("train")) {
    const auto& t = root["train"];
    require_keys(t, "train",
                 {"batch_size", "learning_rate", "max_epochs", "stage", "seed", "stage1_epochs",
                  "stage2_epochs", "early_stop_tol", "finetune_unet_in_stage2", "lstm_hidden",
                  "lstm_residual"});
    read(t, "batch_size", cfg.train.batch_size);
    read(t, "learning_rate", cfg.train.learning_rate);
    read(t, "max_epochs", cfg.train.max_epochs);
    if (t.contains("stage")) cfg.train.stage = stage_from_string(t["stage"].get<std::string>());
    read(t, "seed", cfg.train.seed);
    read(t, "stage1_epochs", cfg.train.stage1_epochs);
    read(t, "stage2_epochs", cfg.train.stage2_epochs);
    read(t, "early_stop_tol", cfg.train.early_stop_tol);
    read(t, "finetune_unet_in_stage2", cfg.train.finetune_unet_in_stage2);
    read(t, "lstm_hidden", cfg.train.lstm_hidden);
    read(t, "lstm_residual", cfg.train.lstm_residual);
  }
  if (root.contains("verify")) {
    const auto& v = root["verify"];
    require_keys(v, "verify", {"min_stratum_samples", "include_baseline"});
    read(v, "min_stratum_samples", cfg.verify.min_stratum_samples);
    read(v, "include_baseline", cfg.verify.include_baseline);
  }
  if (root.contains("attribution")) {
    const auto& a = root["attribution"];
    require_keys(a, "attribution", {"target_lead", "steps", "n_samples", "align_by_sign"});
    read(a, "target_lead", cfg.attribution.target_lead);
    read(a, "steps", cfg.attribution.steps);
    read(a, "n_samples", cfg.attribution.n_samples);
    read(a, "align_by_sign", cfg.attribution.align_by_sign);
  }
  if (root.contains("raw")) {
    const auto& r = root["raw"];
    require_keys(r, "raw", {"emit_raw", "clim_base", "clim_annual_amp", "history_years"});
    read(r, "emit_raw", cfg.raw.emit_raw);
    read(r, "clim_base", cfg.raw.clim_base);
    read(r, "clim_annual_amp", cfg.raw.clim_annual_amp);
    read(r, "history_years", cfg.raw.history_years);
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string RunConfig::to_json_text() const {
  json root;
  root["seed"] = seed;
  root["out_dir"] = out_dir;
  root["split_fraction"] = split_fraction;
  root["synthetic"] = {{"n_cases", synthetic.n_cases},
                       {"n_leads", synthetic.n_leads},
                       {"mjo_period_days", synthetic.mjo_period_days},
                       {"mjo_zonal_wavenumber", synthetic.mjo_zonal_wavenumber},
                       {"truth_amplitude", synthetic.truth_amplitude},
                       {"forecast_damping_rate", synthetic.forecast_damping_rate},
                       {"forecast_phase_lag_deg_per_day", synthetic.forecast_phase_lag_deg_per_day},
                       {"noise_sigma", synthetic.noise_sigma},
                       {"lat_envelope_sigma_deg", synthetic.lat_envelope_sigma_deg},
                       {"first_init_date", synthetic.first_init_date},
                       {"init_stride_days", synthetic.init_stride_days},
                       {"rng_seed", synthetic.rng_seed}};
  root["band"] = {{"south_deg", band.south_deg}, {"north_deg", band.north_deg}};
  json spat = json::array();
  for (const auto& k : unet.spatial_kernels) spat.push_back({k[0], k[1]});
  json pools = json::array();
  for (const auto& p : unet.pool_factors) pools.push_back({p[0], p[1], p[2]});
  root["unet"] = {{"levels", unet.levels},
                  {"spatial_kernels", spat},
                  {"temporal_kernels", unet.temporal_kernels},
                  {"channels", unet.channels},
                  {"pool_factors", pools},
                  {"residual", unet.residual}};
  root["train"] = {{"batch_size", train.batch_size},
                   {"learning_rate", train.learning_rate},
                   {"max_epochs", train.max_epochs},
                   {"stage", stage_to_string(train.stage)},
                   {"seed", train.seed},
                   {"stage1_epochs", train.stage1_epochs},
                   {"stage2_epochs", train.stage2_epochs},
                   {"early_stop_tol", train.early_stop_tol},
                   {"finetune_unet_in_stage2", train.finetune_unet_in_stage2},
                   {"lstm_hidden", train.lstm_hidden},
                   {"lstm_residual", train.lstm_residual}};
  root["verify"] = {{"min_stratum_samples", verify.min_stratum_samples},
                    {"include_baseline", verify.include_baseline}};
  root["attribution"] = {{"target_lead", attribution.target_lead},
                         {"steps", attribution.steps},
                         {"n_samples", attribution.n_samples},
                         {"align_by_sign", attribution.align_by_sign}};
  root["raw"] = {{"emit_raw", raw.emit_raw},
                 {"clim_base", raw.clim_base},
                 {"clim_annual_amp", raw.clim_annual_amp},
                 {"history_years", raw.history_years}};
  return root.dump(2) + "\n";
}

void RunConfig::save_resolved(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  atomic_write_text(dir / "config.resolved.json", to_json_text());
}

void RunConfig::validate() const {
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw ConfigError("config: split_fraction must lie in (0,1)");
  try {
    synthetic.validate();
    unet.validate();
    train.validate();
  } catch (const DataError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (attribution.steps < 16) throw ConfigError("config: attribution.steps must be >= 16");
  if (attribution.n_samples < 1) throw ConfigError("config: attribution.n_samples must be >= 1");
  if (verify.min_stratum_samples < 2)
    throw ConfigError("config: verify.min_stratum_samples must be >= 2");
  if (raw.history_years < 2) throw ConfigError("config: raw.history_years must be >= 2");
}

}  // namespace mjo
