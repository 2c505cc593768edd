// mjoc: command-line front end for the MJO forecast corrector pipeline.
//
// Subcommands mirror the pipeline stages: gen-synthetic, preprocess,
// fit-eof, train, correct, verify, composite, hovmoller, stratify,
// attribute, ablate. Every command takes a JSON config (strict schema)
// plus flag overrides, writes its outputs atomically, and leaves a
// resolved config snapshot beside them.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "mjo/config.hpp"
#include "mjo/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

mjo::RunConfig resolve_config(const CommonArgs& args) {
  mjo::RunConfig cfg =
      args.config_path.empty() ? mjo::RunConfig::defaults() : mjo::RunConfig::load(args.config_path);
  if (args.seed) {
    cfg.seed = *args.seed;
    cfg.synthetic.rng_seed = *args.seed;
    cfg.train.seed = *args.seed;
  }
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  cfg.validate();
  return cfg;
}

fs::path output_root(const mjo::RunConfig& cfg) {
  fs::path out = cfg.out_dir;
  if (out.is_relative()) {
    if (const char* root = std::getenv("MJO_OUT_ROOT")) out = fs::path(root) / out;
  }
  return out;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "Override every RNG seed in the config");
  cmd->add_option("--out", args.out_dir, "Output directory (overrides config out_dir)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MJO forecast corrector pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string data_dir, raw_dir, model_path;
  int case_index = 0;
  bool all_cases = false;

  auto* gen = app.add_subcommand("gen-synthetic", "Generate the synthetic forecast dataset");
  add_common(gen, args);

  auto* prep = app.add_subcommand("preprocess", "Climatology, filtering and standardization");
  add_common(prep, args);
  prep->add_option("--raw", raw_dir, "Raw synthetic directory")->required();

  auto* eof = app.add_subcommand("fit-eof", "Fit the combined EOF basis on training truth");
  add_common(eof, args);
  eof->add_option("--data", data_dir, "Dataset directory")->required();

  auto* tr = app.add_subcommand("train", "Train the cascaded corrector");
  add_common(tr, args);
  tr->add_option("--data", data_dir, "Dataset directory")->required();

  auto* corr = app.add_subcommand("correct", "Apply a trained model");
  add_common(corr, args);
  corr->add_option("--data", data_dir, "Dataset directory")->required();
  corr->add_option("--model", model_path, "Model checkpoint (.mjow)")->required();
  corr->add_flag("--all", all_cases, "Correct every case, not only the test split");

  auto* ver = app.add_subcommand("verify", "Skill metrics and significance");
  add_common(ver, args);
  ver->add_option("--data", data_dir, "Dataset directory")->required();
  ver->add_option("--model", model_path, "Model checkpoint (.mjow)")->required();

  auto* comp = app.add_subcommand("composite", "Phase-space composite trajectories");
  add_common(comp, args);
  comp->add_option("--data", data_dir, "Dataset directory")->required();
  comp->add_option("--model", model_path, "Model checkpoint (.mjow)")->required();

  auto* hov = app.add_subcommand("hovmoller", "Longitude-lead diagrams with pattern correlation");
  add_common(hov, args);
  hov->add_option("--data", data_dir, "Dataset directory")->required();
  hov->add_option("--model", model_path, "Model checkpoint (.mjow)")->required();
  hov->add_option("--case", case_index, "Test-split case index");

  auto* strat = app.add_subcommand("stratify", "Skill stratified by initial phase and month");
  add_common(strat, args);
  strat->add_option("--data", data_dir, "Dataset directory")->required();
  strat->add_option("--model", model_path, "Model checkpoint (.mjow)")->required();

  auto* attr = app.add_subcommand("attribute", "Integrated-gradients attribution and congruence");
  add_common(attr, args);
  attr->add_option("--data", data_dir, "Dataset directory")->required();
  attr->add_option("--model", model_path, "Model checkpoint (.mjow)")->required();

  auto* abl = app.add_subcommand("ablate", "Kernel-schedule and stage ablation sweep");
  add_common(abl, args);
  abl->add_option("--data", data_dir, "Dataset directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const mjo::RunConfig cfg = resolve_config(args);
    const fs::path out = output_root(cfg);
    if (gen->parsed()) mjo::run_gen_synthetic(cfg, out);
    if (prep->parsed()) mjo::run_preprocess(cfg, raw_dir, out);
    if (eof->parsed()) mjo::run_fit_eof(cfg, data_dir, out);
    if (tr->parsed()) mjo::run_train(cfg, data_dir, out);
    if (corr->parsed()) mjo::run_correct(cfg, model_path, data_dir, out, all_cases);
    if (ver->parsed()) mjo::run_verify(cfg, model_path, data_dir, out);
    if (comp->parsed()) mjo::run_composite(cfg, model_path, data_dir, out);
    if (hov->parsed()) mjo::run_hovmoller(cfg, model_path, data_dir, case_index, out);
    if (strat->parsed()) mjo::run_stratify(cfg, model_path, data_dir, out);
    if (attr->parsed()) mjo::run_attribute(cfg, model_path, data_dir, out);
    if (abl->parsed()) mjo::run_ablate(cfg, data_dir, out);
  } catch (const mjo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mjo::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const mjo::ModelError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
