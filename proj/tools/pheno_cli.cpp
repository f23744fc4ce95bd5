// Command-line front end. Builds a JSON run config (config file, then the
// PHENO_SEED environment variable, then flags) and hands it to the C API.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pheno/pheno.h"

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> manifest;
  std::optional<std::string> scheme;
  std::optional<std::string> subset;
  std::optional<int> workers;
  std::optional<int> plots;
  std::optional<std::string> split;
  std::optional<std::string> encoded;
  std::optional<std::string> checkpoint;
  std::vector<std::string> report_dirs;
  bool hierarchical = false;
  std::vector<std::string> study;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<int> batch;
  std::optional<std::string> optimizer;
  std::optional<int> smote_k;
  bool no_balance = false;
  bool augment = false;
  bool print_config = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "JSON run config (flags override it)");
  cmd->add_option("--seed", f.seed, "Run seed (overrides PHENO_SEED and the config)");
  cmd->add_option("-o,--out", f.out, "Output directory");
  cmd->add_option("--workers", f.workers, "Worker threads");
  cmd->add_option("--classes,--scheme", f.scheme, "Class scheme: seven, five, four-first, four-second");
  cmd->add_flag("--print-config", f.print_config, "Print the resolved config and exit");
}

void add_inputs(CLI::App* cmd, Flags& f) {
  cmd->add_option("-m,--manifest", f.manifest, "Manifest CSV");
  cmd->add_option("--subset", f.subset, "Temporal subset: all8, distributed6/4/3, last6/4/3");
  cmd->add_option("--split", f.split, "split.json from ingest (default: recomputed from the seed)");
  cmd->add_option("--encoded", f.encoded, "Directory holding histograms.csv and exg.csv from encode");
}

void add_training(CLI::App* cmd, Flags& f) {
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--lr", f.lr, "Learning rate");
  cmd->add_option("--batch-size", f.batch, "Mini-batch size");
  cmd->add_option("--optimizer", f.optimizer, "adam or sgd");
  cmd->add_option("--smote-k", f.smote_k, "SMOTE neighbours");
  cmd->add_flag("--no-balance", f.no_balance, "Skip SMOTE");
  cmd->add_flag("--augment", f.augment, "Jitter and mask inputs during training");
}

json build_config(const Flags& f) {
  json j = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw std::invalid_argument("cannot read config file " + f.config);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      j = json::parse(ss.str());
    } catch (const json::exception& e) {
      throw std::invalid_argument(f.config + ": " + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument(f.config + ": expected a JSON object");
  }
  if (const char* env = std::getenv("PHENO_SEED"); env && *env) {
    std::uint64_t seed = 0;
    std::size_t used = 0;
    try {
      seed = std::stoull(env, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || env[used] != '\0') throw std::invalid_argument(std::string("PHENO_SEED is not an integer: ") + env);
    j["seed"] = seed;
  }
  auto set = [&](const char* key, const auto& opt) {
    if (opt) j[key] = *opt;
  };
  set("seed", f.seed);
  set("out_dir", f.out);
  set("manifest", f.manifest);
  set("scheme", f.scheme);
  set("subset", f.subset);
  set("workers", f.workers);
  set("plots", f.plots);
  set("split_file", f.split);
  set("encoded_dir", f.encoded);
  set("checkpoint", f.checkpoint);
  set("smote_k", f.smote_k);
  if (!f.report_dirs.empty()) j["report_dirs"] = f.report_dirs;
  if (f.hierarchical) j["hierarchical"] = true;
  if (!f.study.empty()) j["study_modes"] = f.study;
  if (f.no_balance) j["balance"] = false;
  json& train = j["train"];
  if (!train.is_object()) train = json::object();
  if (f.epochs) train["epochs"] = *f.epochs;
  if (f.lr) train["learning_rate"] = *f.lr;
  if (f.batch) train["batch_size"] = *f.batch;
  if (f.optimizer) train["optimizer"] = *f.optimizer;
  if (f.augment) train["augment"] = true;
  return j;
}

int exit_code(pheno_status s) {
  switch (s) {
    case PHENO_OK: return kExitOk;
    case PHENO_ERR_CONFIG:
    case PHENO_ERR_DATA:
    case PHENO_ERR_INVALID_ARGUMENT: return kExitConfig;
    default: return kExitRuntime;
  }
}

void log_line(const char* line, void*) { std::cerr << line << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plot image time-series phenotyping pipeline"};
  app.set_version_flag("--version", std::string(pheno_version()));
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synthesize", "Generate a synthetic cohort (images + manifest)");
  add_common(synth, f);
  synth->add_option("--plots", f.plots, "Number of plots");

  auto* ingest = app.add_subcommand("ingest", "Validate a manifest and write the train/val/test split");
  auto* encode = app.add_subcommand("encode", "Hue histograms, ExG series, contour PNGs and grids");
  auto* analyze = app.add_subcommand("analyze", "Greenness-loss slopes and slope/yield correlation");
  auto* balance = app.add_subcommand("balance", "SMOTE report for the training split");
  auto* train = app.add_subcommand("train", "Train a classifier and evaluate it on the test split");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test split");
  auto* study = app.add_subcommand("subset-study", "Accuracy per temporal subset");
  auto* report = app.add_subcommand("report", "Summarize output directories");
  for (auto* cmd : {ingest, encode, analyze, balance, train, evaluate, study, report}) add_common(cmd, f);
  for (auto* cmd : {ingest, encode, analyze, balance, train, evaluate, study}) add_inputs(cmd, f);
  for (auto* cmd : {balance, train, study}) add_training(cmd, f);

  train->add_flag("--hierarchical", f.hierarchical, "Two-stage super-group model (seven-class only)");
  train->add_option("--subset-study", f.study, "Also run the subset study over these modes (or 'all')");
  study->add_option("--modes", f.study, "Modes to compare (default: all)");
  evaluate->add_option("--checkpoint", f.checkpoint, "model.ckpt from train")->required();
  report->add_option("--from", f.report_dirs, "Directories to summarize (default: the output dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  json config;
  try {
    config = build_config(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  pheno_context* ctx = nullptr;
  if (pheno_context_create(&ctx) != PHENO_OK) {
    std::cerr << "error: cannot create context\n";
    return kExitRuntime;
  }
  pheno_context_set_log(ctx, log_line, nullptr);

  pheno_status status;
  if (f.print_config) {
    const char* resolved = nullptr;
    status = pheno_config_resolve(ctx, config.dump().c_str(), &resolved);
    if (status == PHENO_OK) std::cout << resolved << "\n";
  } else {
    status = pheno_run(ctx, command.c_str(), config.dump().c_str());
  }
  if (status != PHENO_OK) {
    std::cerr << "error (" << pheno_status_string(status) << "): " << pheno_last_error(ctx) << "\n";
  }
  pheno_context_destroy(ctx);
  return exit_code(status);
}
