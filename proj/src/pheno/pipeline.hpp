#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pheno/datamodel.hpp"
#include "pheno/imageproc.hpp"
#include "pheno/learn.hpp"
#include "pheno/synthgen.hpp"

namespace pheno {

// Everything a command needs. Serialized as run_config.json into every output
// directory; feeding that file back reproduces the run.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string scheme = "seven";
  std::string subset = "all8";
  int workers = 1;

  // synthesize
  int plots = 70;
  GeneratorConfig generator{};

  fs::path manifest;
  fs::path out_dir = "out";
  // Optional inputs: a split.json from `ingest`, a histograms.csv/exg.csv
  // directory from `encode`, a checkpoint for `evaluate`, and the directories
  // `report` summarizes.
  fs::path split_file;
  fs::path encoded_dir;
  fs::path checkpoint;
  std::vector<fs::path> report_dirs;

  Hyperparams train{};
  bool balance = true;
  int smote_k = 5;
  bool hierarchical = false;
  // Modes for the subset study ("all" expands to every mode).
  std::vector<std::string> study_modes;
};

void validate(const RunConfig& config);
void to_json(nlohmann::ordered_json& j, const RunConfig& c);
void from_json(const nlohmann::ordered_json& j, RunConfig& c);
RunConfig load_run_config(const fs::path& path);

// Per-plot encoded timepoints, in manifest order.
struct EncodedPlot {
  PlotRecord record;
  std::vector<HueHistogram> histograms;
  std::vector<double> exg;
};

// Runs the per-timepoint extraction over a bounded pool; results come back in
// input order. Invalid records are skipped.
std::vector<EncodedPlot> encode_records(std::span<const PlotRecord> records, int workers);

// Reads histograms.csv and exg.csv written by `encode`, keyed to `records`.
std::vector<EncodedPlot> load_encoded(const fs::path& dir, std::span<const PlotRecord> records);

// Status lines (notices, summaries) go through this sink; stderr by default.
using Logger = std::function<void(const std::string&)>;

// Each command validates the config, writes run_config.json into out_dir and
// then its artifacts. ConfigError / DataError signal invalid input.
void cmd_synthesize(const RunConfig& c, const Logger& log = {});
void cmd_ingest(const RunConfig& c, const Logger& log = {});
void cmd_encode(const RunConfig& c, const Logger& log = {});
void cmd_analyze(const RunConfig& c, const Logger& log = {});
void cmd_balance(const RunConfig& c, const Logger& log = {});
void cmd_train(const RunConfig& c, const Logger& log = {});
void cmd_evaluate(const RunConfig& c, const Logger& log = {});
void cmd_subset_study(const RunConfig& c, const Logger& log = {});
void cmd_report(const RunConfig& c, const Logger& log = {});

// Dispatch by subcommand name. Throws ConfigError for an unknown name.
void run_command(std::string_view name, const RunConfig& c, const Logger& log = {});
const std::vector<std::string>& command_names();

}  // namespace pheno
