#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pheno/datamodel.hpp"
#include "pheno/image.hpp"

namespace pheno {

struct GeneratorConfig {
  int timepoints = 8;
  int width = 60;
  int height = 200;

  // Half-degree hue anchors of the senescence trajectory.
  double hue_green = 85.0;
  double hue_yellow = 35.0;
  double hue_brown = 20.0;

  // Timepoint index (0-based) where decline starts, at RM 1.6 and RM 3.9;
  // linear in between.
  double onset_early = 1.0;
  double onset_late = 5.5;
  double onset_jitter_sd = 0.0;

  // Mean hue change per timepoint at RM 1.6 and RM 3.9 (negative). Later
  // ratings decline more steeply.
  double decline_early = -14.0;
  double decline_late = -22.0;
  double decline_sd = 2.0;

  // Per-pixel Gaussian hue jitter.
  double noise_sd = 3.0;
  double saturation = 0.6;
  double value = 0.6;
  double sv_jitter = 0.03;
  // Canopy brightens toward the onset: value is scaled by (1 - greenup) at
  // t=0, rising linearly to 1 at onset. Hue is unaffected.
  double greenup = 0.15;

  // White padding around each plot image, and soil rows at both ends.
  int border_px = 2;
  double soil_fraction = 0.05;
  double hue_soil = 12.0;

  // yield = base - k * decline_rate + N(0, yield_noise_sd), clamped at 0.
  double yield_base = 3.0;
  double yield_k = 0.1;
  double yield_noise_sd = 0.15;

  int year = 2023;
  std::string field_id = "SYN";
  Generation generation = Generation::F6;
};

// Throws ConfigError for inconsistent parameters.
void validate(const GeneratorConfig& config);

struct SenescenceProfile {
  int rm_tenths = kMinRatingTenths;
  double onset_tp = 0.0;
  double decline_rate = -1.0;
  double hue_green = 85.0;
  double hue_yellow = 35.0;
  double hue_brown = 20.0;
  double noise_sd = 0.0;

  // Flat at green until onset, linear down to brown, then flat.
  double hue_at(double t) const;
  double value_scale_at(double t, double greenup) const;
};

SenescenceProfile profile_for_rating(double rm_rating, const GeneratorConfig& config, std::uint64_t seed);

// One timepoint of a plot. Deterministic in (profile, tp, config, seed).
RgbImage render_timepoint(const SenescenceProfile& profile, int tp, const GeneratorConfig& config,
                          std::uint64_t seed);

// Exact HSV (half-degree hue, s and v in [0,1]) to 8-bit RGB.
Rgb hsv_to_rgb(double hue_half_degrees, double saturation, double value);

struct SyntheticPlot {
  PlotRecord record;
  SenescenceProfile profile;
  std::uint64_t seed = 0;
};

// Plots are spread evenly over the scheme's classes (plot i gets class
// i mod K + 1) with the rating drawn uniformly from that class's ratings.
std::vector<SyntheticPlot> plan_cohort(int n_plots, const ClassScheme& scheme, const GeneratorConfig& config,
                                       std::uint64_t seed);

struct Cohort {
  std::vector<PlotRecord> records;
  std::vector<SenescenceProfile> profiles;
  std::filesystem::path manifest_path;
};

// Writes images/<plot_id>/tpK.png, manifest.csv and generator_config.json
// under out_dir.
Cohort generate_cohort(int n_plots, const ClassScheme& scheme, const GeneratorConfig& config, std::uint64_t seed,
                       const std::filesystem::path& out_dir, int workers = 1);

// Missing keys keep their defaults when reading.
void to_json(nlohmann::ordered_json& j, const GeneratorConfig& config);
void from_json(const nlohmann::ordered_json& j, GeneratorConfig& config);

}  // namespace pheno
