#include "pheno/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pheno/errors.hpp"
#include "pheno/parallel.hpp"
#include "pheno/rng.hpp"
#include "pheno/textio.hpp"

namespace pheno {

namespace {

double rating_fraction(double rm_rating) {
  return (rm_rating - kMinRatingTenths / 10.0) / ((kMaxRatingTenths - kMinRatingTenths) / 10.0);
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

}  // namespace

void validate(const GeneratorConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError("generator config: " + what); };
  if (c.timepoints < 3) fail("timepoints must be >= 3");
  if (c.width <= 0 || c.height <= 0) fail("image size must be non-zero in both dimensions");
  if (c.border_px < 0 || 2 * c.border_px >= std::min(c.width, c.height)) fail("border_px leaves no plot area");
  if (!(c.hue_green > c.hue_yellow && c.hue_yellow > c.hue_brown && c.hue_brown >= 0 && c.hue_green < 180)) {
    fail("hues must satisfy 180 > green > yellow > brown >= 0");
  }
  if (c.onset_late < c.onset_early) fail("onset_late must be >= onset_early");
  if (c.decline_early >= 0 || c.decline_late >= 0) fail("decline rates must be negative");
  if (c.decline_sd < 0 || c.noise_sd < 0 || c.onset_jitter_sd < 0 || c.sv_jitter < 0 || c.yield_noise_sd < 0) {
    fail("standard deviations must be non-negative");
  }
  if (c.saturation <= 0 || c.saturation > 1 || c.value <= 0 || c.value > 1) fail("saturation/value must be in (0,1]");
  if (c.soil_fraction < 0 || c.soil_fraction >= 0.5) fail("soil_fraction must be in [0, 0.5)");
  if (c.yield_k < 0) fail("yield_k must be >= 0");
  if (c.greenup < 0 || c.greenup >= 1) fail("greenup must be in [0, 1)");
}

double SenescenceProfile::hue_at(double t) const {
  if (t <= onset_tp) return hue_green;
  return std::max(hue_brown, hue_green + decline_rate * (t - onset_tp));
}

double SenescenceProfile::value_scale_at(double t, double greenup) const {
  if (onset_tp <= 0 || t >= onset_tp) return 1.0;
  return 1.0 - greenup * (onset_tp - std::max(0.0, t)) / onset_tp;
}

SenescenceProfile profile_for_rating(double rm_rating, const GeneratorConfig& config, std::uint64_t seed) {
  const int tenths = rating_to_tenths(rm_rating);
  if (tenths < kMinRatingTenths || tenths > kMaxRatingTenths) {
    throw DataError("rating outside [1.6, 3.9]");
  }
  const double frac = rating_fraction(tenths / 10.0);
  Rng rng(seed);
  SenescenceProfile p;
  p.rm_tenths = tenths;
  p.onset_tp = config.onset_early + frac * (config.onset_late - config.onset_early);
  if (config.onset_jitter_sd > 0) p.onset_tp += rng.normal(0.0, config.onset_jitter_sd);
  const double mean_rate = config.decline_early + frac * (config.decline_late - config.decline_early);
  p.decline_rate = std::min(-0.5, rng.normal(mean_rate, config.decline_sd));
  p.hue_green = config.hue_green;
  p.hue_yellow = config.hue_yellow;
  p.hue_brown = config.hue_brown;
  p.noise_sd = config.noise_sd;
  return p;
}

Rgb hsv_to_rgb(double hue_half_degrees, double saturation, double value) {
  const double h = std::fmod(hue_half_degrees * 2.0, 360.0) / 60.0;
  const double c = value * saturation;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = value - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  return {to_byte(r + m), to_byte(g + m), to_byte(b + m)};
}

RgbImage render_timepoint(const SenescenceProfile& profile, int tp, const GeneratorConfig& config,
                          std::uint64_t seed) {
  RgbImage img(config.width, config.height, Rgb{255, 255, 255});
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(tp)));
  const int x0 = config.border_px, x1 = config.width - config.border_px;
  const int y0 = config.border_px, y1 = config.height - config.border_px;
  const int soil_rows = static_cast<int>(std::lround(config.soil_fraction * (y1 - y0)));
  const double center = profile.hue_at(tp);
  const double vscale = profile.value_scale_at(tp, config.greenup);
  const Rgb soil = hsv_to_rgb(config.hue_soil, 0.35, 0.45);
  for (int y = y0; y < y1; ++y) {
    const bool is_soil = y < y0 + soil_rows || y >= y1 - soil_rows;
    for (int x = x0; x < x1; ++x) {
      if (is_soil) {
        img.set(x, y, soil);
        continue;
      }
      double hue = center;
      double s = config.saturation;
      double v = config.value * vscale;
      if (profile.noise_sd > 0) hue += rng.normal(0.0, profile.noise_sd);
      if (config.sv_jitter > 0) {
        s += rng.normal(0.0, config.sv_jitter);
        v += rng.normal(0.0, config.sv_jitter);
      }
      hue = std::clamp(hue, 0.0, 179.5);
      img.set(x, y, hsv_to_rgb(hue, std::clamp(s, 0.05, 1.0), std::clamp(v, 0.05, 0.97)));
    }
  }
  return img;
}

std::vector<SyntheticPlot> plan_cohort(int n_plots, const ClassScheme& scheme, const GeneratorConfig& config,
                                       std::uint64_t seed) {
  validate(config);
  if (n_plots < 1) throw ConfigError("n_plots must be >= 1");
  const int k = scheme.num_classes();
  std::vector<std::vector<int>> ratings_by_class(static_cast<std::size_t>(k));
  for (int t = kMinRatingTenths; t <= kMaxRatingTenths; ++t) {
    ratings_by_class[static_cast<std::size_t>(scheme.label_for_tenths(t) - 1)].push_back(t);
  }
  char id[32];
  const int width = n_plots >= 10000 ? 5 : 4;
  std::vector<SyntheticPlot> plots;
  plots.reserve(static_cast<std::size_t>(n_plots));
  for (int i = 0; i < n_plots; ++i) {
    SyntheticPlot plot;
    plot.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    Rng rng(derive_seed(plot.seed, 0xC0FFEEULL));
    const auto& ratings = ratings_by_class[static_cast<std::size_t>(i % k)];
    const int tenths = ratings[rng.below(ratings.size())];
    plot.profile = profile_for_rating(tenths / 10.0, config, derive_seed(plot.seed, 1));

    std::snprintf(id, sizeof(id), "SYN_%0*d", width, i + 1);
    PlotRecord& r = plot.record;
    r.plot_id = id;
    r.year = config.year;
    r.field_id = config.field_id;
    r.generation = config.generation;
    r.rm_tenths = tenths;
    const double noise = config.yield_noise_sd > 0 ? rng.normal(0.0, config.yield_noise_sd) : 0.0;
    // Stored at the manifest's 3-decimal precision so in-memory and on-disk
    // records agree.
    const double yield = std::max(0.0, config.yield_base - config.yield_k * plot.profile.decline_rate + noise);
    r.yield_mth = std::round(yield * 1000.0) / 1000.0;
    for (int t = 1; t <= config.timepoints; ++t) {
      r.timepoints.push_back("images/" + r.plot_id + "/tp" + std::to_string(t) + ".png");
    }
    plots.push_back(std::move(plot));
  }
  return plots;
}

Cohort generate_cohort(int n_plots, const ClassScheme& scheme, const GeneratorConfig& config, std::uint64_t seed,
                       const std::filesystem::path& out_dir, int workers) {
  auto plots = plan_cohort(n_plots, scheme, config, seed);
  std::filesystem::create_directories(out_dir);
  parallel_for(plots.size(), workers, [&](std::size_t i) {
    auto& plot = plots[i];
    for (int t = 0; t < config.timepoints; ++t) {
      const auto path = out_dir / plot.record.timepoints[static_cast<std::size_t>(t)];
      write_png(path, render_timepoint(plot.profile, t, config, plot.seed));
      plot.record.resolved_timepoints.push_back(path);
    }
  });

  Cohort cohort;
  for (auto& p : plots) {
    cohort.records.push_back(std::move(p.record));
    cohort.profiles.push_back(p.profile);
  }
  cohort.manifest_path = out_dir / "manifest.csv";
  write_manifest(cohort.manifest_path, cohort.records);

  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["n_plots"] = n_plots;
  j["scheme"] = std::string(scheme.key());
  j["generator"] = config;
  write_text_file(out_dir / "generator_config.json", j.dump(2) + "\n");
  return cohort;
}

void to_json(nlohmann::ordered_json& j, const GeneratorConfig& c) {
  j = {
      {"timepoints", c.timepoints},
      {"width", c.width},
      {"height", c.height},
      {"hue_green", c.hue_green},
      {"hue_yellow", c.hue_yellow},
      {"hue_brown", c.hue_brown},
      {"onset_early", c.onset_early},
      {"onset_late", c.onset_late},
      {"onset_jitter_sd", c.onset_jitter_sd},
      {"decline_early", c.decline_early},
      {"decline_late", c.decline_late},
      {"decline_sd", c.decline_sd},
      {"noise_sd", c.noise_sd},
      {"saturation", c.saturation},
      {"value", c.value},
      {"sv_jitter", c.sv_jitter},
      {"greenup", c.greenup},
      {"border_px", c.border_px},
      {"soil_fraction", c.soil_fraction},
      {"hue_soil", c.hue_soil},
      {"yield_base", c.yield_base},
      {"yield_k", c.yield_k},
      {"yield_noise_sd", c.yield_noise_sd},
      {"year", c.year},
      {"field_id", c.field_id},
      {"generation", std::string(to_string(c.generation))},
  };
}

void from_json(const nlohmann::ordered_json& j, GeneratorConfig& c) {
  const GeneratorConfig d = c;
  c.timepoints = j.value("timepoints", d.timepoints);
  c.width = j.value("width", d.width);
  c.height = j.value("height", d.height);
  c.hue_green = j.value("hue_green", d.hue_green);
  c.hue_yellow = j.value("hue_yellow", d.hue_yellow);
  c.hue_brown = j.value("hue_brown", d.hue_brown);
  c.onset_early = j.value("onset_early", d.onset_early);
  c.onset_late = j.value("onset_late", d.onset_late);
  c.onset_jitter_sd = j.value("onset_jitter_sd", d.onset_jitter_sd);
  c.decline_early = j.value("decline_early", d.decline_early);
  c.decline_late = j.value("decline_late", d.decline_late);
  c.decline_sd = j.value("decline_sd", d.decline_sd);
  c.noise_sd = j.value("noise_sd", d.noise_sd);
  c.saturation = j.value("saturation", d.saturation);
  c.value = j.value("value", d.value);
  c.sv_jitter = j.value("sv_jitter", d.sv_jitter);
  c.greenup = j.value("greenup", d.greenup);
  c.border_px = j.value("border_px", d.border_px);
  c.soil_fraction = j.value("soil_fraction", d.soil_fraction);
  c.hue_soil = j.value("hue_soil", d.hue_soil);
  c.yield_base = j.value("yield_base", d.yield_base);
  c.yield_k = j.value("yield_k", d.yield_k);
  c.yield_noise_sd = j.value("yield_noise_sd", d.yield_noise_sd);
  c.year = j.value("year", d.year);
  c.field_id = j.value("field_id", d.field_id);
  c.generation = parse_generation(j.value("generation", std::string(to_string(d.generation))));
}

}  // namespace pheno
