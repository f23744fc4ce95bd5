#include "pheno/pipeline.hpp"

#include <iostream>
#include <map>
#include <unordered_map>

#include "pheno/checkpoint.hpp"
#include "pheno/contour.hpp"
#include "pheno/errors.hpp"
#include "pheno/parallel.hpp"
#include "pheno/phenostats.hpp"
#include "pheno/rng.hpp"
#include "pheno/textio.hpp"

namespace pheno {

namespace {

using json = nlohmann::ordered_json;

void emit(const Logger& log, const std::string& line) {
  if (log) {
    log(line);
  } else {
    std::cerr << line << "\n";
  }
}

void prepare_out(const RunConfig& c) {
  validate(c);
  fs::create_directories(c.out_dir);
  json j = c;
  write_text_file(c.out_dir / "run_config.json", j.dump(2) + "\n");
}

std::vector<PlotRecord> load_records(const RunConfig& c) {
  if (c.manifest.empty()) throw ConfigError("a manifest path is required");
  return load_manifest(c.manifest);
}

std::vector<PlotRecord> valid_only(std::span<const PlotRecord> records) {
  std::vector<PlotRecord> out;
  for (const auto& r : records) {
    if (r.valid) out.push_back(r);
  }
  return out;
}

std::vector<EncodedPlot> encoded_for(const RunConfig& c, std::span<const PlotRecord> records) {
  return c.encoded_dir.empty() ? encode_records(records, c.workers) : load_encoded(c.encoded_dir, records);
}

DatasetSplit split_for(const RunConfig& c, std::span<const PlotRecord> records, const ClassScheme& scheme) {
  if (!c.split_file.empty()) return split_from_json(read_text_file(c.split_file));
  return split_dataset(valid_only(records), scheme, c.seed);
}

// Labeled plots only, keyed by plot_id.
std::unordered_map<std::string, FeatureVector> features_for(std::span<const EncodedPlot> plots,
                                                            SubsetMode mode, const ClassScheme& scheme,
                                                            int workers) {
  std::vector<FeatureVector> feats(plots.size());
  parallel_for(plots.size(), workers, [&](std::size_t i) {
    const auto& p = plots[i];
    if (!p.record.labeled()) return;
    const auto subset = temporal_subset(mode, p.histograms);
    feats[i].values = grid_features(build_grid(subset, subset_indices(mode)));
    feats[i].label = scheme.label_for_tenths(*p.record.rm_tenths);
  });
  std::unordered_map<std::string, FeatureVector> out;
  for (std::size_t i = 0; i < plots.size(); ++i) {
    if (plots[i].record.labeled()) out.emplace(plots[i].record.plot_id, std::move(feats[i]));
  }
  return out;
}

std::vector<FeatureVector> pick(const std::unordered_map<std::string, FeatureVector>& feats,
                                const std::vector<std::string>& ids) {
  std::vector<FeatureVector> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = feats.find(id);
    if (it == feats.end()) throw DataError("split references plot '" + id + "' which has no usable features");
    out.push_back(it->second);
  }
  return out;
}

TrainOptions options_for(const RunConfig& c) {
  TrainOptions o;
  o.hyper = c.train;
  o.hyper.workers = c.workers;
  o.balance = c.balance;
  o.smote_k = c.smote_k;
  return o;
}

std::vector<SubsetMode> study_modes_for(const RunConfig& c) {
  std::vector<SubsetMode> modes;
  if (c.study_modes.empty()) return all_subset_modes();
  for (const auto& m : c.study_modes) {
    if (m == "all") return all_subset_modes();
    modes.push_back(parse_subset_mode(m));
  }
  return modes;
}

void write_eval(const fs::path& dir, const EvalReport& report, const json& model_info) {
  json j;
  j["model"] = model_info;
  j["metrics"] = report.to_json();
  write_text_file(dir / "eval_report.json", j.dump(2) + "\n");
  write_text_file(dir / "confusion.csv", report.confusion_csv());
}

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

void run_study(const RunConfig& c, std::span<const EncodedPlot> plots, const DatasetSplit& split,
               const ClassScheme& scheme, const Logger& log) {
  std::vector<StudyPlot> study;
  for (const auto& p : plots) {
    if (!p.record.labeled()) continue;
    study.push_back({p.record.plot_id, scheme.label_for_tenths(*p.record.rm_tenths), p.histograms});
  }
  const auto modes = study_modes_for(c);
  const auto rows = subset_study(study, split, modes, scheme.num_classes(), options_for(c), c.seed);
  write_text_file(c.out_dir / "subset_study.csv", study_to_csv(rows));
  for (const auto& r : rows) {
    emit(log, std::string(to_string(r.mode)) + ": train " + format_double(r.train_accuracy) + ", test " +
                  format_double(r.test_accuracy));
  }
}

}  // namespace

// ---- config ----

void validate(const RunConfig& c) {
  ClassScheme::parse(c.scheme);
  parse_subset_mode(c.subset);
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (c.plots < 1) throw ConfigError("plots must be >= 1");
  if (c.smote_k < 1) throw ConfigError("smote_k must be >= 1");
  if (c.out_dir.empty()) throw ConfigError("an output directory is required");
  validate(c.generator);
  validate(c.train);
  for (const auto& m : c.study_modes) {
    if (m != "all") parse_subset_mode(m);
  }
}

void to_json(json& j, const RunConfig& c) {
  std::vector<std::string> dirs;
  for (const auto& d : c.report_dirs) dirs.push_back(d.string());
  j = {
      {"seed", c.seed},
      {"scheme", c.scheme},
      {"subset", c.subset},
      {"workers", c.workers},
      {"plots", c.plots},
      {"generator", c.generator},
      {"manifest", c.manifest.string()},
      {"out_dir", c.out_dir.string()},
      {"split_file", c.split_file.string()},
      {"encoded_dir", c.encoded_dir.string()},
      {"checkpoint", c.checkpoint.string()},
      {"report_dirs", dirs},
      {"train", c.train},
      {"balance", c.balance},
      {"smote_k", c.smote_k},
      {"hierarchical", c.hierarchical},
      {"study_modes", c.study_modes},
  };
}

void from_json(const json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  static const std::vector<std::string> known = {
      "seed",   "scheme",     "subset",      "workers",    "plots", "generator",    "manifest", "out_dir",
      "split_file", "encoded_dir", "checkpoint", "report_dirs", "train", "balance", "smote_k", "hierarchical",
      "study_modes"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown run config key '" + key + "'");
    }
  }
  try {
    const RunConfig d = c;
    c.seed = j.value("seed", d.seed);
    c.scheme = j.value("scheme", d.scheme);
    c.subset = j.value("subset", d.subset);
    c.workers = j.value("workers", d.workers);
    c.plots = j.value("plots", d.plots);
    if (j.contains("generator")) from_json(j.at("generator"), c.generator);
    c.manifest = j.value("manifest", d.manifest.string());
    c.out_dir = j.value("out_dir", d.out_dir.string());
    c.split_file = j.value("split_file", d.split_file.string());
    c.encoded_dir = j.value("encoded_dir", d.encoded_dir.string());
    c.checkpoint = j.value("checkpoint", d.checkpoint.string());
    if (j.contains("report_dirs")) {
      c.report_dirs.clear();
      for (const auto& s : j.at("report_dirs")) c.report_dirs.emplace_back(s.get<std::string>());
    }
    if (j.contains("train")) from_json(j.at("train"), c.train);
    c.balance = j.value("balance", d.balance);
    c.smote_k = j.value("smote_k", d.smote_k);
    c.hierarchical = j.value("hierarchical", d.hierarchical);
    c.study_modes = j.value("study_modes", d.study_modes);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig c;
  from_json(j, c);
  return c;
}

// ---- encoding ----

std::vector<EncodedPlot> encode_records(std::span<const PlotRecord> records, int workers) {
  const auto valid = valid_only(records);
  std::vector<EncodedPlot> out(valid.size());
  parallel_for(valid.size(), workers, [&](std::size_t i) {
    auto& e = out[i];
    e.record = valid[i];
    for (const auto& path : e.record.resolved_timepoints) {
      const auto f = extract_timepoint(read_image(path));
      e.histograms.push_back(f.histogram);
      e.exg.push_back(f.mean_exg);
    }
  });
  return out;
}

std::vector<EncodedPlot> load_encoded(const fs::path& dir, std::span<const PlotRecord> records) {
  std::map<std::string, std::map<int, HueHistogram>> hists;
  std::map<std::string, std::map<int, double>> exg;
  auto lines_of = [](const fs::path& p) {
    if (!fs::exists(p)) throw ConfigError("encoded artifact not found: " + p.string());
    std::vector<std::string> lines;
    std::string text = read_text_file(p);
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      if (end > start) lines.push_back(text.substr(start, end - start));
      start = end + 1;
    }
    return lines;
  };
  const auto hist_lines = lines_of(dir / "histograms.csv");
  for (std::size_t i = 1; i < hist_lines.size(); ++i) {
    const auto f = split_csv_line(hist_lines[i]);
    if (f.size() != 3 + kHueBins) throw DataError("histograms.csv line " + std::to_string(i + 1) + " malformed");
    HueHistogram h;
    h.total_pixels = std::stoull(f[2]);
    for (int b = 0; b < kHueBins; ++b) h.counts[static_cast<std::size_t>(b)] = std::stoull(f[3 + b]);
    hists[f[0]][std::stoi(f[1])] = h;
  }
  const auto exg_lines = lines_of(dir / "exg.csv");
  for (std::size_t i = 1; i < exg_lines.size(); ++i) {
    const auto f = split_csv_line(exg_lines[i]);
    if (f.size() != 3) throw DataError("exg.csv line " + std::to_string(i + 1) + " malformed");
    exg[f[0]][std::stoi(f[1])] = std::stod(f[2]);
  }
  std::vector<EncodedPlot> out;
  for (const auto& r : records) {
    if (!r.valid) continue;
    auto h = hists.find(r.plot_id);
    auto e = exg.find(r.plot_id);
    if (h == hists.end() || e == exg.end()) throw DataError("plot " + r.plot_id + " missing from encoded data");
    EncodedPlot p;
    p.record = r;
    for (const auto& [tp, hist] : h->second) p.histograms.push_back(hist);
    for (const auto& [tp, v] : e->second) p.exg.push_back(v);
    out.push_back(std::move(p));
  }
  return out;
}

// ---- commands ----

void cmd_synthesize(const RunConfig& c, const Logger& log) {
  prepare_out(c);
  const auto& scheme = ClassScheme::parse(c.scheme);
  const auto cohort = generate_cohort(c.plots, scheme, c.generator, c.seed, c.out_dir, c.workers);
  emit(log, "synthesized " + std::to_string(cohort.records.size()) + " plots -> " + cohort.manifest_path.string());
}

void cmd_ingest(const RunConfig& c, const Logger& log) {
  prepare_out(c);
  const auto& scheme = ClassScheme::parse(c.scheme);
  const auto records = load_records(c);
  json report;
  report["manifest"] = c.manifest.string();
  report["scheme"] = std::string(scheme.key());
  report["rows"] = records.size();
  std::size_t valid = 0, labeled = 0;
  std::map<int, std::size_t> counts;
  auto invalid = json::array();
  for (const auto& r : records) {
    if (!r.valid) {
      invalid.push_back({{"plot_id", r.plot_id}, {"reason", r.invalid_reason}});
      continue;
    }
    ++valid;
    if (r.labeled()) {
      ++labeled;
      ++counts[scheme.label_for_tenths(*r.rm_tenths)];
    }
  }
  report["valid"] = valid;
  report["labeled"] = labeled;
  json class_counts = json::object();
  for (const auto& [label, n] : counts) class_counts[std::to_string(label)] = n;
  report["class_counts"] = class_counts;
  report["invalid"] = invalid;
  write_text_file(c.out_dir / "ingest_report.json", report.dump(2) + "\n");
  if (!invalid.empty()) emit(log, std::to_string(invalid.size()) + " manifest rows flagged invalid");

  const auto split = split_dataset(valid_only(records), scheme, c.seed);
  write_text_file(c.out_dir / "split.json", split_to_json(split));
  emit(log, "split: " + std::to_string(split.train_ids.size()) + " train, " + std::to_string(split.val_ids.size()) +
                " val, " + std::to_string(split.test_ids.size()) + " test");
}

void cmd_encode(const RunConfig& c, const Logger& log) {
  prepare_out(c);
  const auto mode = parse_subset_mode(c.subset);
  const auto records = load_records(c);
  const auto plots = encode_records(records, c.workers);

  std::string hist_csv = "plot_id,tp,total";
  for (int b = 0; b < kHueBins; ++b) hist_csv += ",h" + std::to_string(b);
  hist_csv += "\n";
  std::string exg_csv = "plot_id,tp,mean_exg\n";
  for (const auto& p : plots) {
    for (std::size_t t = 0; t < p.histograms.size(); ++t) {
      const auto& h = p.histograms[t];
      hist_csv += csv_field(p.record.plot_id) + "," + std::to_string(t + 1) + "," + std::to_string(h.total_pixels);
      for (auto v : h.counts) hist_csv += "," + std::to_string(v);
      hist_csv += "\n";
      exg_csv += csv_field(p.record.plot_id) + "," + std::to_string(t + 1) + "," + format_double(p.exg[t]) + "\n";
    }
  }
  write_text_file(c.out_dir / "histograms.csv", hist_csv);
  write_text_file(c.out_dir / "exg.csv", exg_csv);

  const std::string scheme_key(ClassScheme::parse(c.scheme).key());
  const auto png_dir = c.out_dir / "contours" / scheme_key / std::string(to_string(mode));
  const auto grid_dir = c.out_dir / "grids" / scheme_key / std::string(to_string(mode));
  std::vector<std::string> summary(plots.size());
  parallel_for(plots.size(), c.workers, [&](std::size_t i) {
    const auto& p = plots[i];
    const auto pheno = make_phenotype(p.histograms, mode);
    write_png(png_dir / (p.record.plot_id + ".png"), pheno.rendered);
    write_text_file(grid_dir / (p.record.plot_id + ".csv"), grid_to_csv(pheno.grid));
    summary[i] = csv_field(p.record.plot_id) + "," + std::to_string(pheno.grid.rows) + "," +
                 (pheno.degenerate ? "1" : "0") + "," + format_double(pheno.grid.discarded_fraction) + "\n";
  });
  std::string summary_csv = "plot_id,rows,degenerate,discarded_fraction\n";
  for (const auto& s : summary) summary_csv += s;
  write_text_file(c.out_dir / "encode_summary.csv", summary_csv);
  emit(log, "encoded " + std::to_string(plots.size()) + " plots (" + std::string(to_string(mode)) + ")");
}

void cmd_analyze(const RunConfig& c, const Logger& log) {
  prepare_out(c);
  const auto& scheme = ClassScheme::parse(c.scheme);
  const auto records = load_records(c);
  if (records.empty()) throw ConfigError("manifest " + c.manifest.string() + " has no rows");
  const auto plots = encoded_for(c, records);

  std::string slope_csv = "plot_id,label,rm_rating,tp_max,tp_min,slope,valid,yield_mth\n";
  std::vector<SlopeObservation> obs;
  for (const auto& p : plots) {
    const auto s = extract_slope(p.exg);
    const int label = p.record.labeled() ? scheme.label_for_tenths(*p.record.rm_tenths) : 0;
    slope_csv += csv_field(p.record.plot_id) + "," + (label ? std::to_string(label) : "") + "," +
                 (p.record.labeled() ? format_double(p.record.rm_rating()) : "") + "," +
                 std::to_string(s.tp_max + 1) + "," + std::to_string(s.tp_min + 1) + "," +
                 (s.valid ? format_double(s.slope) : "") + "," + (s.valid ? "1" : "0") + "," +
                 optional_field(p.record.yield_mth) + "\n";
    if (s.valid && label) obs.push_back({p.record.plot_id, label, s.slope, p.record.yield_mth});
  }
  write_text_file(c.out_dir / "slope_report.csv", slope_csv);

  std::string group_csv = "rm_group,n,mean_slope,sd_slope\n";
  for (const auto& g : slope_by_rm_group(obs)) {
    group_csv += std::to_string(g.label) + "," + std::to_string(g.n) + "," + format_double(g.mean) + "," +
                 format_double(g.sd) + "\n";
  }
  write_text_file(c.out_dir / "slope_by_group.csv", group_csv);

  const bool any_yield = std::any_of(obs.begin(), obs.end(), [](const auto& o) { return o.yield.has_value(); });
  if (!any_yield) {
    emit(log, "notice: no yield values in manifest; correlation step skipped");
    return;
  }
  std::string corr_csv = "scheme,rm_group,n,dropped,r,p_value\n";
  for (const auto& r : slope_yield_correlation(obs)) {
    corr_csv += std::string(scheme.key()) + "," + std::to_string(r.rm_group) + "," + std::to_string(r.n) + "," + std::to_string(r.dropped) + "," +
                optional_field(r.r) + "," + optional_field(r.p_value) + "\n";
  }
  write_text_file(c.out_dir / "correlation_report.csv", corr_csv);
  emit(log, "analyzed " + std::to_string(obs.size()) + " plots with valid slopes");
}

void cmd_balance(const RunConfig& c, const Logger& log) {
  prepare_out(c);
  const auto& scheme = ClassScheme::parse(c.scheme);
  const auto records = load_records(c);
  const auto plots = encoded_for(c, records);
  const auto split = split_for(c, records, scheme);
  const auto feats = features_for(plots, parse_subset_mode(c.subset), scheme, c.workers);
  const auto train = pick(feats, split.train_ids);
  const auto result = smote_balance(train, c.smote_k, derive_seed(c.seed, 7));

  std::map<int, std::pair<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < result.samples.size(); ++i) {
    auto& entry = counts[result.samples[i].label];
    if (i < result.original_count) ++entry.first;
    ++entry.second;
  }
  std::string report = "label,before,after\n";
  for (const auto& [label, n] : counts) {
    report += std::to_string(label) + "," + std::to_string(n.first) + "," + std::to_string(n.second) + "\n";
  }
  write_text_file(c.out_dir / "balance_report.csv", report);

  std::string origin = "row,label,base_plot,neighbor_plot,lambda\n";
  for (std::size_t i = result.original_count; i < result.samples.size(); ++i) {
    const auto& o = *result.origin[i];
    origin += std::to_string(i) + "," + std::to_string(result.samples[i].label) + "," +
              csv_field(split.train_ids[o.base]) + "," + csv_field(split.train_ids[o.neighbor]) + "," +
              format_double(o.lambda) + "\n";
  }
  write_text_file(c.out_dir / "smote_samples.csv", origin);
  for (int label : result.duplicated_labels) {
    emit(log, "warning: class " + std::to_string(label) + " has a single sample; padded by duplication");
  }
  emit(log, "balanced " + std::to_string(result.original_count) + " -> " + std::to_string(result.samples.size()) +
                " training samples");
}

void cmd_train(const RunConfig& c, const Logger& log) {
  prepare_out(c);
  const auto& scheme = ClassScheme::parse(c.scheme);
  const auto mode = parse_subset_mode(c.subset);
  if (c.hierarchical && scheme.name() != SchemeName::SevenClass) {
    throw ConfigError("hierarchical training requires the seven-class scheme");
  }
  const auto records = load_records(c);
  const auto plots = encoded_for(c, records);
  const auto split = split_for(c, records, scheme);
  write_text_file(c.out_dir / "split.json", split_to_json(split));
  const auto feats = features_for(plots, mode, scheme, c.workers);
  const auto train_set = pick(feats, split.train_ids);
  const auto val_set = pick(feats, split.val_ids);
  const auto test_set = pick(feats, split.test_ids);
  const auto options = options_for(c);

  CheckpointMeta meta{std::string(scheme.key()), std::string(to_string(mode)), c.seed, c.train};
  json info{{"kind", c.hierarchical ? "hierarchical" : "flat"},
            {"scheme", meta.scheme},
            {"subset", meta.subset},
            {"seed", c.seed}};
  if (c.hierarchical) {
    const auto model = train_hierarchical(train_set, val_set, options, c.seed);
    save_checkpoint(c.out_dir / "model.ckpt", model, meta);
    write_text_file(c.out_dir / "training_curve.csv", curve_to_csv(model.stage1.curve));
    for (std::size_t g = 0; g < model.stage2.size(); ++g) {
      if (model.stage2[g]) {
        write_text_file(c.out_dir / ("training_curve_stage2_" + std::to_string(g + 1) + ".csv"),
                        curve_to_csv(model.stage2[g]->curve));
      }
    }
    const auto report = evaluate(model, test_set, scheme.num_classes(), c.workers);
    write_eval(c.out_dir, report, info);
    emit(log, "hierarchical test accuracy " + format_double(report.accuracy()));
  } else {
    const auto model = train_flat(train_set, val_set, scheme.num_classes(), options, c.seed);
    save_checkpoint(c.out_dir / "model.ckpt", model, meta);
    write_text_file(c.out_dir / "training_curve.csv", curve_to_csv(model.curve));
    const auto report = evaluate(model, test_set, scheme.num_classes(), c.workers);
    write_eval(c.out_dir, report, info);
    emit(log, "test accuracy " + format_double(report.accuracy()) + ", adjacent " +
                  format_double(report.adjacent_accuracy()) + " (best epoch " + std::to_string(model.best_epoch) +
                  ")");
  }
  if (!c.study_modes.empty()) run_study(c, plots, split, scheme, log);
}

void cmd_evaluate(const RunConfig& c, const Logger& log) {
  prepare_out(c);
  if (c.checkpoint.empty()) throw ConfigError("evaluate needs a checkpoint path");
  const auto ckpt = load_checkpoint(c.checkpoint);
  const auto& scheme = ClassScheme::parse(ckpt.meta.scheme);
  const auto mode = parse_subset_mode(ckpt.meta.subset);
  const auto records = load_records(c);
  const auto plots = encoded_for(c, records);
  const auto split = split_for(c, records, scheme);
  const auto feats = features_for(plots, mode, scheme, c.workers);
  const auto report = evaluate(*ckpt.model, pick(feats, split.test_ids), scheme.num_classes(), c.workers);
  json info{{"kind", ckpt.kind},
            {"scheme", ckpt.meta.scheme},
            {"subset", ckpt.meta.subset},
            {"seed", ckpt.meta.seed},
            {"checkpoint", c.checkpoint.string()}};
  write_eval(c.out_dir, report, info);
  emit(log, "test accuracy " + format_double(report.accuracy()));
}

void cmd_subset_study(const RunConfig& c, const Logger& log) {
  prepare_out(c);
  const auto& scheme = ClassScheme::parse(c.scheme);
  const auto records = load_records(c);
  const auto plots = encoded_for(c, records);
  const auto split = split_for(c, records, scheme);
  run_study(c, plots, split, scheme, log);
}

void cmd_report(const RunConfig& c, const Logger& log) {
  prepare_out(c);
  auto dirs = c.report_dirs;
  if (dirs.empty()) dirs.push_back(c.out_dir);
  auto read_csv = [](const fs::path& p) {
    auto rows = json::array();
    const std::string text = read_text_file(p);
    std::vector<std::string> header;
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const auto fields = split_csv_line(std::string_view(text).substr(start, end - start));
      start = end + 1;
      if (header.empty()) {
        header = fields;
        continue;
      }
      json row;
      for (std::size_t i = 0; i < header.size() && i < fields.size(); ++i) row[header[i]] = fields[i];
      rows.push_back(row);
    }
    return rows;
  };

  json report;
  report["sources"] = json::array();
  std::string md = "# Run report\n";
  for (const auto& dir : dirs) {
    if (!fs::is_directory(dir)) throw ConfigError("report source is not a directory: " + dir.string());
    json src;
    src["dir"] = dir.string();
    md += "\n## " + dir.string() + "\n";
    if (fs::exists(dir / "eval_report.json")) {
      const auto e = json::parse(read_text_file(dir / "eval_report.json"));
      src["evaluation"] = e;
      const auto& m = e.at("metrics");
      md += "\nModel: " + e.at("model").at("kind").get<std::string>() + ", scheme " +
            e.at("model").at("scheme").get<std::string>() + ", subset " +
            e.at("model").at("subset").get<std::string>() + "\n\n";
      md += "| metric | value |\n|---|---|\n";
      for (const char* key : {"accuracy", "adjacent_accuracy", "top2_prob_accuracy"}) {
        md += std::string("| ") + key + " | " + format_double(m.at(key).get<double>()) + " |\n";
      }
    }
    if (fs::exists(dir / "subset_study.csv")) {
      src["subset_study"] = read_csv(dir / "subset_study.csv");
      md += "\n| subset | timepoints | train acc | test acc |\n|---|---|---|---|\n";
      for (const auto& r : src["subset_study"]) {
        md += "| " + r.at("mode").get<std::string>() + " | " + r.at("timepoints").get<std::string>() + " | " +
              r.at("train_accuracy").get<std::string>() + " | " + r.at("test_accuracy").get<std::string>() + " |\n";
      }
    }
    if (fs::exists(dir / "slope_by_group.csv")) src["slope_by_group"] = read_csv(dir / "slope_by_group.csv");
    if (fs::exists(dir / "correlation_report.csv")) {
      src["correlation"] = read_csv(dir / "correlation_report.csv");
      md += "\n| RM group | n | r | p |\n|---|---|---|---|\n";
      for (const auto& r : src["correlation"]) {
        md += "| " + r.at("rm_group").get<std::string>() + " | " + r.at("n").get<std::string>() + " | " +
              r.at("r").get<std::string>() + " | " + r.at("p_value").get<std::string>() + " |\n";
      }
    }
    report["sources"].push_back(src);
  }
  write_text_file(c.out_dir / "report.json", report.dump(2) + "\n");
  write_text_file(c.out_dir / "report.md", md);
  emit(log, "report written for " + std::to_string(dirs.size()) + " source(s)");
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"synthesize", "ingest", "encode",       "analyze", "balance",
                                                 "train",      "evaluate", "subset-study", "report"};
  return names;
}

void run_command(std::string_view name, const RunConfig& c, const Logger& log) {
  if (name == "synthesize") return cmd_synthesize(c, log);
  if (name == "ingest") return cmd_ingest(c, log);
  if (name == "encode") return cmd_encode(c, log);
  if (name == "analyze") return cmd_analyze(c, log);
  if (name == "balance") return cmd_balance(c, log);
  if (name == "train") return cmd_train(c, log);
  if (name == "evaluate") return cmd_evaluate(c, log);
  if (name == "subset-study") return cmd_subset_study(c, log);
  if (name == "report") return cmd_report(c, log);
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

}  // namespace pheno
