#include "pheno/pheno.h"

#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "pheno/checkpoint.hpp"
#include "pheno/datamodel.hpp"
#include "pheno/errors.hpp"
#include "pheno/imageproc.hpp"
#include "pheno/phenostats.hpp"
#include "pheno/pipeline.hpp"

struct pheno_context {
  std::string last_error;
  std::string scratch;
  pheno_log_fn log = nullptr;
  void* log_user = nullptr;
};

struct pheno_manifest {
  std::vector<pheno::PlotRecord> records;
};

struct pheno_model {
  pheno::LoadedCheckpoint ckpt;
};

namespace {

template <class Fn>
pheno_status guarded(pheno_context* ctx, Fn&& fn) {
  if (!ctx) return PHENO_ERR_INVALID_ARGUMENT;
  ctx->last_error.clear();
  auto fail = [&](pheno_status s, const char* what) {
    ctx->last_error = what;
    return s;
  };
  try {
    return fn();
  } catch (const pheno::ConfigError& e) {
    return fail(PHENO_ERR_CONFIG, e.what());
  } catch (const pheno::DataError& e) {
    return fail(PHENO_ERR_DATA, e.what());
  } catch (const pheno::IoError& e) {
    return fail(PHENO_ERR_IO, e.what());
  } catch (const pheno::DivergenceError& e) {
    return fail(PHENO_ERR_DIVERGED, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(PHENO_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(PHENO_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(PHENO_ERR_RUNTIME, "unknown error");
  }
}

pheno_status invalid(pheno_context* ctx, const char* what) {
  ctx->last_error = what;
  return PHENO_ERR_INVALID_ARGUMENT;
}

pheno::RunConfig parse_config(const char* json_in) {
  pheno::RunConfig c;
  if (!json_in || !*json_in) return c;
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(json_in);
  } catch (const nlohmann::json::exception& e) {
    throw pheno::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  from_json(j, c);
  return c;
}

}  // namespace

extern "C" {

const char* pheno_version(void) { return "0.1.0"; }

const char* pheno_status_string(pheno_status status) {
  switch (status) {
    case PHENO_OK: return "ok";
    case PHENO_ERR_RUNTIME: return "runtime error";
    case PHENO_ERR_CONFIG: return "configuration error";
    case PHENO_ERR_IO: return "i/o error";
    case PHENO_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PHENO_ERR_DIVERGED: return "training diverged";
    case PHENO_ERR_DATA: return "invalid data";
  }
  return "unknown status";
}

pheno_status pheno_context_create(pheno_context** out) {
  if (!out) return PHENO_ERR_INVALID_ARGUMENT;
  *out = new (std::nothrow) pheno_context();
  return *out ? PHENO_OK : PHENO_ERR_RUNTIME;
}

void pheno_context_destroy(pheno_context* ctx) { delete ctx; }

const char* pheno_last_error(const pheno_context* ctx) { return ctx ? ctx->last_error.c_str() : ""; }

void pheno_context_set_log(pheno_context* ctx, pheno_log_fn fn, void* user) {
  if (!ctx) return;
  ctx->log = fn;
  ctx->log_user = user;
}

pheno_status pheno_config_default(pheno_context* ctx, const char** json_out) {
  return guarded(ctx, [&] {
    if (!json_out) return invalid(ctx, "json_out is null");
    nlohmann::ordered_json j = pheno::RunConfig{};
    ctx->scratch = j.dump(2);
    *json_out = ctx->scratch.c_str();
    return PHENO_OK;
  });
}

pheno_status pheno_config_resolve(pheno_context* ctx, const char* json_in, const char** json_out) {
  return guarded(ctx, [&] {
    if (!json_out) return invalid(ctx, "json_out is null");
    const auto c = parse_config(json_in);
    pheno::validate(c);
    nlohmann::ordered_json j = c;
    ctx->scratch = j.dump(2);
    *json_out = ctx->scratch.c_str();
    return PHENO_OK;
  });
}

pheno_status pheno_run(pheno_context* ctx, const char* command, const char* config_json) {
  return guarded(ctx, [&] {
    if (!command) return invalid(ctx, "command is null");
    const auto c = parse_config(config_json);
    pheno::Logger log;
    if (ctx->log) {
      log = [ctx](const std::string& line) { ctx->log(line.c_str(), ctx->log_user); };
    }
    pheno::run_command(command, c, log);
    return PHENO_OK;
  });
}

pheno_status pheno_manifest_load(pheno_context* ctx, const char* path, pheno_manifest** out) {
  return guarded(ctx, [&] {
    if (!path || !out) return invalid(ctx, "null argument");
    auto m = std::make_unique<pheno_manifest>();
    m->records = pheno::load_manifest(path);
    *out = m.release();
    return PHENO_OK;
  });
}

void pheno_manifest_free(pheno_manifest* manifest) { delete manifest; }

size_t pheno_manifest_size(const pheno_manifest* manifest) { return manifest ? manifest->records.size() : 0; }

const char* pheno_manifest_plot_id(const pheno_manifest* manifest, size_t index) {
  if (!manifest || index >= manifest->records.size()) return nullptr;
  return manifest->records[index].plot_id.c_str();
}

int pheno_manifest_rating(const pheno_manifest* manifest, size_t index, double* rating) {
  if (!manifest || index >= manifest->records.size()) return 0;
  const auto& r = manifest->records[index];
  if (!r.labeled()) return 0;
  if (rating) *rating = r.rm_rating();
  return 1;
}

int pheno_manifest_valid(const pheno_manifest* manifest, size_t index) {
  if (!manifest || index >= manifest->records.size()) return 0;
  return manifest->records[index].valid ? 1 : 0;
}

size_t pheno_manifest_timepoints(const pheno_manifest* manifest, size_t index) {
  if (!manifest || index >= manifest->records.size()) return 0;
  return manifest->records[index].timepoints.size();
}

int pheno_rgb_to_hue(uint8_t r, uint8_t g, uint8_t b) { return pheno::rgb_to_hue(r, g, b); }

pheno_status pheno_mean_exg(pheno_context* ctx, const uint8_t* rgb, int width, int height, double* out) {
  return guarded(ctx, [&] {
    if (!rgb || !out || width <= 0 || height <= 0) return invalid(ctx, "need a non-empty raster and output");
    pheno::RgbImage img(width, height);
    std::copy(rgb, rgb + img.bytes().size(), img.bytes().begin());
    *out = pheno::mean_exg(img);
    return PHENO_OK;
  });
}

pheno_status pheno_assign_label(pheno_context* ctx, double rating, const char* scheme, int* label) {
  return guarded(ctx, [&] {
    if (!scheme || !label) return invalid(ctx, "null argument");
    *label = pheno::assign_label(rating, pheno::ClassScheme::parse(scheme));
    return PHENO_OK;
  });
}

pheno_status pheno_extract_slope(pheno_context* ctx, const double* values, size_t n, double* slope, int* tp_max,
                                 int* tp_min, int* valid) {
  return guarded(ctx, [&] {
    if (!values && n > 0) return invalid(ctx, "values is null");
    const auto s = pheno::extract_slope(std::span<const double>(values, n));
    if (slope) *slope = s.slope;
    if (tp_max) *tp_max = s.tp_max;
    if (tp_min) *tp_min = s.tp_min;
    if (valid) *valid = s.valid ? 1 : 0;
    return PHENO_OK;
  });
}

pheno_status pheno_subset_indices(pheno_context* ctx, const char* mode, int* out, size_t capacity, size_t* count) {
  return guarded(ctx, [&] {
    if (!mode) return invalid(ctx, "mode is null");
    const auto idx = pheno::subset_indices(pheno::parse_subset_mode(mode));
    if (count) *count = idx.size();
    for (size_t i = 0; out && i < idx.size() && i < capacity; ++i) out[i] = idx[i];
    return PHENO_OK;
  });
}

pheno_status pheno_model_load(pheno_context* ctx, const char* path, pheno_model** out) {
  return guarded(ctx, [&] {
    if (!path || !out) return invalid(ctx, "null argument");
    auto m = std::make_unique<pheno_model>();
    m->ckpt = pheno::load_checkpoint(path);
    *out = m.release();
    return PHENO_OK;
  });
}

void pheno_model_free(pheno_model* model) { delete model; }

size_t pheno_model_num_labels(const pheno_model* model) {
  return model ? model->ckpt.model->labels().size() : 0;
}

pheno_status pheno_model_predict(pheno_context* ctx, const pheno_model* model, const double* features, size_t n,
                                 int* label, double* probs, size_t probs_capacity) {
  return guarded(ctx, [&] {
    if (!model || !features || !label) return invalid(ctx, "null argument");
    const std::span<const double> x(features, n);
    const auto& clf = *model->ckpt.model;
    *label = clf.predict(x);
    if (probs) {
      const auto labels = clf.labels();
      const auto p = clf.predict_proba(x);
      for (size_t i = 0; i < labels.size(); ++i) {
        const auto slot = static_cast<size_t>(labels[i] - 1);
        if (slot < probs_capacity) probs[slot] = p[i];
      }
    }
    return PHENO_OK;
  });
}

}  // extern "C"
