#include "pheno/learn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "pheno/errors.hpp"
#include "pheno/parallel.hpp"
#include "pheno/rng.hpp"
#include "pheno/textio.hpp"

namespace pheno {

std::vector<double> grid_features(const ContourGrid& grid) {
  if (grid.rows <= 0) throw DataError("cannot featurize an empty grid");
  const double peak = grid.max();
  std::vector<double> normalized(grid.counts.size(), 0.0);
  if (peak > 0) {
    for (std::size_t i = 0; i < normalized.size(); ++i) normalized[i] = grid.counts[i] / peak;
  }
  auto out = resize_bilinear(normalized, grid.rows, kContourColumns, kFeatureRows, kFeatureCols);
  for (auto& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

// ---- SMOTE ----

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

void check_lengths(std::span<const FeatureVector> set) {
  for (const auto& f : set) {
    if (f.values.size() != set.front().values.size()) throw DataError("feature vectors differ in length");
  }
}

}  // namespace

SmoteResult smote_balance(std::span<const FeatureVector> train, int k_neighbors, std::uint64_t seed) {
  if (k_neighbors < 1) throw ConfigError("k_neighbors must be >= 1");
  SmoteResult result;
  result.samples.assign(train.begin(), train.end());
  result.origin.assign(train.size(), std::nullopt);
  result.original_count = train.size();
  if (train.empty()) return result;
  check_lengths(train);

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < train.size(); ++i) members[train[i].label].push_back(i);
  std::size_t majority = 0;
  for (const auto& [label, idx] : members) majority = std::max(majority, idx.size());

  for (const auto& [label, idx] : members) {
    const std::size_t deficit = majority - idx.size();
    if (deficit == 0) continue;
    if (idx.size() == 1) {
      result.duplicated_labels.push_back(label);
      for (std::size_t s = 0; s < deficit; ++s) {
        result.samples.push_back(train[idx[0]]);
        result.origin.push_back(SmoteOrigin{idx[0], idx[0], 0.0});
      }
      continue;
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_neighbors), idx.size() - 1);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    std::vector<std::vector<std::size_t>> neighbours(idx.size());
    for (std::size_t s = 0; s < deficit; ++s) {
      const std::size_t b = s % idx.size();
      auto& nn = neighbours[b];
      if (nn.empty()) {
        std::vector<std::pair<double, std::size_t>> d;
        d.reserve(idx.size() - 1);
        for (std::size_t j = 0; j < idx.size(); ++j) {
          if (j != b) d.emplace_back(squared_distance(train[idx[b]].values, train[idx[j]].values), idx[j]);
        }
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
        for (std::size_t j = 0; j < k; ++j) nn.push_back(d[j].second);
      }
      const std::size_t other = nn[rng.below(k)];
      const double lambda = rng.uniform();
      const auto& x = train[idx[b]].values;
      const auto& y = train[other].values;
      FeatureVector f;
      f.label = label;
      f.values.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) f.values[i] = x[i] + lambda * (y[i] - x[i]);
      result.samples.push_back(std::move(f));
      result.origin.push_back(SmoteOrigin{idx[b], other, lambda});
    }
  }
  return result;
}

// ---- augmentation ----

namespace {

struct Hsv {
  double h, s, v;  // h in [0, 1)
};

Hsv to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  Hsv out{0.0, mx > 0 ? d / mx : 0.0, mx};
  if (d > 0) {
    double h;
    if (mx == r) h = std::fmod((g - b) / d, 6.0);
    else if (mx == g) h = (b - r) / d + 2.0;
    else h = (r - g) / d + 4.0;
    h /= 6.0;
    out.h = h < 0 ? h + 1.0 : h;
  }
  return out;
}

void from_hsv(Hsv c, double& r, double& g, double& b) {
  const double h = c.h * 6.0;
  const double chroma = c.v * c.s;
  const double x = chroma * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = c.v - chroma;
  switch (static_cast<int>(h) % 6) {
    case 0: r = chroma; g = x; b = 0; break;
    case 1: r = x; g = chroma; b = 0; break;
    case 2: r = 0; g = chroma; b = x; break;
    case 3: r = 0; g = x; b = chroma; break;
    case 4: r = x; g = 0; b = chroma; break;
    default: r = chroma; g = 0; b = x; break;
  }
  r += m;
  g += m;
  b += m;
}

double jitter_factor(Rng& rng, double amount) {
  return amount > 0 ? rng.uniform(std::max(0.0, 1.0 - amount), 1.0 + amount) : 1.0;
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

struct Rect {
  int x, y;
};

std::vector<Rect> place_masks(Rng& rng, const AugmentParams& p, int width, int height) {
  std::vector<Rect> out;
  if (p.mask_count == 0) return out;
  if (p.mask_width > width || p.mask_height > height) throw ConfigError("mask larger than image");
  for (int i = 0; i < p.mask_count; ++i) {
    const int x = static_cast<int>(rng.below(static_cast<std::size_t>(width - p.mask_width + 1)));
    const int y = static_cast<int>(rng.below(static_cast<std::size_t>(height - p.mask_height + 1)));
    out.push_back({x, y});
  }
  return out;
}

}  // namespace

void validate(const AugmentParams& p) {
  if (p.brightness < 0 || p.contrast < 0 || p.saturation < 0 || p.hue < 0 || p.mask_count < 0) {
    throw ConfigError("augmentation parameters must be non-negative");
  }
  if (p.hue > 0.5) throw ConfigError("hue jitter must be <= 0.5");
  if (p.mask_count > 0 && (p.mask_width < 1 || p.mask_height < 1)) throw ConfigError("mask size must be positive");
}

RgbImage augment(const RgbImage& image, const AugmentParams& params, std::uint64_t seed) {
  validate(params);
  Rng rng(seed);
  const double bf = jitter_factor(rng, params.brightness);
  const double cf = jitter_factor(rng, params.contrast);
  const double sf = jitter_factor(rng, params.saturation);
  const double hs = params.hue > 0 ? rng.uniform(-params.hue, params.hue) : 0.0;
  const auto masks = place_masks(rng, params, image.width(), image.height());

  const auto& src = image.bytes();
  std::vector<double> px(src.begin(), src.end());
  for (auto& v : px) v = std::clamp(v * bf, 0.0, 255.0);
  if (cf != 1.0) {
    double mean = 0.0;
    for (std::size_t i = 0; i < px.size(); i += 3) mean += luma(px[i], px[i + 1], px[i + 2]);
    mean /= static_cast<double>(image.pixel_count());
    for (auto& v : px) v = std::clamp((v - mean) * cf + mean, 0.0, 255.0);
  }
  for (std::size_t i = 0; i < px.size(); i += 3) {
    double r = px[i], g = px[i + 1], b = px[i + 2];
    if (sf != 1.0) {
      const double gray = luma(r, g, b);
      r = std::clamp(gray + (r - gray) * sf, 0.0, 255.0);
      g = std::clamp(gray + (g - gray) * sf, 0.0, 255.0);
      b = std::clamp(gray + (b - gray) * sf, 0.0, 255.0);
    }
    if (hs != 0.0) {
      Hsv c = to_hsv(r / 255.0, g / 255.0, b / 255.0);
      c.h = std::fmod(c.h + hs + 1.0, 1.0);
      from_hsv(c, r, g, b);
      r *= 255.0;
      g *= 255.0;
      b *= 255.0;
    }
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }

  RgbImage out(image.width(), image.height());
  auto& dst = out.bytes();
  for (std::size_t i = 0; i < px.size(); ++i) {
    dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(px[i]), 0L, 255L));
  }
  for (const auto& m : masks) {
    for (int y = m.y; y < m.y + params.mask_height; ++y) {
      for (int x = m.x; x < m.x + params.mask_width; ++x) out.set(x, y, Rgb{0, 0, 0});
    }
  }
  return out;
}

std::vector<double> augment(std::span<const double> values, int rows, int cols, const AugmentParams& params,
                            std::uint64_t seed) {
  validate(params);
  if (rows < 1 || cols < 1 || values.size() != static_cast<std::size_t>(rows) * cols) {
    throw DataError("feature vector does not match rows x cols");
  }
  Rng rng(seed);
  const double bf = jitter_factor(rng, params.brightness);
  const double cf = jitter_factor(rng, params.contrast);
  const auto masks = place_masks(rng, params, cols, rows);

  std::vector<double> out(values.begin(), values.end());
  if (bf != 1.0) {
    for (auto& v : out) v = std::clamp(v * bf, 0.0, 1.0);
  }
  if (cf != 1.0) {
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(out.size());
    for (auto& v : out) v = std::clamp((v - mean) * cf + mean, 0.0, 1.0);
  }
  for (const auto& m : masks) {
    for (int y = m.y; y < m.y + params.mask_height; ++y) {
      std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(y) * cols + m.x, params.mask_width, 0.0);
    }
  }
  return out;
}

// ---- training ----

std::string_view to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

Optimizer parse_optimizer(std::string_view text) {
  if (text == "sgd") return Optimizer::Sgd;
  if (text == "adam") return Optimizer::Adam;
  throw ConfigError("unknown optimizer '" + std::string(text) + "' (expected sgd or adam)");
}

void validate(const Hyperparams& h) {
  if (!(h.learning_rate > 0) || !std::isfinite(h.learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (h.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (h.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (h.workers < 1) throw ConfigError("workers must be >= 1");
  validate(h.augment_params);
}

void to_json(nlohmann::ordered_json& j, const Hyperparams& h) {
  const auto& a = h.augment_params;
  j = {
      {"learning_rate", h.learning_rate},
      {"batch_size", h.batch_size},
      {"epochs", h.epochs},
      {"optimizer", std::string(to_string(h.optimizer))},
      {"augment", h.augment},
      {"augment_params",
       {{"brightness", a.brightness},
        {"contrast", a.contrast},
        {"saturation", a.saturation},
        {"hue", a.hue},
        {"mask_count", a.mask_count},
        {"mask_width", a.mask_width},
        {"mask_height", a.mask_height}}},
  };
}

void from_json(const nlohmann::ordered_json& j, Hyperparams& h) {
  const Hyperparams d = h;
  h.learning_rate = j.value("learning_rate", d.learning_rate);
  h.batch_size = j.value("batch_size", d.batch_size);
  h.epochs = j.value("epochs", d.epochs);
  h.optimizer = parse_optimizer(j.value("optimizer", std::string(to_string(d.optimizer))));
  h.augment = j.value("augment", d.augment);
  if (j.contains("augment_params")) {
    const auto& a = j.at("augment_params");
    auto& p = h.augment_params;
    p.brightness = a.value("brightness", p.brightness);
    p.contrast = a.value("contrast", p.contrast);
    p.saturation = a.value("saturation", p.saturation);
    p.hue = a.value("hue", p.hue);
    p.mask_count = a.value("mask_count", p.mask_count);
    p.mask_width = a.value("mask_width", p.mask_width);
    p.mask_height = a.value("mask_height", p.mask_height);
  }
}

std::string curve_to_csv(std::span<const CurvePoint> curve) {
  std::string out = "epoch,train_loss,val_acc\n";
  for (const auto& p : curve) {
    out += std::to_string(p.epoch) + "," + format_double(p.train_loss) + "," + format_double(p.val_accuracy) + "\n";
  }
  return out;
}

std::vector<double> TrainedModel::predict_proba(std::span<const double> input) const {
  return net_.predict_proba(input);
}

int TrainedModel::predict(std::span<const double> input) const {
  const auto p = predict_proba(input);
  return labels_[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
}

double accuracy(const Classifier& model, std::span<const FeatureVector> set, int workers) {
  if (set.empty()) return 0.0;
  std::vector<char> hit(set.size(), 0);
  parallel_for(set.size(), workers, [&](std::size_t i) { hit[i] = model.predict(set[i].values) == set[i].label; });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(set.size());
}

TrainedModel train(std::span<const FeatureVector> train_set, std::span<const FeatureVector> val_set,
                   std::vector<int> labels, const Hyperparams& hyper, std::uint64_t seed) {
  validate(hyper);
  if (train_set.empty()) throw DataError("training set is empty");
  if (labels.size() < 2) throw ConfigError("need at least 2 classes to train");
  std::unordered_map<int, int> index_of;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!index_of.emplace(labels[i], static_cast<int>(i)).second) throw ConfigError("duplicate class label");
  }
  auto targets_of = [&](std::span<const FeatureVector> set) {
    std::vector<int> t;
    for (const auto& f : set) {
      auto it = index_of.find(f.label);
      if (it == index_of.end()) throw DataError("sample label " + std::to_string(f.label) + " is not a model class");
      t.push_back(it->second);
    }
    return t;
  };
  const auto targets = targets_of(train_set);
  targets_of(val_set);

  NetworkShape shape;
  shape.classes = static_cast<int>(labels.size());
  for (const auto& f : train_set) {
    if (f.values.size() != shape.input_size()) throw DataError("feature vectors must be 32 x 64");
  }

  TrainedModel model(ConvNet(shape, derive_seed(seed, 1)), labels);
  model.seed = seed;
  model.hyper = hyper;
  auto params = model.network().parameters();
  const std::size_t P = params.size();
  std::vector<double> grad(P), m(P, 0.0), v(P, 0.0);
  std::vector<double> best(params.begin(), params.end());
  model.best_val_accuracy = -1.0;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  long step = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = static_cast<std::size_t>(hyper.batch_size);
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    const std::uint64_t aug_seed = derive_seed(seed, 2000 + static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::vector<std::vector<double>> augmented;
      std::vector<std::span<const double>> inputs;
      std::vector<int> batch_targets;
      if (hyper.augment) augmented.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& f = train_set[order[i]];
        if (hyper.augment) {
          augmented.push_back(augment(f.values, shape.input_rows, shape.input_cols, hyper.augment_params,
                                      derive_seed(aug_seed, i)));
          inputs.emplace_back(augmented.back());
        } else {
          inputs.emplace_back(f.values);
        }
        batch_targets.push_back(targets[order[i]]);
      }
      const double loss = model.network().batch_gradient(inputs, batch_targets, grad, hyper.workers);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << ", batch " << start / bs + 1
            << " (learning_rate " << hyper.learning_rate << ")";
        throw DivergenceError(msg.str());
      }
      loss_sum += loss * static_cast<double>(end - start);
      ++step;
      if (hyper.optimizer == Optimizer::Sgd) {
        for (std::size_t p = 0; p < P; ++p) params[p] -= hyper.learning_rate * grad[p];
      } else {
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
        for (std::size_t p = 0; p < P; ++p) {
          m[p] = kBeta1 * m[p] + (1 - kBeta1) * grad[p];
          v[p] = kBeta2 * v[p] + (1 - kBeta2) * grad[p] * grad[p];
          params[p] -= hyper.learning_rate * (m[p] / c1) / (std::sqrt(v[p] / c2) + kEps);
        }
      }
    }
    CurvePoint point{epoch, loss_sum / static_cast<double>(order.size()), 0.0};
    point.val_accuracy = val_set.empty() ? 0.0 : accuracy(model, val_set, hyper.workers);
    model.curve.push_back(point);
    if (val_set.empty() ? epoch == hyper.epochs : point.val_accuracy > model.best_val_accuracy) {
      model.best_val_accuracy = point.val_accuracy;
      model.best_epoch = epoch;
      best.assign(params.begin(), params.end());
    }
  }
  std::copy(best.begin(), best.end(), params.begin());
  return model;
}

// ---- hierarchical ----

const std::vector<std::vector<int>>& seven_class_groups() {
  static const std::vector<std::vector<int>> groups = {{1}, {2, 3}, {4, 5}, {6, 7}};
  return groups;
}

std::vector<int> HierarchicalModel::labels() const {
  std::vector<int> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

std::vector<double> HierarchicalModel::predict_proba(std::span<const double> input) const {
  const auto p1 = stage1.predict_proba(input);
  std::vector<double> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!stage2[g]) {
      out.push_back(p1[g]);
      continue;
    }
    const auto p2 = stage2[g]->predict_proba(input);
    for (double p : p2) out.push_back(p1[g] * p);
  }
  return out;
}

int HierarchicalModel::predict(std::span<const double> input) const {
  const auto g = static_cast<std::size_t>(stage1.predict(input) - 1);
  if (!stage2[g]) return groups[g].front();
  return stage2[g]->predict(input);
}

TrainedModel train_flat(std::span<const FeatureVector> train_set, std::span<const FeatureVector> val_set,
                        int num_classes, const TrainOptions& options, std::uint64_t seed) {
  std::vector<int> labels(static_cast<std::size_t>(num_classes));
  std::iota(labels.begin(), labels.end(), 1);
  if (!options.balance) return train(train_set, val_set, labels, options.hyper, seed);
  const auto balanced = smote_balance(train_set, options.smote_k, derive_seed(seed, 7));
  return train(balanced.samples, val_set, labels, options.hyper, seed);
}

HierarchicalModel train_hierarchical(std::span<const FeatureVector> train_set,
                                     std::span<const FeatureVector> val_set, const TrainOptions& options,
                                     std::uint64_t seed) {
  HierarchicalModel model;
  model.groups = seven_class_groups();
  std::map<int, int> group_of;
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    for (int label : model.groups[g]) group_of[label] = static_cast<int>(g) + 1;
  }
  std::map<int, std::size_t> present;
  for (const auto& f : train_set) {
    if (!group_of.count(f.label)) throw DataError("hierarchical training needs seven-class labels");
    ++present[f.label];
  }
  for (const auto& [label, g] : group_of) {
    if (!present.count(label)) {
      throw DataError("class " + std::to_string(label) + " has no training samples; super-group " +
                      std::to_string(g) + " is incomplete");
    }
  }

  auto regroup = [&](std::span<const FeatureVector> set) {
    std::vector<FeatureVector> out(set.begin(), set.end());
    for (auto& f : out) f.label = group_of.at(f.label);
    return out;
  };
  const auto s1_train = regroup(train_set);
  const auto s1_val = regroup(val_set);
  model.stage1 = train_flat(s1_train, s1_val, static_cast<int>(model.groups.size()), options, derive_seed(seed, 10));

  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    const auto& members = model.groups[g];
    if (members.size() < 2) {
      model.stage2.emplace_back(std::nullopt);
      continue;
    }
    auto in_group = [&](std::span<const FeatureVector> set) {
      std::vector<FeatureVector> out;
      for (const auto& f : set) {
        if (std::find(members.begin(), members.end(), f.label) != members.end()) out.push_back(f);
      }
      return out;
    };
    auto tr = in_group(train_set);
    const auto va = in_group(val_set);
    const std::uint64_t s = derive_seed(seed, 11 + g);
    if (options.balance) tr = smote_balance(tr, options.smote_k, derive_seed(s, 7)).samples;
    model.stage2.emplace_back(train(tr, va, members, options.hyper, s));
  }
  return model;
}

// ---- evaluation ----

EvalReport::EvalReport(std::vector<std::vector<std::size_t>> confusion, std::size_t top2_hits)
    : confusion_(std::move(confusion)) {
  const std::size_t k = confusion_.size();
  if (k == 0) throw std::logic_error("confusion matrix is empty");
  std::size_t trace = 0, adjacent = 0;
  std::vector<std::size_t> col_sum(k, 0);
  for (std::size_t t = 0; t < k; ++t) {
    if (confusion_[t].size() != k) throw std::logic_error("confusion matrix is not square");
    for (std::size_t p = 0; p < k; ++p) {
      const std::size_t c = confusion_[t][p];
      total_ += c;
      col_sum[p] += c;
      if (t == p) trace += c;
      if ((t > p ? t - p : p - t) <= 1) adjacent += c;
    }
  }
  if (total_ == 0) throw std::logic_error("confusion matrix has no samples");
  const double n = static_cast<double>(total_);
  accuracy_ = static_cast<double>(trace) / n;
  adjacent_accuracy_ = static_cast<double>(adjacent) / n;
  top2_accuracy_ = static_cast<double>(top2_hits) / n;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t row = std::accumulate(confusion_[c].begin(), confusion_[c].end(), std::size_t{0});
    precision_.push_back(col_sum[c] ? std::optional(static_cast<double>(confusion_[c][c]) / col_sum[c])
                                    : std::nullopt);
    recall_.push_back(row ? std::optional(static_cast<double>(confusion_[c][c]) / row) : std::nullopt);
  }
  if (top2_hits < trace || top2_hits > total_) throw std::logic_error("top-2 hits inconsistent with confusion");
  if (!(accuracy_ <= adjacent_accuracy_) || !(accuracy_ <= top2_accuracy_)) {
    throw std::logic_error("evaluation metric invariant violated");
  }
  if (k == 2 && adjacent_accuracy_ != 1.0) throw std::logic_error("two-class adjacent accuracy must be 1");
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["num_classes"] = num_classes();
  j["total"] = total_;
  j["accuracy"] = accuracy_;
  j["adjacent_accuracy"] = adjacent_accuracy_;
  j["top2_prob_accuracy"] = top2_accuracy_;
  j["confusion"] = confusion_;
  auto per_class = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < confusion_.size(); ++c) {
    nlohmann::ordered_json row;
    row["label"] = c + 1;
    row["support"] = std::accumulate(confusion_[c].begin(), confusion_[c].end(), std::size_t{0});
    row["precision"] = precision_[c] ? nlohmann::ordered_json(*precision_[c]) : nullptr;
    row["recall"] = recall_[c] ? nlohmann::ordered_json(*recall_[c]) : nullptr;
    per_class.push_back(row);
  }
  j["per_class"] = per_class;
  return j;
}

std::string EvalReport::confusion_csv() const {
  std::string out = "true";
  for (std::size_t p = 0; p < confusion_.size(); ++p) out += ",pred_" + std::to_string(p + 1);
  out += "\n";
  for (std::size_t t = 0; t < confusion_.size(); ++t) {
    out += std::to_string(t + 1);
    for (std::size_t c : confusion_[t]) out += "," + std::to_string(c);
    out += "\n";
  }
  return out;
}

EvalReport evaluate(const Classifier& model, std::span<const FeatureVector> test_set, int num_classes, int workers) {
  if (test_set.empty()) throw DataError("test set is empty");
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  for (const auto& f : test_set) {
    if (f.label < 1 || f.label > num_classes) throw DataError("test label outside 1..K");
  }
  const auto labels = model.labels();
  std::vector<int> pred(test_set.size()), runner_up(test_set.size(), 0);
  parallel_for(test_set.size(), workers, [&](std::size_t i) {
    pred[i] = model.predict(test_set[i].values);
    const auto p = model.predict_proba(test_set[i].values);
    double best = -1.0;
    for (std::size_t c = 0; c < labels.size(); ++c) {
      if (labels[c] != pred[i] && p[c] > best) {
        best = p[c];
        runner_up[i] = labels[c];
      }
    }
  });
  std::vector<std::vector<std::size_t>> confusion(static_cast<std::size_t>(num_classes),
                                                  std::vector<std::size_t>(static_cast<std::size_t>(num_classes), 0));
  std::size_t top2 = 0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    if (pred[i] < 1 || pred[i] > num_classes) throw DataError("model predicted a label outside 1..K");
    ++confusion[static_cast<std::size_t>(test_set[i].label - 1)][static_cast<std::size_t>(pred[i] - 1)];
    if (test_set[i].label == pred[i] || test_set[i].label == runner_up[i]) ++top2;
  }
  return EvalReport(std::move(confusion), top2);
}

// ---- temporal subset study ----

std::vector<StudyRow> subset_study(std::span<const StudyPlot> plots, const DatasetSplit& split,
                                   std::span<const SubsetMode> modes, int num_classes,
                                   const TrainOptions& options, std::uint64_t seed) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < plots.size(); ++i) by_id.emplace(plots[i].plot_id, i);
  auto pick = [&](const std::vector<std::string>& ids, const std::vector<FeatureVector>& all) {
    std::vector<FeatureVector> out;
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw DataError("split references unknown plot " + id);
      out.push_back(all[it->second]);
    }
    return out;
  };

  std::vector<StudyRow> rows;
  for (SubsetMode mode : modes) {
    std::vector<FeatureVector> all(plots.size());
    parallel_for(plots.size(), options.hyper.workers, [&](std::size_t i) {
      const auto subset = temporal_subset(mode, plots[i].histograms);
      all[i].values = grid_features(build_grid(subset, subset_indices(mode)));
      all[i].label = plots[i].label;
    });
    const auto tr = pick(split.train_ids, all);
    const auto va = pick(split.val_ids, all);
    const auto te = pick(split.test_ids, all);
    const auto model = train_flat(tr, va, num_classes, options, seed);
    StudyRow row;
    row.mode = mode;
    row.timepoints = static_cast<int>(subset_indices(mode).size());
    row.train_accuracy = accuracy(model, tr, options.hyper.workers);
    row.test_accuracy = accuracy(model, te, options.hyper.workers);
    rows.push_back(row);
  }
  return rows;
}

std::string study_to_csv(std::span<const StudyRow> rows) {
  std::string out = "mode,timepoints,train_accuracy,test_accuracy\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.mode)) + "," + std::to_string(r.timepoints) + "," +
           format_double(r.train_accuracy) + "," + format_double(r.test_accuracy) + "\n";
  }
  return out;
}

}  // namespace pheno
