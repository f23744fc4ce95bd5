#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pheno/contour.hpp"
#include "pheno/datamodel.hpp"
#include "pheno/image.hpp"
#include "pheno/network.hpp"

namespace pheno {

inline constexpr int kFeatureRows = 32;
inline constexpr int kFeatureCols = 64;

struct FeatureVector {
  std::vector<double> values;
  int label = 0;
};

// Grid divided by its maximum and resampled bilinearly to 32 x 64. An
// all-zero grid gives an all-zero vector.
std::vector<double> grid_features(const ContourGrid& grid);

// ---- SMOTE ----

struct SmoteOrigin {
  std::size_t base = 0;      // index into the input
  std::size_t neighbor = 0;  // index into the input
  double lambda = 0.0;
};

struct SmoteResult {
  // Inputs first, verbatim and in input order, then the synthetic rows
  // grouped by ascending label.
  std::vector<FeatureVector> samples;
  // Parallel to samples; empty for originals.
  std::vector<std::optional<SmoteOrigin>> origin;
  // Labels that had a single sample and were padded by duplication.
  std::vector<int> duplicated_labels;

  std::size_t original_count = 0;
};

// Oversamples every class up to the majority count. k is clamped to the
// class size minus one. Throws ConfigError for k < 1.
SmoteResult smote_balance(std::span<const FeatureVector> train, int k_neighbors, std::uint64_t seed);

// ---- augmentation ----

struct AugmentParams {
  double brightness = 0.0;
  double contrast = 0.1;
  double saturation = 0.2;
  double hue = 0.1;  // fraction of the hue circle
  int mask_count = 0;
  int mask_width = 8;
  int mask_height = 4;
};

void validate(const AugmentParams& params);

// Colour jitter (brightness, contrast, saturation, hue; in that order) then
// zeroed rectangles. Throws ConfigError if a mask does not fit the image.
RgbImage augment(const RgbImage& image, const AugmentParams& params, std::uint64_t seed);

// Single-channel variant for feature vectors laid out rows x cols. Only
// brightness and contrast apply; values are clamped to [0, 1].
std::vector<double> augment(std::span<const double> values, int rows, int cols, const AugmentParams& params,
                            std::uint64_t seed);

// ---- training ----

enum class Optimizer { Sgd, Adam };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view text);

struct Hyperparams {
  double learning_rate = 1e-4;
  int batch_size = 32;
  int epochs = 50;
  Optimizer optimizer = Optimizer::Adam;
  bool augment = false;
  AugmentParams augment_params{};
  int workers = 1;
};

void validate(const Hyperparams& h);
void to_json(nlohmann::ordered_json& j, const Hyperparams& h);
void from_json(const nlohmann::ordered_json& j, Hyperparams& h);

struct CurvePoint {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

std::string curve_to_csv(std::span<const CurvePoint> curve);

class Classifier {
 public:
  virtual ~Classifier() = default;
  // Class labels in output order.
  virtual std::vector<int> labels() const = 0;
  // Aligned with labels().
  virtual std::vector<double> predict_proba(std::span<const double> input) const = 0;
  virtual int predict(std::span<const double> input) const = 0;
};

class TrainedModel : public Classifier {
 public:
  TrainedModel() = default;
  TrainedModel(ConvNet net, std::vector<int> labels) : net_(std::move(net)), labels_(std::move(labels)) {}

  std::vector<int> labels() const override { return labels_; }
  std::vector<double> predict_proba(std::span<const double> input) const override;
  // First label with the highest probability.
  int predict(std::span<const double> input) const override;

  const ConvNet& network() const { return net_; }
  ConvNet& network() { return net_; }

  std::uint64_t seed = 0;
  Hyperparams hyper{};
  std::vector<CurvePoint> curve;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;

 private:
  ConvNet net_;
  std::vector<int> labels_;
};

// Mini-batch training on cross-entropy. Inputs must be 32 x 64 feature
// vectors whose labels appear in `labels`. Returns the parameters from the
// epoch with the best validation accuracy (earliest on ties; the last epoch
// when val_set is empty). Throws DivergenceError on a non-finite loss.
TrainedModel train(std::span<const FeatureVector> train_set, std::span<const FeatureVector> val_set,
                   std::vector<int> labels, const Hyperparams& hyper, std::uint64_t seed);

// Accuracy of a classifier's predict() on a labelled set.
double accuracy(const Classifier& model, std::span<const FeatureVector> set, int workers = 1);

// ---- hierarchical ----

// Super-groups of the seven-class scheme.
const std::vector<std::vector<int>>& seven_class_groups();

class HierarchicalModel : public Classifier {
 public:
  std::vector<int> labels() const override;
  // p(label) = p(group) * p(label | group).
  std::vector<double> predict_proba(std::span<const double> input) const override;
  // Stage-1 group, then the stage-2 choice inside it. Single-label groups
  // never consult a stage-2 model.
  int predict(std::span<const double> input) const override;

  std::vector<std::vector<int>> groups;
  TrainedModel stage1;  // labels 1..groups.size()
  // One per group; empty for single-label groups.
  std::vector<std::optional<TrainedModel>> stage2;
};

struct TrainOptions {
  Hyperparams hyper{};
  bool balance = true;
  int smote_k = 5;
};

// SMOTE (when enabled) followed by train().
TrainedModel train_flat(std::span<const FeatureVector> train_set, std::span<const FeatureVector> val_set,
                        int num_classes, const TrainOptions& options, std::uint64_t seed);

// Seven-class labels only. Throws DataError if any label of the scheme is
// absent from the training set.
HierarchicalModel train_hierarchical(std::span<const FeatureVector> train_set,
                                     std::span<const FeatureVector> val_set, const TrainOptions& options,
                                     std::uint64_t seed);

// ---- evaluation ----

class EvalReport {
 public:
  // confusion[true - 1][pred - 1]. top2_hits counts samples whose true label
  // is the prediction or the most probable other label. Throws
  // std::logic_error if the metric invariants do not hold.
  EvalReport(std::vector<std::vector<std::size_t>> confusion, std::size_t top2_hits);

  int num_classes() const { return static_cast<int>(confusion_.size()); }
  const std::vector<std::vector<std::size_t>>& confusion() const { return confusion_; }
  std::size_t total() const { return total_; }
  double accuracy() const { return accuracy_; }
  double adjacent_accuracy() const { return adjacent_accuracy_; }
  double top2_prob_accuracy() const { return top2_accuracy_; }
  // Undefined (nullopt) when the class was never predicted / never present.
  const std::vector<std::optional<double>>& precision() const { return precision_; }
  const std::vector<std::optional<double>>& recall() const { return recall_; }

  nlohmann::ordered_json to_json() const;
  std::string confusion_csv() const;

 private:
  std::vector<std::vector<std::size_t>> confusion_;
  std::size_t total_ = 0;
  double accuracy_ = 0.0;
  double adjacent_accuracy_ = 0.0;
  double top2_accuracy_ = 0.0;
  std::vector<std::optional<double>> precision_;
  std::vector<std::optional<double>> recall_;
};

// Labels must lie in 1..num_classes. Throws DataError for an empty test set.
EvalReport evaluate(const Classifier& model, std::span<const FeatureVector> test_set, int num_classes,
                    int workers = 1);

// ---- temporal subset study ----

struct StudyPlot {
  std::string plot_id;
  int label = 0;
  std::vector<HueHistogram> histograms;  // all 8 acquisitions
};

struct StudyRow {
  SubsetMode mode = SubsetMode::All8;
  int timepoints = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

// One flat model per mode, all sharing the split, options and seed.
std::vector<StudyRow> subset_study(std::span<const StudyPlot> plots, const DatasetSplit& split,
                                   std::span<const SubsetMode> modes, int num_classes,
                                   const TrainOptions& options, std::uint64_t seed);

std::string study_to_csv(std::span<const StudyRow> rows);

}  // namespace pheno
