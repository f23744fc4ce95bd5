#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pheno {

// conv3x3(1 -> c1) tanh avgpool2 -> conv3x3(c1 -> c2) tanh avgpool2 ->
// dense(hidden) tanh -> dense(classes) softmax. Convolutions use zero
// "same" padding. Every stage is smooth, so finite differences agree with
// backprop everywhere.
struct NetworkShape {
  int input_rows = 32;
  int input_cols = 64;
  int conv1_channels = 4;
  int conv2_channels = 8;
  int hidden = 32;
  int classes = 2;

  std::size_t input_size() const { return static_cast<std::size_t>(input_rows) * input_cols; }
  std::size_t flat_size() const {
    return static_cast<std::size_t>(conv2_channels) * (input_rows / 4) * (input_cols / 4);
  }
  std::size_t parameter_count() const;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

// Throws ConfigError for non-positive sizes or input dims not divisible by 4.
void validate(const NetworkShape& shape);

class ConvNet {
 public:
  ConvNet() = default;
  // Glorot-uniform weights, zero biases.
  ConvNet(const NetworkShape& shape, std::uint64_t seed);
  // All parameters zero: the output is uniform for every input.
  static ConvNet zeros(const NetworkShape& shape);

  const NetworkShape& shape() const { return shape_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::vector<double> logits(std::span<const double> input) const;
  std::vector<double> predict_proba(std::span<const double> input) const;

  // Cross-entropy -log p[target] of one sample. The gradient is added into
  // `grad` (same layout as parameters()).
  double backprop(std::span<const double> input, int target, std::span<double> grad) const;

  // Mean loss over the batch; `grad` is overwritten with the mean gradient.
  // Per-sample gradients are reduced in sample order, so the result does not
  // depend on the worker count.
  double batch_gradient(std::span<const std::span<const double>> inputs, std::span<const int> targets,
                        std::span<double> grad, int workers = 1) const;

  double batch_loss(std::span<const std::span<const double>> inputs, std::span<const int> targets) const;

 private:
  struct Layout {
    std::size_t w1, b1, w2, b2, w3, b3, w4, b4, end;
  };
  struct Activations;

  static Layout layout_for(const NetworkShape& shape);
  void forward(std::span<const double> input, Activations& act) const;

  NetworkShape shape_;
  Layout layout_{};
  std::vector<double> params_;
};

std::vector<double> softmax(std::span<const double> logits);

}  // namespace pheno
