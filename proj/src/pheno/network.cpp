#include "pheno/network.hpp"

#include <algorithm>
#include <cmath>

#include "pheno/errors.hpp"
#include "pheno/parallel.hpp"
#include "pheno/rng.hpp"

namespace pheno {

namespace {

// Visits the output rows/cols for which a 3x3 tap at offset (oy, ox) stays
// inside an rows x cols plane.
struct TapRange {
  int y0, y1, x0, x1;
};

TapRange tap_range(int oy, int ox, int rows, int cols) {
  return {std::max(0, -oy), std::min(rows, rows - oy), std::max(0, -ox), std::min(cols, cols - ox)};
}

void avg_pool2(const double* in, int rows, int cols, double* out) {
  const int orows = rows / 2, ocols = cols / 2;
  for (int y = 0; y < orows; ++y) {
    const double* r0 = in + (2 * y) * cols;
    const double* r1 = r0 + cols;
    double* o = out + y * ocols;
    for (int x = 0; x < ocols; ++x) o[x] = 0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
  }
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::size_t NetworkShape::parameter_count() const {
  const std::size_t c1 = conv1_channels, c2 = conv2_channels, h = hidden, k = classes;
  return c1 * 9 + c1 + c2 * c1 * 9 + c2 + h * flat_size() + h + k * h + k;
}

void validate(const NetworkShape& s) {
  if (s.input_rows <= 0 || s.input_cols <= 0 || s.input_rows % 4 != 0 || s.input_cols % 4 != 0) {
    throw ConfigError("network input dims must be positive multiples of 4");
  }
  if (s.conv1_channels <= 0 || s.conv2_channels <= 0 || s.hidden <= 0) {
    throw ConfigError("network layer sizes must be positive");
  }
  if (s.classes < 2) throw ConfigError("network needs at least 2 classes");
}

struct ConvNet::Activations {
  std::vector<double> a1;  // c1 x R x C (post-tanh)
  std::vector<double> p1;  // c1 x R/2 x C/2
  std::vector<double> a2;  // c2 x R/2 x C/2
  std::vector<double> p2;  // c2 x R/4 x C/4 (flattened dense input)
  std::vector<double> h;   // hidden (post-tanh)
  std::vector<double> out; // logits
};

ConvNet::Layout ConvNet::layout_for(const NetworkShape& s) {
  Layout l{};
  const std::size_t c1 = s.conv1_channels, c2 = s.conv2_channels, h = s.hidden, k = s.classes;
  l.w1 = 0;
  l.b1 = l.w1 + c1 * 9;
  l.w2 = l.b1 + c1;
  l.b2 = l.w2 + c2 * c1 * 9;
  l.w3 = l.b2 + c2;
  l.b3 = l.w3 + h * s.flat_size();
  l.w4 = l.b3 + h;
  l.b4 = l.w4 + k * h;
  l.end = l.b4 + k;
  return l;
}

ConvNet ConvNet::zeros(const NetworkShape& shape) {
  validate(shape);
  ConvNet net;
  net.shape_ = shape;
  net.layout_ = layout_for(shape);
  net.params_.assign(net.layout_.end, 0.0);
  return net;
}

ConvNet::ConvNet(const NetworkShape& shape, std::uint64_t seed) : ConvNet(zeros(shape)) {
  Rng rng(seed);
  auto fill = [&](std::size_t begin, std::size_t end, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = begin; i < end; ++i) params_[i] = rng.uniform(-limit, limit);
  };
  const double c1 = shape.conv1_channels, c2 = shape.conv2_channels;
  fill(layout_.w1, layout_.b1, 9.0, 9.0 * c1);
  fill(layout_.w2, layout_.b2, 9.0 * c1, 9.0 * c2);
  fill(layout_.w3, layout_.b3, static_cast<double>(shape.flat_size()), shape.hidden);
  fill(layout_.w4, layout_.b4, shape.hidden, shape.classes);
}

void ConvNet::forward(std::span<const double> input, Activations& act) const {
  const NetworkShape& s = shape_;
  if (input.size() != s.input_size()) throw DataError("network input has wrong length");
  const int R = s.input_rows, C = s.input_cols, R2 = R / 2, C2 = C / 2;
  const int c1 = s.conv1_channels, c2 = s.conv2_channels;
  const double* w1 = params_.data() + layout_.w1;
  const double* b1 = params_.data() + layout_.b1;
  const double* w2 = params_.data() + layout_.w2;
  const double* b2 = params_.data() + layout_.b2;
  const double* w3 = params_.data() + layout_.w3;
  const double* b3 = params_.data() + layout_.b3;
  const double* w4 = params_.data() + layout_.w4;
  const double* b4 = params_.data() + layout_.b4;

  act.a1.assign(static_cast<std::size_t>(c1) * R * C, 0.0);
  for (int c = 0; c < c1; ++c) {
    double* z = act.a1.data() + static_cast<std::size_t>(c) * R * C;
    std::fill(z, z + R * C, b1[c]);
    for (int k = 0; k < 9; ++k) {
      const int oy = k / 3 - 1, ox = k % 3 - 1;
      const double w = w1[c * 9 + k];
      const auto t = tap_range(oy, ox, R, C);
      for (int y = t.y0; y < t.y1; ++y) {
        const double* src = input.data() + (y + oy) * C + ox;
        double* dst = z + y * C;
        for (int x = t.x0; x < t.x1; ++x) dst[x] += w * src[x];
      }
    }
    for (int i = 0; i < R * C; ++i) z[i] = std::tanh(z[i]);
  }
  act.p1.assign(static_cast<std::size_t>(c1) * R2 * C2, 0.0);
  for (int c = 0; c < c1; ++c) {
    avg_pool2(act.a1.data() + static_cast<std::size_t>(c) * R * C, R, C,
              act.p1.data() + static_cast<std::size_t>(c) * R2 * C2);
  }

  act.a2.assign(static_cast<std::size_t>(c2) * R2 * C2, 0.0);
  for (int d = 0; d < c2; ++d) {
    double* z = act.a2.data() + static_cast<std::size_t>(d) * R2 * C2;
    std::fill(z, z + R2 * C2, b2[d]);
    for (int c = 0; c < c1; ++c) {
      const double* plane = act.p1.data() + static_cast<std::size_t>(c) * R2 * C2;
      for (int k = 0; k < 9; ++k) {
        const int oy = k / 3 - 1, ox = k % 3 - 1;
        const double w = w2[(d * c1 + c) * 9 + k];
        const auto t = tap_range(oy, ox, R2, C2);
        for (int y = t.y0; y < t.y1; ++y) {
          const double* src = plane + (y + oy) * C2 + ox;
          double* dst = z + y * C2;
          for (int x = t.x0; x < t.x1; ++x) dst[x] += w * src[x];
        }
      }
    }
    for (int i = 0; i < R2 * C2; ++i) z[i] = std::tanh(z[i]);
  }
  const int R4 = R2 / 2, C4 = C2 / 2;
  act.p2.assign(static_cast<std::size_t>(c2) * R4 * C4, 0.0);
  for (int d = 0; d < c2; ++d) {
    avg_pool2(act.a2.data() + static_cast<std::size_t>(d) * R2 * C2, R2, C2,
              act.p2.data() + static_cast<std::size_t>(d) * R4 * C4);
  }

  const std::size_t F = s.flat_size();
  act.h.assign(static_cast<std::size_t>(s.hidden), 0.0);
  for (int j = 0; j < s.hidden; ++j) {
    const double* row = w3 + j * F;
    double acc = b3[j];
    for (std::size_t i = 0; i < F; ++i) acc += row[i] * act.p2[i];
    act.h[j] = std::tanh(acc);
  }
  act.out.assign(static_cast<std::size_t>(s.classes), 0.0);
  for (int k = 0; k < s.classes; ++k) {
    double acc = b4[k];
    for (int j = 0; j < s.hidden; ++j) acc += w4[k * s.hidden + j] * act.h[j];
    act.out[k] = acc;
  }
}

std::vector<double> ConvNet::logits(std::span<const double> input) const {
  Activations act;
  forward(input, act);
  return act.out;
}

std::vector<double> ConvNet::predict_proba(std::span<const double> input) const {
  return softmax(logits(input));
}

double ConvNet::backprop(std::span<const double> input, int target, std::span<double> grad) const {
  const NetworkShape& s = shape_;
  if (target < 0 || target >= s.classes) throw DataError("target class out of range");
  if (grad.size() != params_.size()) throw DataError("gradient buffer has wrong length");
  Activations act;
  forward(input, act);
  const auto prob = softmax(act.out);
  const double mx = *std::max_element(act.out.begin(), act.out.end());
  double lse = 0.0;
  for (double o : act.out) lse += std::exp(o - mx);
  const double loss = mx + std::log(lse) - act.out[target];

  const int R = s.input_rows, C = s.input_cols, R2 = R / 2, C2 = C / 2, R4 = R2 / 2, C4 = C2 / 2;
  const int c1 = s.conv1_channels, c2 = s.conv2_channels, H = s.hidden, K = s.classes;
  const std::size_t F = s.flat_size();
  const double* w2 = params_.data() + layout_.w2;
  const double* w3 = params_.data() + layout_.w3;
  const double* w4 = params_.data() + layout_.w4;
  double* gw1 = grad.data() + layout_.w1;
  double* gb1 = grad.data() + layout_.b1;
  double* gw2 = grad.data() + layout_.w2;
  double* gb2 = grad.data() + layout_.b2;
  double* gw3 = grad.data() + layout_.w3;
  double* gb3 = grad.data() + layout_.b3;
  double* gw4 = grad.data() + layout_.w4;
  double* gb4 = grad.data() + layout_.b4;

  std::vector<double> d_out(prob);
  d_out[target] -= 1.0;

  std::vector<double> d_h(static_cast<std::size_t>(H), 0.0);
  for (int k = 0; k < K; ++k) {
    gb4[k] += d_out[k];
    for (int j = 0; j < H; ++j) {
      gw4[k * H + j] += d_out[k] * act.h[j];
      d_h[j] += w4[k * H + j] * d_out[k];
    }
  }

  std::vector<double> d_flat(F, 0.0);
  for (int j = 0; j < H; ++j) {
    const double dz = d_h[j] * (1.0 - act.h[j] * act.h[j]);
    gb3[j] += dz;
    double* grow = gw3 + j * F;
    const double* row = w3 + j * F;
    for (std::size_t i = 0; i < F; ++i) {
      grow[i] += dz * act.p2[i];
      d_flat[i] += row[i] * dz;
    }
  }

  // Unpool (average) and through tanh of conv2.
  std::vector<double> dz2(static_cast<std::size_t>(c2) * R2 * C2);
  for (int d = 0; d < c2; ++d) {
    for (int y = 0; y < R2; ++y) {
      for (int x = 0; x < C2; ++x) {
        const std::size_t i = (static_cast<std::size_t>(d) * R2 + y) * C2 + x;
        const double up = 0.25 * d_flat[(static_cast<std::size_t>(d) * R4 + y / 2) * C4 + x / 2];
        dz2[i] = up * (1.0 - act.a2[i] * act.a2[i]);
      }
    }
  }

  std::vector<double> d_p1(static_cast<std::size_t>(c1) * R2 * C2, 0.0);
  for (int d = 0; d < c2; ++d) {
    const double* dz = dz2.data() + static_cast<std::size_t>(d) * R2 * C2;
    double bsum = 0.0;
    for (int i = 0; i < R2 * C2; ++i) bsum += dz[i];
    gb2[d] += bsum;
    for (int c = 0; c < c1; ++c) {
      const double* plane = act.p1.data() + static_cast<std::size_t>(c) * R2 * C2;
      double* dplane = d_p1.data() + static_cast<std::size_t>(c) * R2 * C2;
      for (int k = 0; k < 9; ++k) {
        const int oy = k / 3 - 1, ox = k % 3 - 1;
        const double w = w2[(d * c1 + c) * 9 + k];
        const auto t = tap_range(oy, ox, R2, C2);
        double acc = 0.0;
        for (int y = t.y0; y < t.y1; ++y) {
          const double* src = plane + (y + oy) * C2 + ox;
          double* dsrc = dplane + (y + oy) * C2 + ox;
          const double* g = dz + y * C2;
          for (int x = t.x0; x < t.x1; ++x) {
            acc += g[x] * src[x];
            dsrc[x] += w * g[x];
          }
        }
        gw2[(d * c1 + c) * 9 + k] += acc;
      }
    }
  }

  for (int c = 0; c < c1; ++c) {
    const double* a = act.a1.data() + static_cast<std::size_t>(c) * R * C;
    const double* dp = d_p1.data() + static_cast<std::size_t>(c) * R2 * C2;
    std::vector<double> dz(static_cast<std::size_t>(R) * C);
    double bsum = 0.0;
    for (int y = 0; y < R; ++y) {
      for (int x = 0; x < C; ++x) {
        const double v = 0.25 * dp[(y / 2) * C2 + x / 2] * (1.0 - a[y * C + x] * a[y * C + x]);
        dz[static_cast<std::size_t>(y) * C + x] = v;
        bsum += v;
      }
    }
    gb1[c] += bsum;
    for (int k = 0; k < 9; ++k) {
      const int oy = k / 3 - 1, ox = k % 3 - 1;
      const auto t = tap_range(oy, ox, R, C);
      double acc = 0.0;
      for (int y = t.y0; y < t.y1; ++y) {
        const double* src = input.data() + (y + oy) * C + ox;
        const double* g = dz.data() + y * C;
        for (int x = t.x0; x < t.x1; ++x) acc += g[x] * src[x];
      }
      gw1[c * 9 + k] += acc;
    }
  }
  return loss;
}

double ConvNet::batch_gradient(std::span<const std::span<const double>> inputs, std::span<const int> targets,
                               std::span<double> grad, int workers) const {
  if (inputs.empty() || inputs.size() != targets.size()) throw DataError("batch inputs/targets mismatch");
  const std::size_t n = inputs.size();
  std::vector<std::vector<double>> per_sample(n);
  std::vector<double> losses(n);
  parallel_for(n, workers, [&](std::size_t i) {
    per_sample[i].assign(params_.size(), 0.0);
    losses[i] = backprop(inputs[i], targets[i], per_sample[i]);
  });
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    loss += losses[i];
    const double* g = per_sample[i].data();
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& g : grad) g *= inv;
  return loss * inv;
}

double ConvNet::batch_loss(std::span<const std::span<const double>> inputs, std::span<const int> targets) const {
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto p = predict_proba(inputs[i]);
    loss += -std::log(std::max(p[static_cast<std::size_t>(targets[i])], 1e-300));
  }
  return loss / static_cast<double>(inputs.size());
}

}  // namespace pheno
