#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "pheno/errors.hpp"
#include "pheno/learn.hpp"
#include "pheno/rng.hpp"

using namespace pheno;

namespace {

NetworkShape tiny_shape(int classes) {
  NetworkShape s;
  s.input_rows = 8;
  s.input_cols = 12;
  s.conv1_channels = 2;
  s.conv2_channels = 3;
  s.hidden = 5;
  s.classes = classes;
  return s;
}

std::vector<double> random_input(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform();
  return v;
}

// A network that ignores its input and always favours `label` (1-based).
ConvNet constant_net(int classes, int label, double margin = 50.0) {
  auto net = ConvNet::zeros(tiny_shape(classes));
  auto p = net.parameters();
  p[p.size() - static_cast<std::size_t>(classes) + static_cast<std::size_t>(label - 1)] = margin;
  return net;
}

// Scripted predictions, keyed by the first feature value.
class Scripted : public Classifier {
 public:
  Scripted(int k, std::map<int, std::vector<double>> probs) : k_(k), probs_(std::move(probs)) {}
  std::vector<int> labels() const override {
    std::vector<int> l;
    for (int i = 1; i <= k_; ++i) l.push_back(i);
    return l;
  }
  std::vector<double> predict_proba(std::span<const double> x) const override {
    return probs_.at(static_cast<int>(x[0]));
  }
  int predict(std::span<const double> x) const override {
    const auto p = predict_proba(x);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()) + 1;
  }

 private:
  int k_;
  std::map<int, std::vector<double>> probs_;
};

FeatureVector fv(double key, int label) { return {{key}, label}; }

std::vector<FeatureVector> blob_set(int per_class, int classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureVector> out;
  for (int c = 1; c <= classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      FeatureVector f;
      f.label = c;
      f.values.assign(static_cast<std::size_t>(kFeatureRows * kFeatureCols), 0.0);
      // A bright band whose column position encodes the class.
      for (int r = 0; r < kFeatureRows; ++r) {
        for (int col = 0; col < kFeatureCols; ++col) {
          const double centre = 10.0 + 40.0 * (c - 1) / std::max(1, classes - 1);
          const double v = std::exp(-std::pow((col - centre - r * 0.3) / 4.0, 2)) + 0.05 * rng.normal();
          f.values[static_cast<std::size_t>(r * kFeatureCols + col)] = std::clamp(v, 0.0, 1.0);
        }
      }
      out.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("softmax sums to one") {
  Rng rng(1);
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> logits(1 + rng.below(10));
    for (auto& l : logits) l = rng.normal(0.0, 30.0);
    const auto p = softmax(logits);
    double s = 0.0;
    for (const double v : p) {
      CHECK(v >= 0.0);
      s += v;
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  CHECK(worst < 1e-6);

  // Through the network too.
  const ConvNet net(tiny_shape(5), 3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = net.predict_proba(random_input(rng, net.shape().input_size()));
    double s = 0.0;
    for (const double v : p) s += v;
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("loss: ln K for uniform output, zero for a confident correct one-hot") {
  Rng rng(2);
  for (int k : {2, 4, 5, 7}) {
    const auto net = ConvNet::zeros(tiny_shape(k));
    std::vector<double> grad(net.parameter_count());
    const auto x = random_input(rng, net.shape().input_size());
    CHECK(std::abs(net.backprop(x, 0, grad) - std::log(static_cast<double>(k))) < 1e-9);
  }
  const auto confident = constant_net(4, 3, 1000.0);
  std::vector<double> grad(confident.parameter_count());
  const auto x = random_input(rng, confident.shape().input_size());
  CHECK(confident.backprop(x, 2, grad) == 0.0);
  CHECK(confident.backprop(x, 1, grad) > 0.0);

  const ConvNet random_net(tiny_shape(3), 9);
  grad.assign(random_net.parameter_count(), 0.0);
  for (int trial = 0; trial < 50; ++trial) {
    CHECK(random_net.backprop(random_input(rng, random_net.shape().input_size()), trial % 3, grad) > 0.0);
  }
}

TEST_CASE("analytic gradient matches central differences") {
  const ConvNet net(tiny_shape(3), 17);
  Rng rng(5);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(random_input(rng, net.shape().input_size()));
  std::vector<std::span<const double>> inputs(xs.begin(), xs.end());
  const std::vector<int> targets{0, 2, 1};

  std::vector<double> grad(net.parameter_count());
  net.batch_gradient(inputs, targets, grad);

  ConvNet probe = net;
  const double eps = 1e-4;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.parameter_count(); ++i) {
    const double keep = probe.parameters()[i];
    probe.parameters()[i] = keep + eps;
    const double up = probe.batch_loss(inputs, targets);
    probe.parameters()[i] = keep - eps;
    const double down = probe.batch_loss(inputs, targets);
    probe.parameters()[i] = keep;
    const double numeric = (up - down) / (2 * eps);
    const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-7});
    worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
  }
  CHECK(worst < 1e-3);

  // The reduction order is fixed, so worker count does not change the bits.
  std::vector<double> grad4(net.parameter_count());
  net.batch_gradient(inputs, targets, grad4, 4);
  CHECK(grad4 == grad);
}

TEST_CASE("SMOTE") {
  SUBCASE("imbalanced counts are lifted to the majority") {
    const std::vector<int> counts{664, 2210, 3391, 4893, 1207};
    Rng rng(3);
    std::vector<FeatureVector> train;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      for (int i = 0; i < counts[c]; ++i) {
        FeatureVector f;
        f.label = static_cast<int>(c) + 1;
        f.values = random_input(rng, 6);
        f.values[0] = 0.2 * static_cast<double>(c);
        train.push_back(std::move(f));
      }
    }
    const auto res = smote_balance(train, 5, 11);
    std::map<int, int> out;
    for (const auto& s : res.samples) ++out[s.label];
    for (const auto& [label, n] : out) CHECK(n == 4893);
    CHECK(res.duplicated_labels.empty());
    CHECK(res.original_count == train.size());

    // Originals first and verbatim.
    for (std::size_t i = 0; i < train.size(); ++i) {
      REQUIRE(res.samples[i].values == train[i].values);
      CHECK_FALSE(res.origin[i].has_value());
    }
    // Every synthetic row sits on the segment between two same-class
    // originals, the second among the first's five nearest neighbours.
    int bad = 0;
    for (std::size_t i = train.size(); i < res.samples.size(); ++i) {
      REQUIRE(res.origin[i].has_value());
      const auto& o = *res.origin[i];
      const auto& a = train[o.base];
      const auto& b = train[o.neighbor];
      if (a.label != res.samples[i].label || b.label != a.label || o.base == o.neighbor) ++bad;
      if (o.lambda < 0.0 || o.lambda > 1.0) ++bad;
      for (std::size_t d = 0; d < a.values.size(); ++d) {
        const double v = res.samples[i].values[d];
        if (v < std::min(a.values[d], b.values[d]) - 1e-15 || v > std::max(a.values[d], b.values[d]) + 1e-15) ++bad;
      }
      if (i % 97 == 0) {
        auto dist = [&](const FeatureVector& x) {
          double s = 0;
          for (std::size_t d = 0; d < x.values.size(); ++d) s += std::pow(x.values[d] - a.values[d], 2);
          return s;
        };
        const double nd = dist(b);
        int closer = 0;
        for (std::size_t j = 0; j < train.size(); ++j) {
          if (j != o.base && train[j].label == a.label && dist(train[j]) < nd) ++closer;
        }
        if (closer >= 5) ++bad;
      }
    }
    CHECK(bad == 0);
  }
  SUBCASE("balanced input is returned as is") {
    const std::vector<FeatureVector> train{{{0.1, 0.2}, 1}, {{0.3, 0.4}, 2}, {{0.5, 0.6}, 1}, {{0.7, 0.8}, 2}};
    const auto res = smote_balance(train, 5, 1);
    REQUIRE(res.samples.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(res.samples[i].values == train[i].values);
      CHECK(res.samples[i].label == train[i].label);
    }
  }
  SUBCASE("a singleton class is duplicated and flagged") {
    const std::vector<FeatureVector> train{{{0.1}, 1}, {{0.2}, 1}, {{0.3}, 1}, {{0.9}, 2}};
    const auto res = smote_balance(train, 5, 1);
    CHECK(res.duplicated_labels == std::vector<int>{2});
    REQUIRE(res.samples.size() == 6);
    CHECK(res.samples[4].values == std::vector<double>{0.9});
    CHECK(res.samples[5].values == std::vector<double>{0.9});
  }
  SUBCASE("deterministic in seed; k < 1 rejected") {
    const auto train = blob_set(6, 2, 4);
    std::vector<FeatureVector> skew(train.begin(), train.begin() + 9);
    const auto a = smote_balance(skew, 2, 5);
    const auto b = smote_balance(skew, 2, 5);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].values == b.samples[i].values);
    CHECK_THROWS_AS(smote_balance(skew, 0, 5), ConfigError);
  }
}

TEST_CASE("augmentation") {
  RgbImage img(40, 20, Rgb{100, 150, 50});
  for (int x = 0; x < 40; ++x) img.set(x, 3, Rgb{200, 40, 90});

  SUBCASE("all zero -> identity") {
    const AugmentParams none{0, 0, 0, 0, 0, 8, 4};
    CHECK(augment(img, none, 3) == img);
    const std::vector<double> v{0.1, 0.5, 0.9, 0.3, 0.2, 0.7};
    CHECK(augment(v, 2, 3, none, 3) == v);
  }
  SUBCASE("defaults change the image but not its shape") {
    const auto out = augment(img, AugmentParams{}, 3);
    CHECK(out.width() == img.width());
    CHECK(out.height() == img.height());
    CHECK_FALSE(out == img);
    CHECK(out == augment(img, AugmentParams{}, 3));
  }
  SUBCASE("one mask -> exactly one zero rectangle of the mask size") {
    const AugmentParams mask{0, 0, 0, 0, 1, 7, 3};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto out = augment(img, mask, seed);
      int zeros = 0, x0 = 1000, y0 = 1000, x1 = -1, y1 = -1;
      for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
          if (out.at(x, y) == Rgb{0, 0, 0}) {
            ++zeros;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
          } else {
            CHECK(out.at(x, y) == img.at(x, y));
          }
        }
      }
      CHECK(zeros == 21);
      CHECK(x1 - x0 + 1 == 7);
      CHECK(y1 - y0 + 1 == 3);
    }
    std::vector<double> v(6 * 10, 0.5);
    const auto out = augment(v, 6, 10, mask, 1);
    CHECK(std::count(out.begin(), out.end(), 0.0) == 21);
  }
  SUBCASE("mask larger than the image") {
    const AugmentParams big{0, 0, 0, 0, 1, 41, 2};
    CHECK_THROWS_AS(augment(img, big, 1), ConfigError);
    const AugmentParams negative{-0.1, 0, 0, 0, 0, 8, 4};
    CHECK_THROWS_AS(validate(negative), ConfigError);
  }
  SUBCASE("vector augmentation stays in [0, 1]") {
    AugmentParams strong;
    strong.brightness = 0.5;
    strong.contrast = 0.5;
    Rng rng(2);
    const auto v = random_input(rng, 32);
    for (std::uint64_t s = 0; s < 20; ++s) {
      for (const double x : augment(v, 4, 8, strong, s)) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
      }
    }
  }
}

TEST_CASE("evaluation metrics") {
  SUBCASE("adjacent predictions count under adjacent accuracy only") {
    // true 4 predicted 3, true 4 predicted 5, true 4 predicted 4, true 1 predicted 7.
    const Scripted model(7, {{0, {0, 0, .6, .3, .1, 0, 0}},
                             {1, {0, 0, 0, .2, .7, 0, .1}},
                             {2, {0, 0, .1, .8, .1, 0, 0}},
                             {3, {.3, 0, 0, 0, 0, 0, .7}}});
    const std::vector<FeatureVector> test{fv(0, 4), fv(1, 4), fv(2, 4), fv(3, 1)};
    const auto rep = evaluate(model, test, 7);
    CHECK(rep.accuracy() == 0.25);
    CHECK(rep.adjacent_accuracy() == 0.75);
    CHECK(rep.top2_prob_accuracy() == 1.0);
    CHECK(rep.confusion()[3][2] == 1);
    CHECK(rep.confusion()[3][4] == 1);
    CHECK(rep.confusion()[0][6] == 1);
    CHECK(rep.total() == 4);
    REQUIRE(rep.recall()[3]);
    CHECK(*rep.recall()[3] == doctest::Approx(1.0 / 3.0));
    CHECK_FALSE(rep.recall()[1]);
    CHECK_FALSE(rep.precision()[1]);
    const auto j = rep.to_json();
    CHECK(j["accuracy"] == 0.25);
    CHECK(j["per_class"].size() == 7);
    CHECK(rep.confusion_csv().rfind("true,pred_1,pred_2", 0) == 0);
  }
  SUBCASE("all correct -> every metric is 1") {
    const Scripted model(3, {{0, {1, 0, 0}}, {1, {0, 1, 0}}, {2, {0, 0, 1}}});
    const auto rep = evaluate(model, std::vector<FeatureVector>{fv(0, 1), fv(1, 2), fv(2, 3)}, 3);
    CHECK(rep.accuracy() == 1.0);
    CHECK(rep.adjacent_accuracy() == 1.0);
    CHECK(rep.top2_prob_accuracy() == 1.0);
  }
  SUBCASE("K = 2 -> adjacent accuracy is always 1") {
    const Scripted model(2, {{0, {0.9, 0.1}}, {1, {0.2, 0.8}}});
    const auto rep = evaluate(model, std::vector<FeatureVector>{fv(0, 2), fv(1, 1), fv(0, 2)}, 2);
    CHECK(rep.accuracy() == 0.0);
    CHECK(rep.adjacent_accuracy() == 1.0);
  }
  SUBCASE("invariants hold on random confusion matrices") {
    Rng rng(6);
    for (int trial = 0; trial < 300; ++trial) {
      const int k = 2 + static_cast<int>(rng.below(6));
      std::vector<std::vector<std::size_t>> cm(static_cast<std::size_t>(k), std::vector<std::size_t>(k));
      std::size_t trace = 0, total = 0;
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          cm[i][j] = rng.below(9);
          total += cm[i][j];
          if (i == j) trace += cm[i][j];
        }
      }
      if (total == 0) continue;
      const auto rep = EvalReport(cm, trace + rng.below(total - trace + 1));
      CHECK(rep.accuracy() == static_cast<double>(trace) / static_cast<double>(total));
      CHECK(rep.accuracy() <= rep.adjacent_accuracy());
      CHECK(rep.accuracy() <= rep.top2_prob_accuracy());
      for (int i = 0; i < k; ++i) {
        std::size_t row = 0;
        for (const auto v : cm[i]) row += v;
        if (row > 0) CHECK(rep.recall()[i].has_value());
      }
    }
    CHECK_THROWS_AS(EvalReport({{3, 0}, {0, 1}}, 2), std::logic_error);
  }
  SUBCASE("empty test set") {
    const Scripted model(2, {});
    CHECK_THROWS_AS(evaluate(model, std::vector<FeatureVector>{}, 2), DataError);
  }
}

TEST_CASE("hierarchical composition") {
  HierarchicalModel h;
  h.groups = seven_class_groups();
  CHECK(h.groups == std::vector<std::vector<int>>{{1}, {2, 3}, {4, 5}, {6, 7}});
  h.stage2.resize(4);
  // Stage-2 models carry the group's own labels.
  h.stage2[1] = TrainedModel(constant_net(2, 1), {2, 3});
  h.stage2[2] = TrainedModel(constant_net(2, 2), {4, 5});
  h.stage2[3] = TrainedModel(constant_net(2, 1), {6, 7});
  const std::vector<double> x(tiny_shape(2).input_size(), 0.3);

  h.stage1 = TrainedModel(constant_net(4, 1), {1, 2, 3, 4});
  CHECK(h.predict(x) == 1);
  h.stage1 = TrainedModel(constant_net(4, 3), {1, 2, 3, 4});
  CHECK(h.predict(x) == 5);
  h.stage1 = TrainedModel(constant_net(4, 4), {1, 2, 3, 4});
  CHECK(h.predict(x) == 6);

  // Composite probabilities are the products and sum to one.
  h.stage1 = TrainedModel(constant_net(4, 3, 1.0), {1, 2, 3, 4});
  h.stage2[2] = TrainedModel(constant_net(2, 2, 0.5), {4, 5});
  const auto p = h.predict_proba(x);
  REQUIRE(p.size() == 7);
  CHECK(h.labels() == std::vector<int>{1, 2, 3, 4, 5, 6, 7});
  const auto p1 = h.stage1.predict_proba(x);
  const auto p2 = h.stage2[2]->predict_proba(x);
  CHECK(p[0] == doctest::Approx(p1[0]));
  CHECK(p[3] == doctest::Approx(p1[2] * p2[0]));
  CHECK(p[4] == doctest::Approx(p1[2] * p2[1]));
  double s = 0.0;
  for (const double v : p) s += v;
  CHECK(s == doctest::Approx(1.0));

  std::vector<FeatureVector> missing = blob_set(3, 6, 1);
  CHECK_THROWS_AS(train_hierarchical(missing, {}, TrainOptions{}, 1), DataError);
}

TEST_CASE("training learns separable data and is bit-reproducible") {
  const auto train_set = blob_set(20, 3, 1);
  const auto val_set = blob_set(5, 3, 2);
  Hyperparams hp;
  hp.epochs = 8;
  hp.learning_rate = 3e-3;
  hp.batch_size = 8;
  const auto a = train(train_set, val_set, {1, 2, 3}, hp, 42);
  hp.workers = 3;
  const auto b = train(train_set, val_set, {1, 2, 3}, hp, 42);
  CHECK(std::equal(a.network().parameters().begin(), a.network().parameters().end(),
                   b.network().parameters().begin()));
  CHECK(a.curve.size() == 8);
  CHECK(a.best_val_accuracy >= 0.9);
  CHECK(accuracy(a, val_set) == a.best_val_accuracy);
  CHECK(curve_to_csv(a.curve).rfind("epoch,train_loss,val_acc\n", 0) == 0);

  const auto c = train(train_set, val_set, {1, 2, 3}, hp, 43);
  CHECK_FALSE(std::equal(a.network().parameters().begin(), a.network().parameters().end(),
                         c.network().parameters().begin()));

  // Large enough that the output layer overflows to inf after one step.
  hp.learning_rate = 1e308;
  hp.optimizer = Optimizer::Sgd;
  CHECK_THROWS_AS(train(train_set, val_set, {1, 2, 3}, hp, 42), DivergenceError);
}

TEST_CASE("hyperparameters validate and round-trip") {
  Hyperparams h;
  h.optimizer = Optimizer::Sgd;
  h.augment = true;
  nlohmann::ordered_json j = h;
  Hyperparams back;
  from_json(j, back);
  nlohmann::ordered_json j2 = back;
  CHECK(j == j2);
  CHECK(parse_optimizer("adam") == Optimizer::Adam);
  CHECK_THROWS_AS(parse_optimizer("rmsprop"), ConfigError);
  h.batch_size = 0;
  CHECK_THROWS_AS(validate(h), ConfigError);
}

TEST_CASE("grid features are normalised into [0, 1]") {
  HueHistogram a, b;
  a.counts[40] = 900;
  a.total_pixels = 900;
  b.counts[20] = 300;
  b.total_pixels = 300;
  const auto g = build_grid(std::vector<HueHistogram>{a, b});
  const auto f = grid_features(g);
  CHECK(f.size() == static_cast<std::size_t>(kFeatureRows * kFeatureCols));
  CHECK(*std::max_element(f.begin(), f.end()) <= 1.0);
  CHECK(*std::min_element(f.begin(), f.end()) >= 0.0);
  HueHistogram zero;
  zero.total_pixels = 5;
  zero.counts[150] = 5;
  const auto z = grid_features(build_grid(std::vector<HueHistogram>{zero, zero}));
  CHECK(std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; }));
}
