#include <doctest.h>

#include <numeric>

#include "pheno/datamodel.hpp"
#include "pheno/imageproc.hpp"
#include "pheno/rng.hpp"
#include "pheno/synthgen.hpp"

using namespace pheno;

namespace {

// Hue bin by exhaustive search: the angle is held as an exact fraction
// num/den degrees and we look for the bin h with 2h <= angle < 2h + 2.
int oracle_hue(int r, int g, int b) {
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  const long den = mx - mn;
  if (den == 0) return 0;
  long num;
  if (r == mx) {
    num = 60L * (g - b);
    if (num < 0) num += 360L * den;
  } else if (g == mx) {
    num = 60L * (b - r) + 120L * den;
  } else {
    num = 60L * (r - g) + 240L * den;
  }
  for (int h = 0; h < 180; ++h) {
    if (2L * h * den <= num && num < 2L * (h + 1) * den) return h;
  }
  return -1;
}

RgbImage two_tone_rows(int w, int h, Rgb top, Rgb bottom) {
  RgbImage img(w, h, bottom);
  for (int y = 0; y < h / 2; ++y) {
    for (int x = 0; x < w; ++x) img.set(x, y, top);
  }
  return img;
}

}  // namespace

TEST_CASE("hue examples") {
  CHECK(rgb_to_hue(std::uint8_t{0}, std::uint8_t{255}, std::uint8_t{0}) == 60);
  CHECK(rgb_to_hue(std::uint8_t{255}, std::uint8_t{255}, std::uint8_t{0}) == 30);
  CHECK(rgb_to_hue(std::uint8_t{128}, std::uint8_t{128}, std::uint8_t{128}) == 0);
  CHECK(rgb_to_hue(std::uint8_t{255}, std::uint8_t{0}, std::uint8_t{0}) == 0);
  CHECK(rgb_to_hue(std::uint8_t{0}, std::uint8_t{0}, std::uint8_t{255}) == 120);
  CHECK(rgb_to_hue(std::uint8_t{255}, std::uint8_t{0}, std::uint8_t{1}) == 179);
}

TEST_CASE("integer hue agrees with the exact-fraction oracle over a lattice of colors") {
  int mismatches = 0;
  for (int r = 0; r < 256; r += 5) {
    for (int g = 0; g < 256; g += 5) {
      for (int b = 0; b < 256; b += 5) {
        const int h = rgb_to_hue(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                 static_cast<std::uint8_t>(b));
        if (h != oracle_hue(r, g, b)) ++mismatches;
        if (h < 0 || h >= kHueBins) ++mismatches;
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("hue is stable under uniform brightness scaling") {
  Rng rng(2024);
  int outside = 0;
  for (int i = 0; i < 100000; ++i) {
    const double r = static_cast<double>(rng.below(256));
    const double g = static_cast<double>(rng.below(256));
    const double b = static_cast<double>(rng.below(256));
    const double s = 1.0 - rng.uniform();  // (0, 1]
    const int h0 = rgb_to_hue(r, g, b);
    const int h1 = rgb_to_hue(s * r, s * g, s * b);
    int diff = std::abs(h0 - h1);
    diff = std::min(diff, kHueBins - diff);  // red wraps around
    if (diff > 1) ++outside;
  }
  CHECK(outside == 0);

  // Integer channels that stay integral under the scale give the same bin.
  for (int r = 0; r < 256; r += 4) {
    for (int g = 0; g < 256; g += 12) {
      for (int b = 0; b < 256; b += 20) {
        const auto q = [](int v, int k) { return static_cast<std::uint8_t>(v / 4 * k); };
        const int ref = rgb_to_hue(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                   static_cast<std::uint8_t>(b));
        for (int k = 1; k <= 3; ++k) REQUIRE(rgb_to_hue(q(r, k), q(g, k), q(b, k)) == ref);
      }
    }
  }
}

TEST_CASE("crop_white_border") {
  SUBCASE("all white -> unchanged and flagged") {
    const RgbImage img(10, 10, Rgb{255, 255, 255});
    const auto c = crop_white_border(img);
    CHECK(c.all_white);
    CHECK(c.image == img);
  }
  SUBCASE("single red pixel -> 1x1") {
    RgbImage img(10, 10, Rgb{255, 255, 255});
    img.set(4, 4, Rgb{255, 0, 0});
    const auto c = crop_white_border(img);
    CHECK_FALSE(c.all_white);
    REQUIRE(c.image.width() == 1);
    REQUIRE(c.image.height() == 1);
    CHECK(c.image.at(0, 0) == Rgb{255, 0, 0});
  }
  SUBCASE("2-px frame removed, interior intact") {
    RgbImage interior(7, 5);
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 7; ++x) {
        interior.set(x, y, Rgb{static_cast<std::uint8_t>(10 * x), static_cast<std::uint8_t>(20 * y), 90});
      }
    }
    RgbImage framed(11, 9, Rgb{255, 255, 255});
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 7; ++x) framed.set(x + 2, y + 2, interior.at(x, y));
    }
    CHECK(crop_white_border(framed).image == interior);
  }
  SUBCASE("near-white counts as white at the threshold") {
    RgbImage img(6, 6, Rgb{250, 251, 252});
    img.set(2, 3, Rgb{249, 255, 255});
    const auto c = crop_white_border(img);
    CHECK(c.image.width() == 1);
    CHECK(c.image.height() == 1);
  }
}

TEST_CASE("standardize") {
  SUBCASE("300x1000 input is returned unchanged") {
    RgbImage img(kStandardWidth, kStandardHeight);
    Rng rng(5);
    for (auto& byte : img.bytes()) byte = static_cast<std::uint8_t>(rng.below(256));
    CHECK(standardize(img).image() == img);
  }
  SUBCASE("constant 150x500 -> constant 300x1000") {
    const Rgb c{12, 200, 77};
    const auto out = standardize(RgbImage(150, 500, c)).image();
    REQUIRE(out.width() == kStandardWidth);
    REQUIRE(out.height() == kStandardHeight);
    CHECK(out == RgbImage(kStandardWidth, kStandardHeight, c));
  }
  SUBCASE("landscape input is transposed before resizing") {
    // Left half red, right half green: after transposing, red is on top.
    RgbImage img(1000, 300, Rgb{0, 255, 0});
    for (int y = 0; y < 300; ++y) {
      for (int x = 0; x < 500; ++x) img.set(x, y, Rgb{255, 0, 0});
    }
    const auto out = standardize(img).image();
    REQUIRE(out.width() == kStandardWidth);
    REQUIRE(out.height() == kStandardHeight);
    CHECK(out.at(150, 10) == Rgb{255, 0, 0});
    CHECK(out.at(150, 990) == Rgb{0, 255, 0});

    RgbImage manual(300, 1000);
    for (int y = 0; y < 1000; ++y) {
      for (int x = 0; x < 300; ++x) manual.set(x, y, img.at(y, x));
    }
    CHECK(out == standardize(manual).image());
  }
}

TEST_CASE("hue_histogram") {
  SUBCASE("all green") {
    const auto h = hue_histogram(standardize(RgbImage(30, 100, Rgb{0, 255, 0})));
    CHECK(h.counts[60] == 300000);
    CHECK(h.total_pixels == 300000);
    CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0}) == 300000);
  }
  SUBCASE("half green, half yellow by rows") {
    const auto h = hue_histogram(two_tone_rows(300, 1000, Rgb{0, 255, 0}, Rgb{255, 255, 0}));
    CHECK(h.counts[60] == 150000);
    CHECK(h.counts[30] == 150000);
    CHECK(h.mean_hue() == doctest::Approx(45.0));
  }
  SUBCASE("conservation on random images") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      RgbImage img(1 + static_cast<int>(rng.below(40)), 1 + static_cast<int>(rng.below(40)));
      for (auto& byte : img.bytes()) byte = static_cast<std::uint8_t>(rng.below(256));
      const auto h = hue_histogram(img);
      CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0}) == img.pixel_count());
      CHECK(h.total_pixels == img.pixel_count());
    }
  }
  SUBCASE("synthetic plot mass shifts to lower hue from tp1 to tp8") {
    GeneratorConfig cfg;
    const auto profile = profile_for_rating(2.5, cfg, 3);
    const auto first = extract_timepoint(render_timepoint(profile, 0, cfg, 3));
    const auto last = extract_timepoint(render_timepoint(profile, 7, cfg, 3));
    CHECK(last.histogram.mean_hue() < first.histogram.mean_hue() - 10.0);
    CHECK(first.histogram.total_pixels == 300000);
  }
}

TEST_CASE("mean_exg") {
  CHECK(mean_exg(RgbImage(4, 3, Rgb{100, 150, 50})) == 150.0);
  CHECK(mean_exg(RgbImage(4, 3, Rgb{77, 77, 77})) == 0.0);
  CHECK(mean_exg(RgbImage(4, 3, Rgb{0, 255, 0})) == 510.0);
  CHECK(mean_exg(RgbImage(4, 3, Rgb{255, 0, 255})) == -510.0);

  // A 50/50 mix of two constant images averages their values exactly.
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pick = [&] {
      return Rgb{static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                 static_cast<std::uint8_t>(rng.below(256))};
    };
    const Rgb a = pick();
    const Rgb b = pick();
    const auto mixed = two_tone_rows(6, 10, a, b);
    CHECK(mean_exg(mixed) == (mean_exg(RgbImage(1, 1, a)) + mean_exg(RgbImage(1, 1, b))) / 2.0);
  }
}

TEST_CASE("extract_timepoint flags an all-white raster and still counts it") {
  const auto f = extract_timepoint(RgbImage(20, 20, Rgb{255, 255, 255}));
  CHECK(f.all_white);
  CHECK(f.histogram.total_pixels == 300000);
  CHECK(f.histogram.counts[0] == 300000);
}
