#include "pheno/imageproc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

namespace pheno {

namespace {

int floor_div(int num, int den) {
  int q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

RgbImage transpose(const RgbImage& in) {
  RgbImage out(in.height(), in.width());
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) out.set(y, x, in.at(x, y));
  }
  return out;
}

}  // namespace

CropResult crop_white_border(const RgbImage& image, int threshold) {
  int x0 = image.width(), y0 = image.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Rgb p = image.at(x, y);
      if (p.r >= threshold && p.g >= threshold && p.b >= threshold) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return {image, true};
  RgbImage out(x1 - x0 + 1, y1 - y0 + 1);
  for (int y = y0; y <= y1; ++y) {
    std::memcpy(out.bytes().data() + static_cast<std::size_t>(y - y0) * out.width() * 3,
                image.bytes().data() + (static_cast<std::size_t>(y) * image.width() + x0) * 3,
                static_cast<std::size_t>(out.width()) * 3);
  }
  return {std::move(out), false};
}

PreprocessedImage standardize(const RgbImage& image) {
  const RgbImage& oriented = image.width() > image.height() ? transpose(image) : image;
  if (oriented.width() == kStandardWidth && oriented.height() == kStandardHeight) {
    return PreprocessedImage(oriented);
  }
  cv::Mat src(oriented.height(), oriented.width(), CV_8UC3,
              const_cast<std::uint8_t*>(oriented.bytes().data()));
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(kStandardWidth, kStandardHeight), 0, 0, cv::INTER_LINEAR);
  RgbImage out(kStandardWidth, kStandardHeight);
  for (int y = 0; y < kStandardHeight; ++y) {
    std::memcpy(out.bytes().data() + static_cast<std::size_t>(y) * kStandardWidth * 3,
                dst.ptr<std::uint8_t>(y), static_cast<std::size_t>(kStandardWidth) * 3);
  }
  return PreprocessedImage(std::move(out));
}

int rgb_to_hue(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const int mx = std::max({r, g, b});
  const int mn = std::min({r, g, b});
  const int d = mx - mn;
  if (d == 0) return 0;
  // 60 degrees per sector, halved: 30 bins per sector.
  if (mx == r) {
    const int h = floor_div(30 * (g - b), d);
    return h < 0 ? h + 180 : h;
  }
  if (mx == g) return 60 + floor_div(30 * (b - r), d);
  return 120 + floor_div(30 * (r - g), d);
}

int rgb_to_hue(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  if (d <= 0.0) return 0;
  double h;
  if (mx == r) {
    h = 30.0 * (g - b) / d;
    if (h < 0) h += 180.0;
  } else if (mx == g) {
    h = 60.0 + 30.0 * (b - r) / d;
  } else {
    h = 120.0 + 30.0 * (r - g) / d;
  }
  const int bin = static_cast<int>(std::floor(h));
  return std::clamp(bin, 0, kHueBins - 1);
}

double HueHistogram::mean_hue() const {
  if (total_pixels == 0) return 0.0;
  double acc = 0.0;
  for (int h = 0; h < kHueBins; ++h) acc += static_cast<double>(h) * static_cast<double>(counts[h]);
  return acc / static_cast<double>(total_pixels);
}

HueHistogram hue_histogram(const RgbImage& image) {
  HueHistogram hist;
  const auto& px = image.bytes();
  for (std::size_t i = 0; i < px.size(); i += 3) ++hist.counts[rgb_to_hue(px[i], px[i + 1], px[i + 2])];
  hist.total_pixels = image.pixel_count();
  return hist;
}

HueHistogram hue_histogram(const PreprocessedImage& image) { return hue_histogram(image.image()); }

double mean_exg(const RgbImage& image) {
  if (image.empty()) return 0.0;
  std::int64_t sum = 0;
  const auto& px = image.bytes();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    sum += 2 * static_cast<int>(px[i + 1]) - static_cast<int>(px[i]) - static_cast<int>(px[i + 2]);
  }
  return static_cast<double>(sum) / static_cast<double>(image.pixel_count());
}

TimepointFeatures extract_timepoint(const RgbImage& raw) {
  CropResult cropped = crop_white_border(raw);
  TimepointFeatures f;
  f.all_white = cropped.all_white;
  f.mean_exg = mean_exg(cropped.image);
  f.histogram = hue_histogram(standardize(cropped.image));
  return f;
}

}  // namespace pheno
