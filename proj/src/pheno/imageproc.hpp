#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "pheno/image.hpp"

namespace pheno {

inline constexpr int kHueBins = 180;
inline constexpr int kStandardWidth = 300;
inline constexpr int kStandardHeight = 1000;
inline constexpr int kWhiteThreshold = 250;

struct CropResult {
  RgbImage image;
  // No non-white pixel was found; image is the unchanged input.
  bool all_white = false;
};

// Minimal bounding box of pixels that are not white (a pixel is white when all
// three channels are >= threshold).
CropResult crop_white_border(const RgbImage& image, int threshold = kWhiteThreshold);

// A raster that has been brought to the fixed 300x1000 working size.
class PreprocessedImage {
 public:
  const RgbImage& image() const { return image_; }

 private:
  friend PreprocessedImage standardize(const RgbImage& image);
  explicit PreprocessedImage(RgbImage image) : image_(std::move(image)) {}
  RgbImage image_;
};

// Bilinear resize to 300 wide by 1000 high. Landscape inputs are transposed
// first so the longer side always lands on the 1000-pixel axis.
PreprocessedImage standardize(const RgbImage& image);

// HSV hue in half-degrees, truncated to an integer bin in [0, 180).
// Achromatic pixels (max == min) map to 0.
int rgb_to_hue(std::uint8_t r, std::uint8_t g, std::uint8_t b);
// Same convention for real-valued channels in [0, 255].
int rgb_to_hue(double r, double g, double b);

struct HueHistogram {
  std::array<std::uint64_t, kHueBins> counts{};
  std::uint64_t total_pixels = 0;

  // Count-weighted mean bin.
  double mean_hue() const;
};

// Counts every pixel of the standardized image; nothing is masked.
HueHistogram hue_histogram(const PreprocessedImage& image);
HueHistogram hue_histogram(const RgbImage& image);

// Mean of per-pixel 2G - R - B.
double mean_exg(const RgbImage& image);

struct TimepointFeatures {
  HueHistogram histogram;
  double mean_exg = 0.0;
  bool all_white = false;
};

// crop -> standardize -> histogram, with ExG taken on the cropped raster.
TimepointFeatures extract_timepoint(const RgbImage& raw);

}  // namespace pheno
