#pragma once

#include <array>
#include <filesystem>
#include <string_view>

#include "pheno/image.hpp"

namespace pheno {

// 256-entry colour lookup table. Entries must be strictly increasing in
// Rec. 601 luma, which any sequential perceptually uniform map satisfies.
class ColormapLut {
 public:
  static constexpr std::size_t kSize = 256;

  // Text format: 256 lines of `index,r,g,b`. Throws DataError on any
  // malformed line, out-of-order index, or non-monotone luma.
  static ColormapLut parse(std::string_view csv);
  static ColormapLut load(const std::filesystem::path& path);
  // Batlow, embedded from data/batlow.csv.
  static const ColormapLut& batlow();

  const Rgb& operator[](std::size_t i) const { return entries_[i]; }
  const std::array<Rgb, kSize>& entries() const { return entries_; }

  static double luma(Rgb c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

 private:
  std::array<Rgb, kSize> entries_{};
};

}  // namespace pheno
