#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pheno/colormap.hpp"
#include "pheno/image.hpp"
#include "pheno/imageproc.hpp"

namespace pheno {

enum class SubsetMode { All8, Distributed6, Distributed4, Distributed3, Last6, Last4, Last3 };

std::string_view to_string(SubsetMode mode);
// "all8", "distributed6", ..., "last3". Throws ConfigError.
SubsetMode parse_subset_mode(std::string_view text);
const std::vector<SubsetMode>& all_subset_modes();

// 1-based acquisition indices kept by each mode, out of 8 flights.
std::vector<int> subset_indices(SubsetMode mode);

inline constexpr int kSubsetInputLength = 8;

// Throws DataError unless exactly 8 histograms are given.
std::vector<HueHistogram> temporal_subset(SubsetMode mode, std::span<const HueHistogram> histograms);

// Hue bins 0..100 are kept; nothing above hue 100 survives the crop.
inline constexpr int kContourColumns = 101;

struct ContourGrid {
  int rows = 0;
  // rows x kContourColumns, row-major, earliest timepoint first.
  std::vector<double> counts;
  // 1-based acquisition index of each row.
  std::vector<int> timepoint_indices;
  double discarded_mass = 0.0;
  // discarded_mass / total input pixels.
  double discarded_fraction = 0.0;

  double at(int row, int col) const { return counts[static_cast<std::size_t>(row) * kContourColumns + col]; }
  double max() const;
  double total() const;
};

// Rows are the given histograms in order. Throws DataError for fewer than 2
// histograms. timepoint_indices defaults to 1..T.
ContourGrid build_grid(std::span<const HueHistogram> histograms, std::vector<int> timepoint_indices = {});

// Bilinear resampling with pixel-centre alignment (edge samples clamp).
std::vector<double> resize_bilinear(std::span<const double> src, int rows, int cols, int out_rows, int out_cols);

inline constexpr int kRenderSize = 256;

struct RenderResult {
  RgbImage image;
  // All-zero grid: image is filled with lut[0].
  bool degenerate = false;
};

// Grid normalized by its maximum, upsampled bilinearly, rescaled so the
// interpolated peak is exactly 1, then mapped through lut[floor(v * 255)].
RenderResult render(const ContourGrid& grid, const ColormapLut& lut, int width = kRenderSize,
                    int height = kRenderSize);

struct ContourPhenotype {
  ContourGrid grid;
  RgbImage rendered;
  bool degenerate = false;
};

ContourPhenotype make_phenotype(std::span<const HueHistogram> histograms, SubsetMode mode,
                                const ColormapLut& lut = ColormapLut::batlow());

// `tp,h0,...,h100` header plus one line per row.
std::string grid_to_csv(const ContourGrid& grid);

}  // namespace pheno
