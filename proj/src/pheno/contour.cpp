#include "pheno/contour.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pheno/errors.hpp"
#include "pheno/textio.hpp"

namespace pheno {

std::string_view to_string(SubsetMode mode) {
  switch (mode) {
    case SubsetMode::All8: return "all8";
    case SubsetMode::Distributed6: return "distributed6";
    case SubsetMode::Distributed4: return "distributed4";
    case SubsetMode::Distributed3: return "distributed3";
    case SubsetMode::Last6: return "last6";
    case SubsetMode::Last4: return "last4";
    case SubsetMode::Last3: return "last3";
  }
  return "all8";
}

SubsetMode parse_subset_mode(std::string_view text) {
  for (auto mode : all_subset_modes()) {
    if (text == to_string(mode)) return mode;
  }
  throw ConfigError("unknown subset mode '" + std::string(text) +
                    "' (expected all8, distributed6, distributed4, distributed3, last6, last4, last3)");
}

const std::vector<SubsetMode>& all_subset_modes() {
  static const std::vector<SubsetMode> modes{SubsetMode::All8,         SubsetMode::Distributed6,
                                             SubsetMode::Distributed4, SubsetMode::Distributed3,
                                             SubsetMode::Last6,        SubsetMode::Last4,
                                             SubsetMode::Last3};
  return modes;
}

std::vector<int> subset_indices(SubsetMode mode) {
  switch (mode) {
    case SubsetMode::All8: return {1, 2, 3, 4, 5, 6, 7, 8};
    case SubsetMode::Distributed6: return {1, 2, 4, 5, 7, 8};
    case SubsetMode::Distributed4: return {1, 3, 5, 7};
    case SubsetMode::Distributed3: return {1, 4, 8};
    case SubsetMode::Last6: return {3, 4, 5, 6, 7, 8};
    case SubsetMode::Last4: return {5, 6, 7, 8};
    case SubsetMode::Last3: return {6, 7, 8};
  }
  return {};
}

std::vector<HueHistogram> temporal_subset(SubsetMode mode, std::span<const HueHistogram> histograms) {
  if (histograms.size() != kSubsetInputLength) {
    throw DataError("temporal subsets need exactly 8 timepoints, got " + std::to_string(histograms.size()));
  }
  std::vector<HueHistogram> out;
  for (int idx : subset_indices(mode)) out.push_back(histograms[static_cast<std::size_t>(idx - 1)]);
  return out;
}

double ContourGrid::max() const {
  return counts.empty() ? 0.0 : *std::max_element(counts.begin(), counts.end());
}

double ContourGrid::total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

ContourGrid build_grid(std::span<const HueHistogram> histograms, std::vector<int> timepoint_indices) {
  if (histograms.size() < 2) throw DataError("contour grid needs at least 2 histograms");
  if (timepoint_indices.empty()) {
    timepoint_indices.resize(histograms.size());
    std::iota(timepoint_indices.begin(), timepoint_indices.end(), 1);
  }
  if (timepoint_indices.size() != histograms.size()) {
    throw DataError("timepoint index list does not match histogram count");
  }
  ContourGrid grid;
  grid.rows = static_cast<int>(histograms.size());
  grid.timepoint_indices = std::move(timepoint_indices);
  grid.counts.assign(histograms.size() * kContourColumns, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < histograms.size(); ++r) {
    const auto& h = histograms[r];
    std::uint64_t sum = 0;
    for (int b = 0; b < kHueBins; ++b) {
      sum += h.counts[b];
      if (b < kContourColumns) {
        grid.counts[r * kContourColumns + b] = static_cast<double>(h.counts[b]);
      } else {
        grid.discarded_mass += static_cast<double>(h.counts[b]);
      }
    }
    if (sum != h.total_pixels) throw DataError("histogram counts do not sum to its pixel total");
    total += static_cast<double>(h.total_pixels);
  }
  grid.discarded_fraction = total > 0 ? grid.discarded_mass / total : 0.0;
  return grid;
}

std::vector<double> resize_bilinear(std::span<const double> src, int rows, int cols, int out_rows, int out_cols) {
  std::vector<double> out(static_cast<std::size_t>(out_rows) * out_cols);
  auto coord = [](int dst, int in, int outn, int& i0, int& i1, double& w) {
    double s = (dst + 0.5) * static_cast<double>(in) / outn - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    i0 = static_cast<int>(std::floor(s));
    i1 = std::min(i0 + 1, in - 1);
    w = s - i0;
  };
  for (int y = 0; y < out_rows; ++y) {
    int r0, r1;
    double wy;
    coord(y, rows, out_rows, r0, r1, wy);
    for (int x = 0; x < out_cols; ++x) {
      int c0, c1;
      double wx;
      coord(x, cols, out_cols, c0, c1, wx);
      const double top = src[static_cast<std::size_t>(r0) * cols + c0] * (1 - wx) +
                         src[static_cast<std::size_t>(r0) * cols + c1] * wx;
      const double bottom = src[static_cast<std::size_t>(r1) * cols + c0] * (1 - wx) +
                            src[static_cast<std::size_t>(r1) * cols + c1] * wx;
      out[static_cast<std::size_t>(y) * out_cols + x] = top * (1 - wy) + bottom * wy;
    }
  }
  return out;
}

RenderResult render(const ContourGrid& grid, const ColormapLut& lut, int width, int height) {
  if (grid.rows <= 0 || grid.counts.empty()) throw DataError("cannot render an empty grid");
  if (width <= 0 || height <= 0) throw ConfigError("render size must be positive");
  const double peak = grid.max();
  if (!(peak > 0.0)) return {RgbImage(width, height, lut[0]), true};

  std::vector<double> normalized(grid.counts.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) normalized[i] = grid.counts[i] / peak;
  auto field = resize_bilinear(normalized, grid.rows, kContourColumns, height, width);
  const double field_peak = *std::max_element(field.begin(), field.end());

  RgbImage image(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double v = field[static_cast<std::size_t>(y) * width + x] / field_peak;
      const auto idx = static_cast<std::size_t>(std::clamp(std::floor(v * 255.0), 0.0, 255.0));
      image.set(x, y, lut[idx]);
    }
  }
  return {std::move(image), false};
}

ContourPhenotype make_phenotype(std::span<const HueHistogram> histograms, SubsetMode mode,
                                const ColormapLut& lut) {
  const auto subset = temporal_subset(mode, histograms);
  ContourPhenotype p;
  p.grid = build_grid(subset, subset_indices(mode));
  auto rendered = render(p.grid, lut);
  p.rendered = std::move(rendered.image);
  p.degenerate = rendered.degenerate;
  return p;
}

std::string grid_to_csv(const ContourGrid& grid) {
  std::ostringstream out;
  out << "tp";
  for (int c = 0; c < kContourColumns; ++c) out << ",h" << c;
  out << '\n';
  for (int r = 0; r < grid.rows; ++r) {
    out << grid.timepoint_indices[static_cast<std::size_t>(r)];
    for (int c = 0; c < kContourColumns; ++c) out << ',' << format_double(grid.at(r, c));
    out << '\n';
  }
  return out.str();
}

}  // namespace pheno
