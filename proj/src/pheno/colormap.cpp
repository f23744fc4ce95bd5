#include "pheno/colormap.hpp"

#include <charconv>
#include <sstream>

#include "pheno/errors.hpp"
#include "pheno/textio.hpp"

namespace pheno {

namespace detail {
extern const std::string_view kBatlowCsv;
}

ColormapLut ColormapLut::parse(std::string_view csv) {
  ColormapLut lut;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    int values[4];
    bool ok = fields.size() == 4;
    for (std::size_t i = 0; ok && i < 4; ++i) {
      const auto& f = fields[i];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[i]);
      ok = ec == std::errc() && ptr == f.data() + f.size();
    }
    if (!ok) throw DataError("colormap line " + std::to_string(count + 1) + ": expected index,r,g,b");
    if (values[0] != static_cast<int>(count)) {
      throw DataError("colormap line " + std::to_string(count + 1) + ": index " + std::to_string(values[0]) +
                      " out of order");
    }
    if (count >= kSize) throw DataError("colormap has more than 256 entries");
    for (int i = 1; i < 4; ++i) {
      if (values[i] < 0 || values[i] > 255) {
        throw DataError("colormap entry " + std::to_string(count) + ": channel out of range");
      }
    }
    lut.entries_[count] = Rgb{static_cast<std::uint8_t>(values[1]), static_cast<std::uint8_t>(values[2]),
                              static_cast<std::uint8_t>(values[3])};
    if (count > 0 && !(luma(lut.entries_[count]) > luma(lut.entries_[count - 1]))) {
      throw DataError("colormap luma not strictly increasing at entry " + std::to_string(count));
    }
    ++count;
  }
  if (count != kSize) throw DataError("colormap has " + std::to_string(count) + " entries, expected 256");
  return lut;
}

ColormapLut ColormapLut::load(const std::filesystem::path& path) { return parse(read_text_file(path)); }

const ColormapLut& ColormapLut::batlow() {
  static const ColormapLut lut = parse(detail::kBatlowCsv);
  return lut;
}

}  // namespace pheno
