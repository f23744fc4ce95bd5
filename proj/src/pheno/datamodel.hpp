#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pheno {

namespace fs = std::filesystem;

enum class Generation { F5, F6, F7 };

std::string_view to_string(Generation g);
Generation parse_generation(std::string_view text);

// RM ratings are one-decimal values; they are carried as integer tenths
// (1.9 -> 19) so bin edges compare exactly.
inline constexpr int kMinRatingTenths = 16;
inline constexpr int kMaxRatingTenths = 39;

// Converts a decimal rating to tenths. Throws DataError when the value is not
// a one-decimal number.
int rating_to_tenths(double rating);

struct PlotRecord {
  std::string plot_id;
  int year = 0;
  std::string field_id;
  Generation generation = Generation::F6;
  std::optional<int> rm_tenths;
  std::optional<double> yield_mth;
  // Image paths as written in the manifest (relative to the manifest dir).
  std::vector<std::string> timepoints;
  // Resolved on load; empty for records built in memory.
  std::vector<fs::path> resolved_timepoints;
  bool valid = true;
  std::string invalid_reason;

  bool labeled() const { return rm_tenths.has_value(); }
  double rm_rating() const { return rm_tenths.value_or(0) / 10.0; }
};

enum class SchemeName { SevenClass, FiveClass, FourClassFirst, FourClassSecond };

struct RmBin {
  int low_tenths;
  int high_tenths;
  int label;
};

// Rating-range to class-label table. The four built-in schemes each cover
// every rating from 1.6 to 3.9.
class ClassScheme {
 public:
  static const ClassScheme& get(SchemeName name);
  // Accepts "seven", "five", "four-first", "four-second" (and the enum
  // spellings, case-insensitive). Throws ConfigError otherwise.
  static const ClassScheme& parse(std::string_view text);

  SchemeName name() const { return name_; }
  std::string_view key() const;
  const std::vector<RmBin>& bins() const { return bins_; }
  int num_classes() const { return num_classes_; }

  // Throws DataError if no bin contains the rating.
  int label_for_tenths(int tenths) const;

 private:
  ClassScheme(SchemeName name, std::vector<RmBin> bins);

  SchemeName name_;
  std::vector<RmBin> bins_;
  int num_classes_ = 0;
};

int assign_label(double rm_rating, const ClassScheme& scheme);

struct DatasetSplit {
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
};

// Stratified 80/10/10 split over labeled records, deterministic given seed.
// Throws DataError for fewer than 10 labeled records.
DatasetSplit split_dataset(std::span<const PlotRecord> records, const ClassScheme& scheme,
                           std::uint64_t seed);

std::string split_to_json(const DatasetSplit& split);
DatasetSplit split_from_json(std::string_view text);

// CSV manifest: plot_id,year,field_id,generation,rm_rating,yield_mth,tp1..tpN.
// Records whose image files are missing come back with valid=false.
std::vector<PlotRecord> load_manifest(const fs::path& path);
void write_manifest(const fs::path& path, std::span<const PlotRecord> records);

}  // namespace pheno
