#include "pheno/datamodel.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pheno/errors.hpp"
#include "pheno/rng.hpp"
#include "pheno/textio.hpp"

namespace pheno {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

bool parse_int(std::string_view text, int& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

// Largest-remainder apportionment of `total` seats over fractional quotas.
// Ties on remainder go to the lower index.
std::vector<std::size_t> apportion(const std::vector<double>& quotas, std::size_t total) {
  std::vector<std::size_t> seats(quotas.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < quotas.size(); ++i) {
    seats[i] = static_cast<std::size_t>(std::floor(quotas[i]));
    assigned += seats[i];
  }
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a] - std::floor(quotas[a]) > quotas[b] - std::floor(quotas[b]);
  });
  for (std::size_t k = 0; assigned < total && !order.empty(); k = (k + 1) % order.size()) {
    ++seats[order[k]];
    ++assigned;
  }
  // Only reachable when rounding pushed the floors above the target.
  for (auto it = order.rbegin(); assigned > total && it != order.rend(); ++it) {
    if (seats[*it] > 0) {
      --seats[*it];
      --assigned;
    }
  }
  return seats;
}

}  // namespace

std::string_view to_string(Generation g) {
  switch (g) {
    case Generation::F5: return "F5";
    case Generation::F6: return "F6";
    case Generation::F7: return "F7";
  }
  return "F6";
}

Generation parse_generation(std::string_view text) {
  if (text == "F5") return Generation::F5;
  if (text == "F6") return Generation::F6;
  if (text == "F7") return Generation::F7;
  throw DataError("unknown generation '" + std::string(text) + "' (expected F5, F6 or F7)");
}

int rating_to_tenths(double rating) {
  const double scaled = rating * 10.0;
  const double rounded = std::round(scaled);
  if (!std::isfinite(rating) || std::abs(scaled - rounded) > 1e-6) {
    std::ostringstream msg;
    msg << "rating " << rating << " is not a one-decimal value";
    throw DataError(msg.str());
  }
  return static_cast<int>(rounded);
}

ClassScheme::ClassScheme(SchemeName name, std::vector<RmBin> bins) : name_(name), bins_(std::move(bins)) {
  for (const auto& b : bins_) num_classes_ = std::max(num_classes_, b.label);
}

const ClassScheme& ClassScheme::get(SchemeName name) {
  // Columns of the binning table: 1.6-2.0, 2.1-2.3, 2.4-2.6, 2.7-2.9,
  // 3.0-3.2, 3.3-3.5, 3.6-3.7, 3.8-3.9.
  static const std::array<std::pair<int, int>, 8> kColumns{
      {{16, 20}, {21, 23}, {24, 26}, {27, 29}, {30, 32}, {33, 35}, {36, 37}, {38, 39}}};
  auto make = [](SchemeName n, std::array<int, 8> labels) {
    std::vector<RmBin> bins;
    for (std::size_t i = 0; i < kColumns.size(); ++i) {
      bins.push_back({kColumns[i].first, kColumns[i].second, labels[i]});
    }
    return ClassScheme(n, std::move(bins));
  };
  static const ClassScheme seven = make(SchemeName::SevenClass, {1, 2, 3, 4, 5, 6, 6, 7});
  static const ClassScheme five = make(SchemeName::FiveClass, {1, 2, 2, 3, 4, 4, 4, 5});
  static const ClassScheme four_first = make(SchemeName::FourClassFirst, {1, 2, 2, 3, 4, 4, 4, 4});
  static const ClassScheme four_second = make(SchemeName::FourClassSecond, {1, 2, 2, 3, 3, 4, 4, 4});
  switch (name) {
    case SchemeName::SevenClass: return seven;
    case SchemeName::FiveClass: return five;
    case SchemeName::FourClassFirst: return four_first;
    case SchemeName::FourClassSecond: return four_second;
  }
  return seven;
}

const ClassScheme& ClassScheme::parse(std::string_view text) {
  const std::string key = lower(text);
  if (key == "seven" || key == "sevenclass" || key == "7") return get(SchemeName::SevenClass);
  if (key == "five" || key == "fiveclass" || key == "5") return get(SchemeName::FiveClass);
  if (key == "four-first" || key == "fourclassfirst") return get(SchemeName::FourClassFirst);
  if (key == "four-second" || key == "fourclasssecond") return get(SchemeName::FourClassSecond);
  throw ConfigError("unknown class scheme '" + std::string(text) +
                    "' (expected seven, five, four-first or four-second)");
}

std::string_view ClassScheme::key() const {
  switch (name_) {
    case SchemeName::SevenClass: return "seven";
    case SchemeName::FiveClass: return "five";
    case SchemeName::FourClassFirst: return "four-first";
    case SchemeName::FourClassSecond: return "four-second";
  }
  return "seven";
}

int ClassScheme::label_for_tenths(int tenths) const {
  for (const auto& b : bins_) {
    if (tenths >= b.low_tenths && tenths <= b.high_tenths) return b.label;
  }
  std::ostringstream msg;
  msg << "rating " << tenths / 10 << '.' << tenths % 10 << " lies outside every bin of scheme " << key();
  throw DataError(msg.str());
}

int assign_label(double rm_rating, const ClassScheme& scheme) {
  return scheme.label_for_tenths(rating_to_tenths(rm_rating));
}

DatasetSplit split_dataset(std::span<const PlotRecord> records, const ClassScheme& scheme,
                           std::uint64_t seed) {
  std::map<int, std::vector<std::string>> by_label;
  std::size_t labeled = 0;
  for (const auto& r : records) {
    if (!r.labeled()) continue;
    by_label[scheme.label_for_tenths(*r.rm_tenths)].push_back(r.plot_id);
    ++labeled;
  }
  if (labeled < 10) {
    throw DataError("split needs at least 10 labeled records, got " + std::to_string(labeled));
  }

  const std::size_t n_val = labeled / 10;
  const std::size_t n_test = labeled / 10;

  std::vector<int> labels;
  std::vector<double> holdout_quota;
  for (auto& [label, ids] : by_label) {
    std::sort(ids.begin(), ids.end());
    labels.push_back(label);
    holdout_quota.push_back(static_cast<double>(ids.size()) / 5.0);
  }
  const auto holdout = apportion(holdout_quota, n_val + n_test);

  std::vector<double> val_quota;
  for (auto h : holdout) val_quota.push_back(static_cast<double>(h) / 2.0);
  const auto val_counts = apportion(val_quota, n_val);

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto ids = by_label[labels[c]];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(labels[c])));
    rng.shuffle(ids);
    const std::size_t nv = val_counts[c];
    const std::size_t nt = holdout[c] - nv;
    split.val_ids.insert(split.val_ids.end(), ids.begin(), ids.begin() + nv);
    split.test_ids.insert(split.test_ids.end(), ids.begin() + nv, ids.begin() + nv + nt);
    split.train_ids.insert(split.train_ids.end(), ids.begin() + nv + nt, ids.end());
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.val_ids.begin(), split.val_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

std::string split_to_json(const DatasetSplit& split) {
  nlohmann::ordered_json j;
  j["seed"] = split.seed;
  j["train"] = split.train_ids;
  j["val"] = split.val_ids;
  j["test"] = split.test_ids;
  return j.dump(2) + "\n";
}

DatasetSplit split_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    DatasetSplit split;
    split.seed = j.at("seed").get<std::uint64_t>();
    split.train_ids = j.at("train").get<std::vector<std::string>>();
    split.val_ids = j.at("val").get<std::vector<std::string>>();
    split.test_ids = j.at("test").get<std::vector<std::string>>();
    return split;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  }
}

std::vector<PlotRecord> load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("manifest not found: " + path.string());
  const std::string text = read_text_file(path);
  const fs::path base = path.parent_path();

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line != "\r") {
      header = split_csv_line(line);
      break;
    }
  }
  static const std::array<std::string_view, 6> kFixed{"plot_id", "year", "field_id",
                                                      "generation", "rm_rating", "yield_mth"};
  if (header.size() < kFixed.size() + 1) {
    throw DataError("manifest header must be plot_id,year,field_id,generation,rm_rating,yield_mth,tp1..tpN");
  }
  for (std::size_t i = 0; i < kFixed.size(); ++i) {
    if (header[i] != kFixed[i]) {
      throw DataError("manifest header column " + std::to_string(i + 1) + " is '" + header[i] +
                      "', expected '" + std::string(kFixed[i]) + "'");
    }
  }
  for (std::size_t i = kFixed.size(); i < header.size(); ++i) {
    const std::string expected = "tp" + std::to_string(i - kFixed.size() + 1);
    if (header[i] != expected) {
      throw DataError("manifest header column " + std::to_string(i + 1) + " is '" + header[i] +
                      "', expected '" + expected + "'");
    }
  }

  std::vector<PlotRecord> records;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    auto fail = [&](std::size_t column, const std::string& what) -> DataError {
      return DataError("manifest row " + std::to_string(line_no) + ", column " + header[column] + ": " + what);
    };
    if (fields.size() != header.size()) {
      throw DataError("manifest row " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " columns, got " + std::to_string(fields.size()));
    }
    PlotRecord r;
    r.plot_id = fields[0];
    if (r.plot_id.empty()) throw fail(0, "empty plot_id");
    if (!parse_int(fields[1], r.year)) throw fail(1, "not an integer: '" + fields[1] + "'");
    r.field_id = fields[2];
    try {
      r.generation = parse_generation(fields[3]);
    } catch (const DataError& e) {
      throw fail(3, e.what());
    }
    if (!fields[4].empty()) {
      double rating = 0;
      if (!parse_double(fields[4], rating)) throw fail(4, "not a number: '" + fields[4] + "'");
      int tenths = 0;
      try {
        tenths = rating_to_tenths(rating);
      } catch (const DataError& e) {
        throw fail(4, e.what());
      }
      if (tenths < kMinRatingTenths || tenths > kMaxRatingTenths) {
        throw fail(4, "rating " + fields[4] + " outside [1.6, 3.9]");
      }
      r.rm_tenths = tenths;
    }
    if (!fields[5].empty()) {
      double y = 0;
      if (!parse_double(fields[5], y) || y < 0) throw fail(5, "not a non-negative number: '" + fields[5] + "'");
      r.yield_mth = y;
    }
    std::set<std::string> tp_seen;
    for (std::size_t i = kFixed.size(); i < fields.size(); ++i) {
      if (fields[i].empty()) throw fail(i, "empty image reference");
      if (!tp_seen.insert(fields[i]).second) throw fail(i, "duplicate image reference '" + fields[i] + "'");
      r.timepoints.push_back(fields[i]);
      const fs::path resolved = base / fields[i];
      r.resolved_timepoints.push_back(resolved);
      if (r.valid && !fs::exists(resolved)) {
        r.valid = false;
        r.invalid_reason = "missing image for " + header[i] + ": " + fields[i];
      }
    }
    if (!seen.insert(r.plot_id).second) {
      throw DataError("manifest row " + std::to_string(line_no) + ": duplicate plot_id " + r.plot_id);
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_manifest(const fs::path& path, std::span<const PlotRecord> records) {
  std::size_t tps = 0;
  for (const auto& r : records) tps = std::max(tps, r.timepoints.size());
  std::ostringstream out;
  out << "plot_id,year,field_id,generation,rm_rating,yield_mth";
  for (std::size_t t = 1; t <= tps; ++t) out << ",tp" << t;
  out << '\n';
  for (const auto& r : records) {
    if (r.timepoints.size() != tps) {
      throw DataError("plot " + r.plot_id + " has " + std::to_string(r.timepoints.size()) +
                      " timepoints, manifest expects " + std::to_string(tps));
    }
    out << csv_field(r.plot_id) << ',' << r.year << ',' << csv_field(r.field_id) << ','
        << to_string(r.generation) << ',';
    if (r.rm_tenths) out << *r.rm_tenths / 10 << '.' << *r.rm_tenths % 10;
    out << ',';
    if (r.yield_mth) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3f", *r.yield_mth);
      out << buf;
    }
    for (const auto& tp : r.timepoints) out << ',' << csv_field(tp);
    out << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace pheno
