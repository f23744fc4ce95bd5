#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>

#include "pheno/datamodel.hpp"
#include "pheno/errors.hpp"
#include "pheno/image.hpp"
#include "pheno/textio.hpp"
#include "test_util.hpp"

using namespace pheno;

namespace {

// The binning table, transcribed column by column. Kept as text so the oracle
// shares nothing with the implementation's integer bins.
struct Column {
  const char* low;
  const char* high;
};
const Column kColumns[] = {{"1.6", "2.0"}, {"2.1", "2.3"}, {"2.4", "2.6"}, {"2.7", "2.9"},
                           {"3.0", "3.2"}, {"3.3", "3.5"}, {"3.6", "3.7"}, {"3.8", "3.9"}};
const std::map<SchemeName, std::vector<int>> kTable = {
    {SchemeName::SevenClass, {1, 2, 3, 4, 5, 6, 6, 7}},
    {SchemeName::FiveClass, {1, 2, 2, 3, 4, 4, 4, 5}},
    {SchemeName::FourClassFirst, {1, 2, 2, 3, 4, 4, 4, 4}},
    {SchemeName::FourClassSecond, {1, 2, 2, 3, 3, 4, 4, 4}},
};

int oracle_label(SchemeName scheme, const std::string& rating) {
  const double r = std::stod(rating);
  for (std::size_t c = 0; c < 8; ++c) {
    if (r >= std::stod(kColumns[c].low) - 1e-9 && r <= std::stod(kColumns[c].high) + 1e-9) {
      return kTable.at(scheme)[c];
    }
  }
  return -1;
}

std::vector<PlotRecord> labeled_records(int n) {
  std::vector<PlotRecord> out;
  char id[32];
  for (int i = 0; i < n; ++i) {
    PlotRecord r;
    std::snprintf(id, sizeof(id), "P%06d", i);
    r.plot_id = id;
    r.rm_tenths = kMinRatingTenths + i % (kMaxRatingTenths - kMinRatingTenths + 1);
    out.push_back(r);
  }
  return out;
}

void write_pixel_png(const std::filesystem::path& p) { write_png(p, RgbImage(2, 2, Rgb{0, 200, 0})); }

}  // namespace

TEST_CASE("every rating from 1.6 to 3.9 matches the binning table in all schemes") {
  int mismatches = 0;
  for (const auto& [name, labels] : kTable) {
    const auto& scheme = ClassScheme::get(name);
    for (int t = 16; t <= 39; ++t) {
      const std::string text = std::to_string(t / 10) + "." + std::to_string(t % 10);
      if (assign_label(std::stod(text), scheme) != oracle_label(name, text)) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("label examples") {
  CHECK(assign_label(1.9, ClassScheme::get(SchemeName::FiveClass)) == 1);
  CHECK(assign_label(3.0, ClassScheme::get(SchemeName::SevenClass)) == 5);
  CHECK(assign_label(2.4, ClassScheme::get(SchemeName::FourClassSecond)) == 2);
  CHECK(assign_label(3.6, ClassScheme::get(SchemeName::SevenClass)) == 6);
  CHECK(assign_label(3.5, ClassScheme::get(SchemeName::SevenClass)) == 6);
}

TEST_CASE("scheme structure: partition, contiguous labels, monotone") {
  const std::map<SchemeName, int> expected_k = {{SchemeName::SevenClass, 7},
                                                {SchemeName::FiveClass, 5},
                                                {SchemeName::FourClassFirst, 4},
                                                {SchemeName::FourClassSecond, 4}};
  for (const auto& [name, k] : expected_k) {
    const auto& s = ClassScheme::get(name);
    CHECK(s.num_classes() == k);
    std::set<int> labels;
    int prev = 0;
    int next_low = kMinRatingTenths;
    for (const auto& b : s.bins()) {
      CHECK(b.low_tenths == next_low);
      CHECK(b.high_tenths >= b.low_tenths);
      CHECK(b.label >= prev);
      prev = b.label;
      next_low = b.high_tenths + 1;
      labels.insert(b.label);
    }
    CHECK(next_low == kMaxRatingTenths + 1);
    CHECK(labels.size() == static_cast<std::size_t>(k));
    CHECK(*labels.begin() == 1);
    CHECK(*labels.rbegin() == k);
  }
}

TEST_CASE("ratings outside the table or off the one-decimal grid are rejected") {
  const auto& seven = ClassScheme::get(SchemeName::SevenClass);
  CHECK_THROWS_AS(assign_label(1.5, seven), DataError);
  CHECK_THROWS_AS(assign_label(4.0, seven), DataError);
  CHECK_THROWS_AS(assign_label(2.45, seven), DataError);
  CHECK_THROWS_AS(ClassScheme::parse("nine"), ConfigError);
  CHECK(ClassScheme::parse("Four-Second").name() == SchemeName::FourClassSecond);
}

TEST_CASE("split sizes") {
  const auto& seven = ClassScheme::get(SchemeName::SevenClass);
  SUBCASE("100 records -> 80/10/10") {
    const auto s = split_dataset(labeled_records(100), seven, 7);
    CHECK(s.train_ids.size() == 80);
    CHECK(s.val_ids.size() == 10);
    CHECK(s.test_ids.size() == 10);
  }
  SUBCASE("22043 records") {
    // floor(22043 / 10) = 2204 each for val and test; the rest is train.
    const auto s = split_dataset(labeled_records(22043), seven, 1);
    CHECK(s.val_ids.size() == 2204);
    CHECK(s.test_ids.size() == 2204);
    CHECK(s.train_ids.size() == 22043 - 2 * 2204);
    CHECK(std::abs(static_cast<long>(s.train_ids.size()) - 17634) <= 1);
  }
  SUBCASE("fewer than 10 labeled records") {
    CHECK_THROWS_AS(split_dataset(labeled_records(9), seven, 1), DataError);
  }
}

TEST_CASE("split is disjoint, covers the labeled set, stratified and deterministic") {
  const auto& seven = ClassScheme::get(SchemeName::SevenClass);
  auto records = labeled_records(700);
  PlotRecord unlabeled;
  unlabeled.plot_id = "UNLABELED";
  records.push_back(unlabeled);

  const auto a = split_dataset(records, seven, 99);
  const auto b = split_dataset(records, seven, 99);
  CHECK(split_to_json(a) == split_to_json(b));
  CHECK(split_to_json(a) != split_to_json(split_dataset(records, seven, 100)));

  std::set<std::string> all;
  for (const auto* ids : {&a.train_ids, &a.val_ids, &a.test_ids}) {
    for (const auto& id : *ids) CHECK(all.insert(id).second);
  }
  CHECK(all.size() == 700);
  CHECK(all.count("UNLABELED") == 0);

  std::map<int, int> total, train;
  std::map<std::string, int> label_of;
  for (const auto& r : records) {
    if (r.labeled()) label_of[r.plot_id] = seven.label_for_tenths(*r.rm_tenths);
  }
  for (const auto& [id, l] : label_of) ++total[l];
  for (const auto& id : a.train_ids) ++train[label_of[id]];
  for (const auto& [label, n] : total) {
    if (n < 20) continue;
    const double share = static_cast<double>(train[label]) / n;
    CHECK(share >= 0.75);
    CHECK(share <= 0.85);
  }
  std::set<int> in_test;
  for (const auto& id : a.test_ids) in_test.insert(label_of[id]);
  CHECK(in_test.size() == 7);

  const auto back = split_from_json(split_to_json(a));
  CHECK(back.train_ids == a.train_ids);
  CHECK(back.test_ids == a.test_ids);
  CHECK(back.seed == 99);
}

TEST_CASE("manifest loading") {
  testutil::TempDir dir("manifest");
  for (int p = 1; p <= 3; ++p) {
    for (int t = 1; t <= 3; ++t) {
      write_pixel_png(dir / ("img/p" + std::to_string(p) + "_" + std::to_string(t) + ".png"));
    }
  }
  const std::string header = "plot_id,year,field_id,generation,rm_rating,yield_mth,tp1,tp2,tp3\n";
  auto row = [](int p, const std::string& id, const std::string& rating = "2.5") {
    std::string s = id + ",2021,F1,F6," + rating + ",3.2";
    for (int t = 1; t <= 3; ++t) s += ",img/p" + std::to_string(p) + "_" + std::to_string(t) + ".png";
    return s + "\n";
  };

  SUBCASE("three valid rows") {
    write_text_file(dir / "m.csv", header + row(1, "A") + row(2, "B") + row(3, "C"));
    const auto recs = load_manifest(dir / "m.csv");
    REQUIRE(recs.size() == 3);
    CHECK(std::all_of(recs.begin(), recs.end(), [](const auto& r) { return r.valid; }));
    CHECK(recs[1].plot_id == "B");
    CHECK(*recs[0].rm_tenths == 25);
    CHECK(*recs[0].yield_mth == doctest::Approx(3.2));
    CHECK(recs[2].generation == Generation::F6);
  }
  SUBCASE("missing tp3 image -> flagged invalid, not dropped") {
    std::filesystem::remove(dir / "img/p1_3.png");
    write_text_file(dir / "m.csv", header + row(1, "A"));
    const auto recs = load_manifest(dir / "m.csv");
    REQUIRE(recs.size() == 1);
    CHECK_FALSE(recs[0].valid);
    CHECK(recs[0].invalid_reason.find("tp3") != std::string::npos);
  }
  SUBCASE("duplicate plot_id names the id") {
    write_text_file(dir / "m.csv", header + row(1, "B21_0007") + row(2, "B21_0007"));
    try {
      load_manifest(dir / "m.csv");
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("B21_0007") != std::string::npos);
    }
  }
  SUBCASE("malformed row reports row and column") {
    write_text_file(dir / "m.csv", header + row(1, "A") + row(2, "B", "abc"));
    try {
      load_manifest(dir / "m.csv");
      FAIL("expected an error");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 3") != std::string::npos);
      CHECK(msg.find("rm_rating") != std::string::npos);
    }
  }
  SUBCASE("rating out of range") {
    write_text_file(dir / "m.csv", header + row(1, "A", "4.2"));
    CHECK_THROWS_AS(load_manifest(dir / "m.csv"), DataError);
  }
  SUBCASE("duplicate timepoint reference") {
    write_text_file(dir / "m.csv", header + "A,2021,F1,F6,2.5,,img/p1_1.png,img/p1_1.png,img/p1_3.png\n");
    CHECK_THROWS_AS(load_manifest(dir / "m.csv"), DataError);
  }
  SUBCASE("unreadable path") { CHECK_THROWS_AS(load_manifest(dir / "nope.csv"), ConfigError); }
  SUBCASE("round trip through write_manifest") {
    write_text_file(dir / "m.csv", header + row(1, "A") + row(2, "B"));
    const auto recs = load_manifest(dir / "m.csv");
    write_manifest(dir / "m2.csv", recs);
    CHECK(read_text_file(dir / "m2.csv") == header +
                                                 "A,2021,F1,F6,2.5,3.200,img/p1_1.png,img/p1_2.png,img/p1_3.png\n"
                                                 "B,2021,F1,F6,2.5,3.200,img/p2_1.png,img/p2_2.png,img/p2_3.png\n");
  }
}
