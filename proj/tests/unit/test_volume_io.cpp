#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "inpaint_gan/errors.hpp"
#include "inpaint_gan/volume_io.hpp"
#include "test_support.hpp"

using namespace inpaint_gan;
using test_support::TempDir;

namespace {

Volume random_volume(Shape3 shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(-300.0f, 400.0f);
  Array3f a(shape);
  for (auto& v : a.storage()) v = d(rng);
  return {a, {0.7, 0.7, 2.5}, {-120.25, 33.0, -7.5}};
}

// Independent counting of the strict-majority rule.
bool majority_high(const std::vector<int>& s) {
  int high = 0;
  for (int v : s) high += v >= 4 ? 1 : 0;
  return high * 2 > static_cast<int>(s.size());
}

}  // namespace

TEST_SUITE("volume_io") {
  TEST_CASE("zero container loads as zero volume") {
    TempDir dir;
    const auto path = dir / "z.vol";
    test_support::write_text(path, R"({"dims":[2,2,2],"spacing":[1,1,2],"origin":[0,0,0],"dtype":"f32le"})" "\n" +
                                       std::string(32, '\0'));
    const auto v = load_volume(path);
    CHECK(v.voxels.shape() == Shape3{2, 2, 2});
    CHECK(v.voxels.max() == 0.0f);
    CHECK(v.voxels.min() == 0.0f);
    CHECK(v.spacing.z == 2.0);
  }

  TEST_CASE("saved file is header plus four bytes per voxel") {
    TempDir dir;
    const auto path = dir / "z.vol";
    save_volume({Array3f({2, 2, 2}), {1, 1, 2}, {0, 0, 0}}, path);
    const auto bytes = test_support::read_bytes(path);
    const auto newline = bytes.find('\n');
    REQUIRE(newline != std::string::npos);
    CHECK(bytes.size() - newline - 1 == 32);
  }

  TEST_CASE("round trip is exact and saving is deterministic") {
    TempDir dir;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto v = random_volume({3 + static_cast<std::int64_t>(seed), 4, 5}, seed);
      save_volume(v, dir / "a.vol");
      save_volume(v, dir / "b.vol");
      CHECK(test_support::read_bytes(dir / "a.vol") == test_support::read_bytes(dir / "b.vol"));
      const auto back = load_volume(dir / "a.vol");
      CHECK(back == v);
      save_volume(back, dir / "c.vol");
      CHECK(test_support::read_bytes(dir / "a.vol") == test_support::read_bytes(dir / "c.vol"));
    }
  }

  TEST_CASE("payload shorter or longer than declared is rejected") {
    TempDir dir;
    const std::string header = R"({"dims":[64,64,32],"spacing":[1,1,2],"origin":[0,0,0],"dtype":"f32le"})" "\n";
    test_support::write_text(dir / "short.vol", header + std::string(64 * 64 * 31 * 4, '\0'));
    CHECK_THROWS_AS(load_volume(dir / "short.vol"), FormatError);
    test_support::write_text(dir / "long.vol", header + std::string(64 * 64 * 32 * 4 + 1, '\0'));
    CHECK_THROWS_AS(load_volume(dir / "long.vol"), FormatError);
  }

  TEST_CASE("malformed headers and missing files") {
    TempDir dir;
    CHECK_THROWS_AS(load_volume(dir / "missing.vol"), IoError);
    test_support::write_text(dir / "bad.vol", "{not json\n");
    CHECK_THROWS_AS(load_volume(dir / "bad.vol"), FormatError);
    test_support::write_text(dir / "dtype.vol", R"({"dims":[1,1,1],"spacing":[1,1,1],"origin":[0,0,0],"dtype":"f64"})" "\n" +
                                                    std::string(8, '\0'));
    CHECK_THROWS_AS(load_volume(dir / "dtype.vol"), FormatError);
    test_support::write_text(dir / "spacing.vol", R"({"dims":[1,1,1],"spacing":[1,0,1],"origin":[0,0,0],"dtype":"f32le"})" "\n" +
                                                      std::string(4, '\0'));
    CHECK_THROWS_AS(load_volume(dir / "spacing.vol"), ValidationError);
  }

  TEST_CASE("NaN voxels are rejected on save") {
    TempDir dir;
    Volume v{Array3f({2, 2, 2}), {1, 1, 1}, {0, 0, 0}};
    v.voxels(1, 0, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(save_volume(v, dir / "nan.vol"), ValidationError);
    CHECK_FALSE(std::filesystem::exists(dir / "nan.vol"));
  }

  TEST_CASE("annotation rows map to fields") {
    TempDir dir;
    test_support::write_text(dir / "a.csv",
                             "volume_id,cx_mm,cy_mm,cz_mm,diameter_mm,scores\nvol01,12.5,30.0,-40.0,8.0,\"4;4;3;5\"\n");
    const auto rows = parse_annotations(dir / "a.csv");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].source_volume_id == "vol01");
    CHECK(rows[0].center_mm.x == 12.5);
    CHECK(rows[0].center_mm.z == -40.0);
    CHECK(rows[0].diameter_mm == 8.0);
    CHECK(rows[0].scores == std::vector<int>{4, 4, 3, 5});
  }

  TEST_CASE("header-only table is empty and column order is free") {
    TempDir dir;
    test_support::write_text(dir / "h.csv", "volume_id,cx_mm,cy_mm,cz_mm,diameter_mm,scores\n");
    CHECK(parse_annotations(dir / "h.csv").empty());
    test_support::write_text(dir / "o.csv", "scores,diameter_mm,volume_id,cz_mm,cy_mm,cx_mm\n1;2,5,v,3,2,1\n");
    const auto rows = parse_annotations(dir / "o.csv");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].center_mm.x == 1.0);
    CHECK(rows[0].center_mm.z == 3.0);
    CHECK(rows[0].scores == std::vector<int>{1, 2});
  }

  TEST_CASE("every bad row is reported with its line number") {
    TempDir dir;
    test_support::write_text(dir / "b.csv",
                             "volume_id,cx_mm,cy_mm,cz_mm,diameter_mm,scores\n"
                             "v1,0,0,0,8,4;6\n"
                             "v2,0,0,0,8,4;4\n"
                             "v3,0,0,0,-1,3\n"
                             "v4,0,x,0,8,3\n");
    try {
      parse_annotations(dir / "b.csv");
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("row 3") == std::string::npos);
      CHECK(msg.find("row 4") != std::string::npos);
      CHECK(msg.find("row 5") != std::string::npos);
    }
    test_support::write_text(dir / "u.csv", "volume_id,cx_mm,cy_mm,cz_mm,diameter_mm,scores,extra\n");
    CHECK_THROWS_AS(parse_annotations(dir / "u.csv"), ValidationError);
    test_support::write_text(dir / "m.csv", "volume_id,cx_mm,cy_mm,cz_mm,diameter_mm\n");
    CHECK_THROWS_AS(parse_annotations(dir / "m.csv"), ValidationError);
  }

  TEST_CASE("annotations survive a write/parse round trip") {
    TempDir dir;
    std::vector<NoduleAnnotation> rows = {{"a", {0.1, -2.0 / 3.0, 1e-7}, 12.345678901234567, {1, 5, 4}},
                                          {"b", {100.5, 0.0, -35.0}, 3.0, {4}}};
    write_annotations(rows, dir / "r.csv");
    CHECK((parse_annotations(dir / "r.csv") == rows));
  }

  TEST_CASE("consensus examples") {
    CHECK(consensus_malignancy(std::vector<int>{5, 5, 4, 4}) == Malignancy::malignant);
    CHECK(consensus_malignancy(std::vector<int>{1, 2, 3, 3}) == Malignancy::benign);
    CHECK(consensus_malignancy(std::vector<int>{4, 4, 3, 3}) == Malignancy::benign);
    CHECK_THROWS_AS(consensus_malignancy(std::vector<int>{}), ValidationError);
    CHECK_THROWS_AS(consensus_malignancy(std::vector<int>{0, 4}), ValidationError);
  }

  TEST_CASE("consensus matches the counting rule on every score list up to length 5") {
    long checked = 0;
    for (int len = 1; len <= 5; ++len) {
      std::vector<int> s(static_cast<std::size_t>(len), 1);
      while (true) {
        const bool expect = majority_high(s);
        const auto got = consensus_malignancy(s);
        CHECK((got == Malignancy::malignant) == expect);
        // permutation invariance
        auto r = s;
        std::reverse(r.begin(), r.end());
        CHECK(consensus_malignancy(r) == got);
        // monotone in each score
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (s[i] < 5 && got == Malignancy::malignant) {
            auto up = s;
            ++up[i];
            CHECK(consensus_malignancy(up) == Malignancy::malignant);
          }
        }
        ++checked;
        std::size_t k = 0;
        while (k < s.size() && s[k] == 5) s[k++] = 1;
        if (k == s.size()) break;
        ++s[k];
      }
    }
    CHECK(checked == 5 + 25 + 125 + 625 + 3125);
  }
}
