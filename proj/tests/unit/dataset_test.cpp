#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "qsbd/core/rng.hpp"
#include "qsbd/dataset/build.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace qsbd::data {
namespace {

BuildingRecord rect_record(const std::string& id, double x0, double y0, double x1, double y1,
                           const std::string& city = "a", int label = 0) {
  BuildingRecord r;
  r.id = id;
  r.city = city;
  r.label = label;
  r.footprint = geo::make_rectangle(x0, y0, x1, y1);
  r.centroid = geo::polygon_centroid(r.footprint);
  return r;
}

using oracle::Rect;
using oracle::random_rect;
using oracle::overlap;
using oracle::area;

// Raster whose cell value encodes its position as row*1000 + col.
geo::Raster index_raster(int w, int h, geo::GeoTransform t) {
  geo::Raster r(w, h, t);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) r.at(col, row) = static_cast<float>(row * 1000 + col);
  }
  return r;
}

}  // namespace

TEST(Label, FullOverlapAndDisjoint) {
  std::vector<BuildingRecord> recs{rect_record("b1", 0, 0, 10, 10), rect_record("b2", 20, 0, 30, 10)};
  label_buildings(recs, {geo::make_rectangle(0, 0, 10, 10)});
  EXPECT_EQ(recs[0].label, 1);
  EXPECT_EQ(recs[1].label, 0);
  label_buildings(recs, {geo::make_rectangle(100, 100, 110, 110)});
  EXPECT_EQ(recs[0].label, 0);
  EXPECT_EQ(recs[1].label, 0);
}

TEST(Label, MatchesOverlapRatioOracle) {
  Rng rng(21);
  for (int t = 0; t < 300; ++t) {
    const Rect f = random_rect(rng);
    std::vector<Rect> ds(1 + rng.index(3));
    for (auto& d : ds) d = random_rect(rng);
    const bool want = oracle::overlap_label(f, ds);
    std::vector<BuildingRecord> recs{rect_record("b", f.x0, f.y0, f.x1, f.y1)};
    std::vector<geo::Polygon> polys;
    for (const auto& d : ds) polys.push_back(geo::make_rectangle(d.x0, d.y0, d.x1, d.y1));
    label_buildings(recs, polys);
    ASSERT_EQ(recs[0].label, want ? 1 : 0) << "case " << t;
  }
}

TEST(JoinGem, SinglePointAndBisector) {
  geo::PointTable one{{"a"}, {{5, 5, {7.0}}}};
  std::vector<BuildingRecord> recs{rect_record("b1", 0, 0, 1, 1), rect_record("b2", 50, 50, 51, 51)};
  join_gem(recs, one);
  for (const auto& r : recs) EXPECT_EQ(r.gem_vector, std::vector<double>{7.0});
  geo::PointTable two{{"a"}, {{0, 0, {1.0}}, {10, 0, {2.0}}}};
  Rng rng(22);
  for (int t = 0; t < 100; ++t) {
    const double x = rng.uniform(-20, 30), y = rng.uniform(-20, 20);
    std::vector<BuildingRecord> rs{rect_record("b", x - 0.5, y - 0.5, x + 0.5, y + 0.5)};
    join_gem(rs, two);
    if (std::abs(x - 5.0) > 1e-9) {
      EXPECT_EQ(rs[0].gem_vector[0], x < 5.0 ? 1.0 : 2.0);
    }
  }
  geo::PointTable empty{{"a"}, {}};
  EXPECT_THROW(join_gem(recs, empty), Error);
}

TEST(JoinGem, MatchesLinearScan) {
  Rng rng(23);
  geo::PointTable table{{"v"}, {}};
  for (int i = 0; i < 50; ++i) table.records.push_back({rng.uniform(0, 1000), rng.uniform(0, 1000), {double(i)}});
  std::vector<BuildingRecord> recs;
  for (int i = 0; i < 500; ++i) {
    const double x = rng.uniform(0, 1000), y = rng.uniform(0, 1000);
    recs.push_back(rect_record("b" + std::to_string(i), x, y, x + 3, y + 2));
  }
  join_gem(recs, table);
  for (const auto& r : recs) {
    std::size_t best = 0;
    double bd = 1e300;
    for (std::size_t k = 0; k < table.records.size(); ++k) {
      const double d = std::hypot(table.records[k].x - r.centroid.x, table.records[k].y - r.centroid.y);
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    ASSERT_EQ(r.gem_vector[0], double(best));
  }
}

TEST(Patch, CenteredWindowRows) {
  const geo::GeoTransform t{0, 100, 1, 1};
  const auto r = index_raster(100, 100, t);
  const auto p = extract_patch(r, geo::pixel_center(t, 50, 50), 32);
  EXPECT_EQ(p.at(0, 0), 34 * 1000 + 34);
  EXPECT_EQ(p.at(31, 31), 65 * 1000 + 65);
}

TEST(Patch, CornerIsZeroPadded) {
  const geo::GeoTransform t{0, 100, 1, 1};
  auto r = index_raster(100, 100, t);
  for (auto& v : r.values) v += 1.0f;
  const auto p = extract_patch(r, geo::pixel_center(t, 0, 0), 32);
  for (int i = 0; i < 32; ++i) {
    for (int j = 0; j < 32; ++j) {
      if (i < 16 || j < 16) EXPECT_EQ(p.at(j, i), 0.0f);
      else EXPECT_EQ(p.at(j, i), float((i - 16) * 1000 + (j - 16) + 1));
    }
  }
}

TEST(Patch, ConstantNodataAndOutside) {
  const geo::GeoTransform t{0, 50, 2.5, 2.5};
  geo::Raster r(20, 20, t, -9999.0f, 3.5f);
  r.at(10, 10) = -9999.0f;
  const auto c = geo::pixel_center(t, 10, 10);
  const auto p = extract_patch(r, c, 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) EXPECT_EQ(p.at(j, i), (i == 4 && j == 4) ? 0.0f : 3.5f);
  }
  int warnings = 0;
  log::ScopedSink sink({log::Level::kWarn, [&](log::Level, const std::string&) { ++warnings; }});
  const auto out = extract_patch(r, {1e6, 1e6}, 8);
  for (float v : out.values) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(warnings, 1);
  EXPECT_THROW(extract_patch(r, c, 7), Error);
}

TEST(Patch, TranslationConsistent) {
  Rng rng(24);
  const geo::GeoTransform t{1000, 2000, 2.5, 2.5};
  auto r = index_raster(60, 60, t);
  for (int k = 0; k < 50; ++k) {
    const long dc = long(rng.index(7)) - 3, dr = long(rng.index(7)) - 3;
    const geo::Point c{1000 + rng.uniform(0, 150), 2000 - rng.uniform(0, 150)};
    // Shift the raster content by (dc, dr) pixels and move the centroid along.
    geo::Raster s = r;
    s.transform = geo::window_transform(t, -dc, -dr);
    const geo::Point c2{c.x - dc * 2.5, c.y + dr * 2.5};
    EXPECT_EQ(extract_patch(r, c, 16), extract_patch(s, c2, 16));
  }
}

TEST(Patch, MaskMatchesFootprint) {
  const geo::GeoTransform t{0, 100, 2.5, 2.5};
  geo::Raster r(40, 40, t);
  const auto fp = geo::make_rectangle(40, 40, 50, 47.5);
  const auto m = footprint_patch(r, fp, geo::polygon_centroid(fp), 32);
  int ones = 0;
  for (auto v : m.values) ones += v;
  EXPECT_EQ(ones, 4 * 3);
}

TEST(Patch, ResampleOnSameGridEqualsExtract) {
  const geo::GeoTransform t{10, 300, 2.5, 2.5};
  const auto r = index_raster(80, 80, t);
  for (const geo::Point c : {geo::Point{60.3, 210.9}, geo::Point{11, 299}, geo::Point{205, 105}}) {
    EXPECT_EQ(resample_patch(r, r, c, 32).values, extract_patch(r, c, 32).values);
  }
}

TEST(Patch, ResampleCoarserGridCoversSameGround) {
  // 5 m source under a 2.5 m reference sharing the upper-left corner: each source
  // pixel fills a 2x2 block of the patch.
  const geo::Raster ref(100, 100, {0, 250, 2.5, 2.5});
  const auto src = index_raster(50, 50, {0, 250, 5, 5});
  const auto p = resample_patch(src, ref, geo::pixel_center(ref.transform, 50, 50), 32);
  // The window starts at reference pixel (34, 34), i.e. source pixel (17, 17).
  EXPECT_EQ(p.at(0, 0), 17 * 1000 + 17);
  EXPECT_EQ(p.at(1, 1), 17 * 1000 + 17);
  EXPECT_EQ(p.at(2, 0), 17 * 1000 + 18);
  EXPECT_EQ(p.at(31, 31), 32 * 1000 + 32);
  // Cells past the source edge are zero.
  const auto edge = resample_patch(src, ref, geo::pixel_center(ref.transform, 99, 99), 32);
  EXPECT_EQ(edge.at(31, 31), 0.0f);
  EXPECT_EQ(edge.at(0, 0), 41 * 1000 + 41);
}

TEST(Sampling, RatioAndCap) {
  std::vector<BuildingRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(rect_record("d" + std::to_string(i), 0, 0, 1, 1, "a", 1));
  for (int i = 0; i < 500; ++i) recs.push_back(rect_record("i" + std::to_string(i), 0, 0, 1, 1, "a", 0));
  for (int i = 0; i < 5; ++i) recs.push_back(rect_record("d" + std::to_string(i), 0, 0, 1, 1, "b", 1));
  for (int i = 0; i < 50; ++i) recs.push_back(rect_record("i" + std::to_string(i), 0, 0, 1, 1, "b", 0));
  const auto s = sample_negatives(recs, 20, 1);
  std::map<std::string, std::pair<int, int>> counts;
  for (const auto& r : s) (r.label ? counts[r.city].second : counts[r.city].first)++;
  EXPECT_EQ(counts["a"], std::make_pair(200, 10));
  EXPECT_EQ(counts["b"], std::make_pair(50, 5));
}

TEST(Sampling, SeededAndOrderIndependent) {
  std::vector<BuildingRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(rect_record("d" + std::to_string(i), 0, 0, 1, 1, "a", 1));
  for (int i = 0; i < 1000; ++i) recs.push_back(rect_record("i" + std::to_string(i), 0, 0, 1, 1, "a", 0));
  auto ids = [](const std::vector<BuildingRecord>& v) {
    std::vector<std::string> out;
    for (const auto& r : v) out.push_back(r.id);
    return out;
  };
  const auto a = ids(sample_negatives(recs, 20, 5));
  EXPECT_EQ(a, ids(sample_negatives(recs, 20, 5)));
  EXPECT_NE(a, ids(sample_negatives(recs, 20, 6)));
  Rng rng(25);
  rng.shuffle(recs);
  EXPECT_EQ(a, ids(sample_negatives(recs, 20, 5)));
  EXPECT_THROW(sample_negatives(recs, 0.5, 5), Error);
}

TEST(GemNorm, HandComputedZScores) {
  std::vector<BuildingRecord> recs(3);
  for (int i = 0; i < 3; ++i) recs[i].gem_vector = {double(i + 1), 4.0};
  const auto [rows, stats] = normalize_gem(recs);
  EXPECT_DOUBLE_EQ(stats.mean[0], 2.0);
  EXPECT_NEAR(stats.std[0], std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(rows[0][0], -1.2247449, 1e-6);
  EXPECT_EQ(rows[1][0], 0.0f);
  EXPECT_NEAR(rows[2][0], 1.2247449, 1e-6);
  EXPECT_TRUE(stats.constant[1]);
  EXPECT_FALSE(stats.constant[0]);
  for (const auto& r : rows) EXPECT_EQ(r[1], 0.0f);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(stats.apply(recs[i].gem_vector), rows[i]);
}

TEST(Median, EvenAndOdd) {
  std::vector<float> a{5, 1, 3};
  subtract_median(a);
  EXPECT_EQ(a, (std::vector<float>{2, -2, 0}));
  std::vector<float> b{4, 1, 3, 2};
  subtract_median(b);
  EXPECT_EQ(b, (std::vector<float>{1.5, -1.5, 0.5, -0.5}));
}

namespace {

SampleSet tiny_set(Rng& rng, std::size_t n) {
  SampleSet set;
  set.manifest.patch_size = 4;
  set.manifest.gem_columns = {"a", "b"};
  set.manifest.gem_norm = {{0.5, 1.0}, {2.0, 3.0}, {false, false}};
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.building_id = "b" + std::to_string(rng.index(1000000));
    s.city = rng.uniform() < 0.5 ? "x" : "y";
    s.label = rng.uniform() < 0.2;
    for (int k = 0; k < 16; ++k) {
      s.sar.push_back(float(rng.normal()));
      s.dsm.push_back(float(rng.normal()));
      s.mask.push_back(rng.uniform() < 0.5);
    }
    s.gem = {float(rng.normal()), float(rng.normal())};
    set.samples.push_back(s);
  }
  return set;
}

}  // namespace

TEST(Store, RoundTripIsExact) {
  Rng rng(26);
  SampleSet set = tiny_set(rng, 40);
  const auto dir = testing::scratch_dir("store_rt");
  write_store(set, dir);
  const SampleSet back = read_store(dir);
  EXPECT_EQ(back.samples, set.samples);
  EXPECT_EQ(back.manifest.cities, set.manifest.cities);
  EXPECT_EQ(back.manifest.gem_norm.mean, set.manifest.gem_norm.mean);
  for (std::size_t i = 1; i < back.samples.size(); ++i) {
    const auto& a = back.samples[i - 1];
    const auto& b = back.samples[i];
    EXPECT_TRUE(a.city < b.city || (a.city == b.city && a.building_id <= b.building_id));
  }
}

TEST(Store, CorruptionIsManifestMismatch) {
  Rng rng(27);
  SampleSet set = tiny_set(rng, 10);
  const auto dir = testing::scratch_dir("store_bad");
  write_store(set, dir);
  {
    std::fstream f(dir / "samples.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x7f');
  }
  try {
    read_store(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kManifestMismatch);
  }
}

TEST(Build, EmptyDestroyedLayerWarnsAndYieldsNothing) {
  const auto dir = testing::scratch_dir("build_empty") / "town";
  std::filesystem::create_directories(dir);
  geo::Raster r(40, 40, {0, 100, 2.5, 2.5}, std::nullopt, 1.0f);
  geo::write_ascii_grid(r, dir / "sar.asc");
  geo::write_ascii_grid(r, dir / "dsm.asc");
  std::vector<geo::Feature> fps;
  for (int i = 0; i < 4; ++i) {
    geo::Feature f;
    f.polygon = geo::make_rectangle(10 + 20 * i, 20, 20 + 20 * i, 30);
    f.properties = {{"id", "b" + std::to_string(i)}};
    fps.push_back(f);
  }
  geo::write_feature_collection(fps, dir / "footprints.geojson");
  geo::write_feature_collection({}, dir / "destroyed.geojson");
  geo::write_point_table({{"v"}, {{0, 0, {1.0}}}}, dir / "gem.csv");
  std::vector<std::string> warnings;
  log::ScopedSink sink({log::Level::kWarn, [&](log::Level, const std::string& m) { warnings.push_back(m); }});
  const auto set = build_dataset(discover_scenes(dir.parent_path()), {});
  EXPECT_TRUE(set.samples.empty());
  EXPECT_EQ(set.manifest.record_count, 0u);
  EXPECT_FALSE(warnings.empty());

  // With one destroyed building the cap keeps all three intact ones.
  geo::write_feature_collection({fps[1]}, dir / "destroyed.geojson");
  const auto set2 = build_dataset(discover_scenes(dir.parent_path()), {});
  ASSERT_EQ(set2.samples.size(), 4u);
  EXPECT_EQ(set2.manifest.cities.at("town").damaged, 1u);
  EXPECT_EQ(set2.manifest.cities.at("town").intact, 3u);
}

}  // namespace qsbd::data
