#include <gtest/gtest.h>

#include <set>

#include "qsbd/training/protocol.hpp"

namespace qsbd::train {
namespace {

constexpr std::size_t kPatch = 8;

data::SampleSet make_set(std::size_t per_city, const std::vector<std::string>& cities, std::uint64_t seed) {
  Rng rng(seed);
  data::SampleSet set;
  set.manifest.patch_size = kPatch;
  set.manifest.gem_columns = {"a", "b"};
  for (const auto& city : cities) {
    for (std::size_t i = 0; i < per_city; ++i) {
      data::Sample s;
      s.building_id = city + "-" + std::to_string(i);
      s.city = city;
      s.label = i % 4 == 0 ? 1 : 0;
      s.sar.resize(kPatch * kPatch);
      s.dsm.resize(kPatch * kPatch);
      s.mask.assign(kPatch * kPatch, 0);
      for (auto& v : s.sar) v = static_cast<float>(rng.normal() + 1.5 * s.label);
      for (auto& v : s.dsm) v = static_cast<float>(rng.normal());
      for (std::size_t k = 20; k < 44; ++k) s.mask[k] = 1;
      s.gem = {static_cast<float>(rng.normal()), static_cast<float>(rng.normal())};
      set.samples.push_back(std::move(s));
    }
  }
  return set;
}

ProtocolConfig quick_config(std::size_t jobs = 1) {
  ProtocolConfig c;
  c.fusion = fusion::FusionConfig::make("compact", {}, 0);
  c.train.max_epochs = 3;
  c.train.batch_size = 16;
  c.train.seed = 11;
  c.jobs = jobs;
  return c;
}

}  // namespace

TEST(Protocol, CrossValidationCoversEverySampleOnce) {
  const auto set = make_set(40, {"x", "y"}, 1);
  const auto r = cross_validate(set, 4, 5, quick_config());
  ASSERT_EQ(r.folds.size(), 4u);
  std::multiset<std::string> seen;
  for (const auto& f : r.folds) {
    EXPECT_EQ(f.train_size + f.val_size + f.test_size, set.samples.size());
    for (const auto& p : f.predictions) seen.insert(p.building_id);
  }
  EXPECT_EQ(seen.size(), set.samples.size());
  for (const auto& s : set.samples) EXPECT_EQ(seen.count(s.building_id), 1u);

  const auto j = result_json(r);
  EXPECT_EQ(j.at("folds").size(), 4u);
  EXPECT_TRUE(j.at("metrics").contains("f1"));
  EXPECT_TRUE(j.at("fixed_threshold_metrics").contains("f1"));
}

TEST(Protocol, LeaveOneCityOutTestSetsAreCityPure) {
  const std::vector<std::string> cities{"a", "b", "c"};
  const auto set = make_set(24, cities, 2);
  const auto r = leave_one_city_out(set, quick_config());
  ASSERT_EQ(r.folds.size(), 3u);
  for (std::size_t i = 0; i < r.folds.size(); ++i) {
    const auto& f = r.folds[i];
    EXPECT_EQ(f.test_size, 24u);
    for (const auto& p : f.predictions) EXPECT_EQ(p.city, cities[i]);
    EXPECT_EQ(result_json(r).at("folds")[i].at("test_cities"), nlohmann::json::array({cities[i]}));
  }
}

TEST(Protocol, ParallelFoldsMatchSequential) {
  const auto set = make_set(40, {"x", "y"}, 3);
  const auto seq = result_json(cross_validate(set, 3, 9, quick_config(1)));
  const auto par = result_json(cross_validate(set, 3, 9, quick_config(3)));
  EXPECT_EQ(seq.dump(), par.dump());
}

TEST(Protocol, RejectsExposureWidthMismatch) {
  const auto set = make_set(40, {"x", "y"}, 4);
  auto cfg = quick_config();
  cfg.fusion = fusion::FusionConfig::make("compact", fusion::ModalitySet::all(), 5);
  try {
    cross_validate(set, 3, 1, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfigMismatch);
  }
}

TEST(ParallelFor, RethrowsWorkerError) {
  EXPECT_THROW(parallel_for(8, 3,
                            [](std::size_t i) {
                              if (i == 5) throw Error(ErrorKind::kInvalidArgument, "boom");
                            }),
               Error);
}

}  // namespace qsbd::train
