#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "slscan/error.hpp"
#include "slscan/sync.hpp"
#include "sync_oracle.hpp"

namespace slscan {
namespace {

using testing::brute_force;
using testing::OracleSet;
using testing::random_streams;
using testing::Streams;

constexpr double kDt = 1.0 / 30.0;

TEST(MatchImage, ExactHit) {
  EXPECT_TRUE(match_image(0.0, TriggerEvent{0.0, 0, 1}, SyncConfig::with_interval(kDt)));
}

TEST(MatchImage, ThirdPatternWithinTolerance) {
  const SyncConfig cfg = SyncConfig::with_interval(kDt);
  const TriggerEvent trig{0.0, 0, 3};
  EXPECT_NEAR(match_residual(0.0660, trig, cfg), -0.0006667, 1e-6);
  EXPECT_TRUE(match_image(0.0660, trig, cfg));
  EXPECT_NEAR(match_residual(0.0800, trig, cfg), 0.0133333, 1e-6);
  EXPECT_FALSE(match_image(0.0800, trig, cfg));
}

TEST(MatchImage, AsymmetricTolerances) {
  const SyncConfig cfg{0.1, 0.01, 0.03};
  const TriggerEvent trig{1.0, 0, 2};
  EXPECT_TRUE(match_image(1.1 - 0.0099, trig, cfg));
  EXPECT_FALSE(match_image(1.1 - 0.0101, trig, cfg));
  EXPECT_TRUE(match_image(1.1 + 0.0299, trig, cfg));
  EXPECT_FALSE(match_image(1.1 + 0.0301, trig, cfg));
}

TEST(SyncConfig, Validation) {
  EXPECT_THROW((SyncConfig{0.0, 0.0, 0.0}).validate(), ConfigError);
  EXPECT_THROW((SyncConfig{0.1, -0.01, 0.0}).validate(), ConfigError);
  EXPECT_THROW(FrameSetAssembler(0, SyncConfig{}), ConfigError);
}

std::vector<TriggerEvent> sequence_triggers(std::int64_t id, double t0, int n = 6) {
  std::vector<TriggerEvent> out;
  for (int i = 1; i <= n; ++i) out.push_back({t0, id, i});
  return out;
}

std::vector<TimedImage> exact_images(double t0, int n = 6, std::int64_t first_id = 0) {
  std::vector<TimedImage> out;
  for (int i = 0; i < n; ++i) out.push_back({t0 + i * kDt, first_id + i, nullptr});
  return out;
}

TEST(Assemble, ExactTimingGivesOneSet) {
  const SyncOutput out = assemble(sequence_triggers(7, 0.0), exact_images(0.0), 6, SyncConfig::with_interval(kDt));
  ASSERT_EQ(out.sets.size(), 1u);
  EXPECT_EQ(out.sets[0].sequence_id, 7);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(out.sets[0].images[i].id, i);
  EXPECT_TRUE(out.incomplete.empty());
  EXPECT_TRUE(out.unmatched_images.empty());
}

TEST(Assemble, DroppedImageReportsSlot) {
  std::vector<TimedImage> images = exact_images(0.0);
  images.erase(images.begin() + 3);
  const SyncOutput out = assemble(sequence_triggers(0, 0.0), images, 6, SyncConfig::with_interval(kDt));
  EXPECT_TRUE(out.sets.empty());
  ASSERT_EQ(out.incomplete.size(), 1u);
  EXPECT_EQ(out.incomplete[0].missing_slots, std::vector<int>{4});
  EXPECT_EQ(out.unmatched_images.size(), 5u);
}

TEST(Assemble, MissingTriggerReported) {
  std::vector<TriggerEvent> trig = sequence_triggers(0, 0.0);
  trig.erase(trig.begin() + 5);
  const SyncOutput out = assemble(trig, exact_images(0.0), 6, SyncConfig::with_interval(kDt));
  EXPECT_TRUE(out.sets.empty());
  ASSERT_EQ(out.incomplete.size(), 1u);
  EXPECT_EQ(out.incomplete[0].missing_slots, std::vector<int>{6});
}

TEST(Assemble, JitterWithinFifteenPercentStillCompletes) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> jitter(-0.15 * kDt, 0.15 * kDt);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TimedImage> images = exact_images(0.5);
    for (auto& im : images) im.t_c += jitter(rng);
    const SyncOutput out = assemble(sequence_triggers(0, 0.5), images, 6, SyncConfig::with_interval(kDt));
    ASSERT_EQ(out.sets.size(), 1u);
  }
}

TEST(Assemble, AmbiguityKeepsSmallestResidual) {
  std::vector<TimedImage> images = exact_images(0.0);
  images.insert(images.begin() + 2, TimedImage{2 * kDt - 0.1 * kDt, 100, nullptr});
  images[3].t_c += 0.05 * kDt;  // the original slot-3 image, now 0.05 dt late
  std::sort(images.begin(), images.end(), [](const auto& a, const auto& b) { return a.t_c < b.t_c; });
  const SyncOutput out = assemble(sequence_triggers(0, 0.0), images, 6, SyncConfig::with_interval(kDt));
  ASSERT_EQ(out.sets.size(), 1u);
  EXPECT_EQ(out.sets[0].images[2].id, 2);
  ASSERT_EQ(out.conflicts.size(), 1u);
  EXPECT_EQ(out.conflicts[0].pattern_index, 3);
  EXPECT_EQ(out.conflicts[0].kept_image, 2);
  EXPECT_EQ(out.conflicts[0].rejected_images, std::vector<std::int64_t>{100});
  EXPECT_EQ(out.unmatched_images, std::vector<std::int64_t>{100});
}

TEST(Assemble, ResidualTieGoesToEarlierImage) {
  // Binary-exact times so both residuals are exactly +-1/32.
  const SyncConfig cfg = SyncConfig::with_interval(0.25);
  std::vector<TimedImage> images;
  for (int i = 0; i < 6; ++i) images.push_back({0.25 * i, i, nullptr});
  images[1].t_c = 0.25 + 0.03125;
  images.insert(images.begin() + 1, TimedImage{0.25 - 0.03125, 50, nullptr});
  const SyncOutput out = assemble(sequence_triggers(0, 0.0), images, 6, cfg);
  ASSERT_EQ(out.sets.size(), 1u);
  EXPECT_EQ(out.sets[0].images[1].id, 50);
}

TEST(Assemble, SetsOrderedByFirstTrigger) {
  std::vector<TriggerEvent> trig;
  std::vector<TimedImage> images;
  // Sequence ids deliberately out of time order.
  const std::vector<std::int64_t> ids{5, 2, 9};
  for (std::size_t s = 0; s < ids.size(); ++s) {
    const double t0 = 0.2 * static_cast<double>(s);
    for (const auto& t : sequence_triggers(ids[s], t0)) trig.push_back(t);
    for (const auto& im : exact_images(t0, 6, static_cast<std::int64_t>(10 * s))) images.push_back(im);
  }
  const SyncOutput out = assemble(trig, images, 6, SyncConfig::with_interval(kDt));
  ASSERT_EQ(out.sets.size(), 3u);
  for (std::size_t s = 0; s < ids.size(); ++s) EXPECT_EQ(out.sets[s].sequence_id, ids[s]);
}

TEST(Assembler, EmitsSetBeforeFlushOnceWindowCloses) {
  FrameSetAssembler a(6, SyncConfig::with_interval(kDt));
  for (const auto& t : sequence_triggers(0, 0.0)) a.push_trigger(t);
  for (auto& im : exact_images(0.0)) a.push_image(im);
  EXPECT_TRUE(a.take().sets.empty());  // slot 6 still open
  a.push_image({0.3, 99, nullptr});
  const SyncOutput out = a.take();
  EXPECT_EQ(out.sets.size(), 1u);
}

TEST(Assembler, RejectsBadTriggers) {
  FrameSetAssembler a(6, SyncConfig::with_interval(kDt));
  EXPECT_THROW(a.push_trigger({0.0, 0, 0}), DataError);
  EXPECT_THROW(a.push_trigger({0.0, 0, 7}), DataError);
  EXPECT_THROW(a.push_trigger({NAN, 0, 1}), DataError);
  EXPECT_THROW(a.push_image({INFINITY, 0, nullptr}), DataError);
}

TEST(AssembleProperty, AgreesWithBruteForceMatcher) {
  std::mt19937_64 rng(2024);
  const SyncConfig cfg = SyncConfig::with_interval(kDt);
  std::size_t total_sets = 0, total_incomplete = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int seq_len = trial % 2 ? 6 : 4;
    const Streams s = random_streams(rng, seq_len, 8);
    const SyncOutput out = assemble(s.triggers, s.images, seq_len, cfg);
    const std::vector<OracleSet> expected = brute_force(s, seq_len, cfg);

    ASSERT_EQ(out.sets.size(), expected.size()) << "trial " << trial;
    std::set<std::int64_t> used;
    for (std::size_t k = 0; k < out.sets.size(); ++k) {
      const SyncedSet& set = out.sets[k];
      EXPECT_EQ(set.sequence_id, expected[k].sequence);
      ASSERT_EQ(static_cast<int>(set.images.size()), seq_len);  // completeness only
      for (int i = 0; i < seq_len; ++i) {
        EXPECT_EQ(set.images[static_cast<std::size_t>(i)].id, expected[k].ids[static_cast<std::size_t>(i)]);
        EXPECT_TRUE(used.insert(set.images[static_cast<std::size_t>(i)].id).second) << "image reused";
        EXPECT_TRUE(match_image(set.images[static_cast<std::size_t>(i)].t_c, TriggerEvent{set.first_trigger_time, 0, i + 1}, cfg));
      }
      if (k > 0) {
        EXPECT_LE(out.sets[k - 1].first_trigger_time, set.first_trigger_time);
      }
    }
    // Every image is accounted for exactly once.
    std::size_t accounted = out.unmatched_images.size();
    for (const auto& set : out.sets) accounted += set.images.size();
    EXPECT_EQ(accounted, s.images.size());
    total_sets += out.sets.size();
    total_incomplete += out.incomplete.size();
  }
  // The generator exercises both outcomes.
  EXPECT_GT(total_sets, 300u);
  EXPECT_GT(total_incomplete, 300u);
}

TEST(AssembleProperty, StreamingMatchesBatch) {
  std::mt19937_64 rng(77);
  const SyncConfig cfg = SyncConfig::with_interval(kDt);
  for (int trial = 0; trial < 50; ++trial) {
    const Streams s = random_streams(rng, 6, 6);
    const SyncOutput batch = assemble(s.triggers, s.images, 6, cfg);
    FrameSetAssembler a(6, cfg);
    SyncOutput streamed;
    std::size_t ti = 0, ii = 0;
    while (ti < s.triggers.size() || ii < s.images.size()) {
      if (ii >= s.images.size() || (ti < s.triggers.size() && s.triggers[ti].t_p <= s.images[ii].t_c)) {
        a.push_trigger(s.triggers[ti++]);
      } else {
        a.push_image(s.images[ii++]);
      }
      SyncOutput part = a.take();
      for (auto& x : part.sets) streamed.sets.push_back(std::move(x));
    }
    a.flush();
    for (auto& x : a.take().sets) streamed.sets.push_back(std::move(x));
    ASSERT_EQ(streamed.sets.size(), batch.sets.size());
    for (std::size_t k = 0; k < batch.sets.size(); ++k) {
      EXPECT_EQ(streamed.sets[k].sequence_id, batch.sets[k].sequence_id);
    }
  }
}

TEST(AssembleProperty, WiderTolerancesNeverLoseSets) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const Streams s = random_streams(rng, 6, 6);
    std::size_t previous = 0;
    for (double frac : {0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.49}) {
      const SyncOutput out = assemble(s.triggers, s.images, 6, SyncConfig{kDt, frac * kDt, frac * kDt});
      EXPECT_GE(out.sets.size(), previous) << "trial " << trial << " tol " << frac;
      previous = out.sets.size();
    }
  }
}

}  // namespace
}  // namespace slscan
