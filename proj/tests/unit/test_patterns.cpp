#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "slscan/decode.hpp"
#include "slscan/patterns.hpp"

namespace slscan {
namespace {

TEST(Patterns, PhaseOriginIsPeak) {
  PatternSpec spec = testing::pattern(Orientation::vertical, 3, 1);
  const PatternSequence seq = generate(spec);
  EXPECT_EQ(seq.image(FringeSet::high, 0)(0, 0), 1.0);
  EXPECT_EQ(seq.image(FringeSet::unit, 0)(0, 17), 1.0);
}

TEST(Patterns, SecondStepAtOrigin) {
  const PatternSequence seq = generate(testing::pattern());
  EXPECT_NEAR(seq.image(FringeSet::high, 1)(0, 0), 0.25, 1e-15);
}

TEST(Patterns, WavelengthAndPeriod) {
  const PatternSpec spec = testing::pattern();
  EXPECT_EQ(spec.wavelength(), 57.0);
  const PatternSequence seq = generate(spec);
  const ImageD& img = seq.image(FringeSet::high, 0);
  for (int x = 0; x + 57 < spec.projector_width; x += 7) EXPECT_NEAR(img(x, 3), img(x + 57, 3), 1e-12);
}

TEST(Patterns, FractionalWavelengthAllowed) {
  PatternSpec spec = testing::pattern(Orientation::vertical, 3, 17);
  EXPECT_NEAR(spec.wavelength(), 912.0 / 17.0, 1e-15);
  EXPECT_NO_THROW(generate(spec));
}

TEST(Patterns, ConstantAcrossPropagation) {
  const PatternSequence v = generate(testing::pattern(Orientation::vertical));
  const PatternSequence h = generate(testing::pattern(Orientation::horizontal));
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(v.images[i](100, 0), v.images[i](100, 1139));
    EXPECT_EQ(h.images[i](0, 200), h.images[i](911, 200));
  }
}

TEST(Patterns, SequenceLayout) {
  const PatternSequence seq = generate(testing::pattern(Orientation::horizontal, 5, 8));
  ASSERT_EQ(seq.images.size(), 10u);
  for (const auto& img : seq.images) {
    EXPECT_EQ(img.width(), 912);
    EXPECT_EQ(img.height(), 1140);
  }
  EXPECT_EQ(&seq.image(FringeSet::unit, 2), &seq.images[7]);
}

TEST(Patterns, InvalidSpecRejected) {
  EXPECT_THROW(generate(testing::pattern(Orientation::vertical, 2, 16)), ConfigError);
  EXPECT_THROW(generate(testing::pattern(Orientation::vertical, 3, 0)), ConfigError);
}

TEST(Quantize, Endpoints) {
  EXPECT_EQ(quantize_value(1.0, 8), 1.0);
  EXPECT_EQ(quantize_value(0.0, 8), 0.0);
}

TEST(Quantize, HalfRoundsUp) { EXPECT_EQ(quantize_value(0.5, 8), 128.0 / 255.0); }

TEST(Quantize, Idempotent) {
  const PatternSequence seq = generate(testing::pattern());
  for (int bits : {8, 10, 12, 16}) {
    const PatternSequence once = quantize(seq, bits);
    const PatternSequence twice = quantize(once, bits);
    EXPECT_EQ(once.images, twice.images) << bits;
    EXPECT_EQ(once.quantized_bits, bits);
  }
}

TEST(Quantize, UnsupportedDepthRejected) {
  EXPECT_THROW(quantize(generate(testing::pattern()), 9), ConfigError);
}

TEST(Quantize, PeriodMeanIsHalf) {
  const PatternSpec spec = testing::pattern();
  const PatternSequence raw = generate(spec);
  for (int bits : {8, 10, 12, 16}) {
    const PatternSequence seq = quantize(raw, bits);
    for (int step = 0; step < spec.steps; ++step) {
      const ImageD& img = seq.image(FringeSet::high, step);
      for (int start : {0, 13, 300}) {
        double sum = 0.0;
        for (int x = start; x < start + 57; ++x) sum += img(x, 0);
        EXPECT_NEAR(sum / 57.0, 0.5, 1.0 / std::ldexp(1.0, bits)) << bits << " " << step << " " << start;
      }
    }
  }
}

TEST(Patterns, DecodeRecoversAnalyticPhase) {
  for (int steps : {3, 4, 7}) {
    const PatternSpec spec = testing::pattern(Orientation::vertical, steps, 16);
    const PatternSequence seq = generate(spec);
    std::vector<ImageHandle> high;
    for (int i = 0; i < steps; ++i) high.push_back(make_handle(seq.image(FringeSet::high, i)));
    const WrappedPhase w = wrapped_phase(high);
    double worst = 0.0;
    for (int x = 0; x < spec.projector_width; ++x) {
      const double truth = kTwoPi * 16.0 * x / spec.projector_width;
      worst = std::max(worst, std::abs(testing::angle_diff(w.phase(x, 5), truth)));
    }
    EXPECT_LT(worst, 1e-9) << steps;
  }
}

TEST(Patterns, FileNames) {
  EXPECT_EQ(pattern_file_name(FringeSet::high, 0), "pat_hf_1.pgm");
  EXPECT_EQ(pattern_file_name(FringeSet::unit, 2, "png"), "pat_uf_3.png");
}

}  // namespace
}  // namespace slscan
