// Copyright 2026 The CortexLoop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cortexloop/errors.hpp"
#include "cortexloop/signal.hpp"
#include "cortexloop/signal_io.hpp"
#include "filter_probe.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace cortexloop {
namespace {

SignalConfig one_channel() {
  SignalConfig c;
  c.n_channels = 1;
  return c;
}

TEST(SignalConfig, DefaultsMatchAcquisitionSettings) {
  const SignalConfig c;
  EXPECT_EQ(c.n_channels, 14);
  EXPECT_DOUBLE_EQ(c.sample_rate_hz, 128.0);
  EXPECT_DOUBLE_EQ(c.highpass_hz, 0.16);
  EXPECT_DOUBLE_EQ(c.lowpass_hz, 30.0);
  EXPECT_EQ(c.lag_count, 5);
  EXPECT_EQ(c.lag_stride, 1);
  EXPECT_EQ(c.feature_length(), 85);
  EXPECT_NO_THROW(c.validate());
}

TEST(SignalConfig, RejectsInvertedBandAndLongWindow) {
  SignalConfig c;
  c.lowpass_hz = 70.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SignalConfig{};
  c.highpass_hz = 40.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SignalConfig{};
  c.lag_count = 32;
  c.lag_stride = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SignalConfig{};
  c.n_channels = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SignalConfig, JsonRoundTrip) {
  SignalConfig c;
  c.n_channels = 3;
  c.lag_stride = 2;
  const nlohmann::json j = c;
  EXPECT_EQ(j.get<SignalConfig>(), c);
}

TEST(BandFilter, RejectsDc) {
  const auto cfg = one_channel();
  BandFilter f(cfg);
  double y = 0;
  for (SampleIndex t = 0; t < 20 * 128; ++t) y = f.step({t, {3.0}}).voltages[0];
  EXPECT_LT(std::abs(y) / 3.0, 0.01);  // below -40 dB
}

TEST(BandFilter, HalfPowerAtHighpassCutoff) {
  const double g = probe::measured_gain(0.16, one_channel());
  EXPECT_NEAR(oracle::db(g), oracle::db(1.0 / std::sqrt(2.0)), 0.5);
}

TEST(BandFilter, PassbandAtFiveHertz) {
  const double g = probe::measured_gain(5.0, one_channel());
  EXPECT_GE(g, 0.9);
  EXPECT_LE(g, 1.0);
}

TEST(BandFilter, MatchesAnalogProductAtLogSpacedProbes) {
  const auto cfg = one_channel();
  for (int i = 0; i < 10; ++i) {
    const double f = 0.05 * std::pow(30.0 / 0.05, i / 9.0);
    EXPECT_NEAR(oracle::db(probe::measured_gain(f, cfg)),
                oracle::db(oracle::analog_product(f, cfg.highpass_hz, cfg.lowpass_hz)), 0.5)
        << "f=" << f;
  }
}

TEST(BandFilter, IsLinear) {
  SignalConfig cfg;
  cfg.n_channels = 3;
  BandFilter fx(cfg), fy(cfg), fz(cfg);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  const double a = 1.7, b = -0.4;
  for (SampleIndex t = 0; t < 2000; ++t) {
    std::vector<double> x(3), y(3), z(3);
    for (int n = 0; n < 3; ++n) {
      x[n] = g(rng);
      y[n] = g(rng);
      z[n] = a * x[n] + b * y[n];
    }
    const auto ox = fx.step({t, x}).voltages;
    const auto oy = fy.step({t, y}).voltages;
    const auto oz = fz.step({t, z}).voltages;
    for (int n = 0; n < 3; ++n) ASSERT_NEAR(oz[n], a * ox[n] + b * oy[n], 1e-9);
  }
}

TEST(BandFilter, ResetRestoresFreshState) {
  const auto cfg = one_channel();
  BandFilter f(cfg);
  const auto first = f.step({0, {1.0}}).voltages[0];
  f.step({1, {5.0}});
  f.reset();
  EXPECT_EQ(f.step({0, {1.0}}).voltages[0], first);
}

TEST(BandFilter, ChannelMismatchAndNonFiniteInput) {
  SignalConfig cfg;
  cfg.n_channels = 2;
  BandFilter f(cfg);
  EXPECT_THROW(f.step({0, {1.0}}), ConfigError);
  try {
    f.step({7, {1.0, std::nan("")}});
    FAIL() << "expected SignalError";
  } catch (const SignalError& e) {
    EXPECT_EQ(e.channel(), 1);
    EXPECT_EQ(e.t(), 7u);
  }
}

TEST(FirstOrderSection, CoefficientsFromPrewarpedBilinear) {
  const double k = std::tan(std::numbers::pi * 30.0 / 128.0);
  FirstOrderSection lp(FirstOrderSection::Kind::kLowPass, 30.0, 128.0);
  EXPECT_NEAR(lp.b0(), k / (1 + k), 1e-15);
  EXPECT_NEAR(lp.b1(), k / (1 + k), 1e-15);
  EXPECT_NEAR(lp.a1(), (k - 1) / (1 + k), 1e-15);
  FirstOrderSection hp(FirstOrderSection::Kind::kHighPass, 30.0, 128.0);
  EXPECT_NEAR(hp.b0(), 1 / (1 + k), 1e-15);
  EXPECT_NEAR(hp.b1(), -1 / (1 + k), 1e-15);
}

TEST(LagWindow, ColdUntilFull) {
  const SignalConfig cfg;
  LagWindow w(cfg);
  w.push({0, std::vector<double>(14, 0.0)});
  EXPECT_EQ(w.size(), 1u);
  EXPECT_FALSE(w.warm());
  EXPECT_THROW(w.feature_vector(), NotReadyError);
}

TEST(LagWindow, EvictsOldestFrame) {
  const SignalConfig cfg;
  LagWindow w(cfg);
  for (SampleIndex t = 0; t <= 6; ++t) w.push({t, std::vector<double>(14, 0.0)});
  ASSERT_TRUE(w.warm());
  ASSERT_EQ(w.size(), 6u);
  EXPECT_EQ(w.frames().front().t, 1u);
  EXPECT_EQ(w.frames().back().t, 6u);
}

TEST(LagWindow, GapIsSequencingError) {
  const SignalConfig cfg;
  LagWindow w(cfg);
  for (SampleIndex t = 0; t <= 5; ++t) w.push({t, std::vector<double>(14, 0.0)});
  EXPECT_THROW(w.push({9, std::vector<double>(14, 0.0)}), SequencingError);
}

TEST(LagWindow, SingleChannelNoLag) {
  SignalConfig cfg;
  cfg.n_channels = 1;
  cfg.lag_count = 0;
  LagWindow w(cfg);
  w.push({0, {3.5}});
  EXPECT_EQ(w.feature_vector(), (std::vector<double>{1.0, 3.5}));
}

TEST(LagWindow, FeatureLayout) {
  SignalConfig cfg;
  cfg.n_channels = 2;
  cfg.lag_count = 1;
  LagWindow w(cfg);
  w.push({0, {1, 2}});
  w.push({1, {3, 4}});
  EXPECT_EQ(w.feature_vector(), (std::vector<double>{1, 3, 1, 4, 2}));
  EXPECT_EQ(feature_index(cfg, 1, 1), 4);
}

TEST(LagWindow, StrideSkipsSamples) {
  SignalConfig cfg;
  cfg.n_channels = 1;
  cfg.lag_count = 2;
  cfg.lag_stride = 2;
  LagWindow w(cfg);
  for (SampleIndex t = 0; t < 5; ++t) w.push({t, {static_cast<double>(t)}});
  EXPECT_EQ(w.feature_vector(), (std::vector<double>{1, 4, 2, 0}));
}

TEST(LagWindow, DefaultShapeLengthAndOrder) {
  const SignalConfig cfg;
  LagWindow w(cfg);
  for (SampleIndex t = 0; t < 40; ++t) {
    w.push({t, std::vector<double>(14, static_cast<double>(t))});
    for (std::size_t i = 1; i < w.frames().size(); ++i)
      ASSERT_EQ(w.frames()[i].t, w.frames()[i - 1].t + 1);
    if (w.warm()) {
      ASSERT_EQ(w.feature_vector().size(), 85u);
    }
  }
}

TEST(LagWindow, ChannelPermutationPermutesBlocks) {
  SignalConfig cfg;
  cfg.n_channels = 4;
  cfg.lag_count = 2;
  const std::vector<int> perm{2, 0, 3, 1};
  LagWindow a(cfg), b(cfg);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (SampleIndex t = 0; t < 10; ++t) {
    std::vector<double> x(4), y(4);
    for (auto& v : x) v = g(rng);
    for (int n = 0; n < 4; ++n) y[n] = x[perm[n]];
    a.push({t, x});
    b.push({t, y});
  }
  const auto fa = a.feature_vector(), fb = b.feature_vector();
  EXPECT_EQ(fa[0], fb[0]);
  for (int n = 0; n < 4; ++n)
    for (int k = 0; k <= 2; ++k)
      EXPECT_EQ(fb[feature_index(cfg, n, k)], fa[feature_index(cfg, perm[n], k)]);
}

TEST(SignalFile, RoundTripIsBitExact) {
  testing::TempDir dir("sig");
  SignalConfig cfg;
  cfg.n_channels = 3;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1e3);
  std::vector<SampleFrame> frames;
  {
    SignalFileWriter w(dir / "s.csv", cfg, SignalDomain::kRaw);
    for (SampleIndex t = 0; t < 1000; ++t) {
      SampleFrame f{t, {g(rng), g(rng) * 1e-9, g(rng)}};
      w.write(f);
      frames.push_back(f);
    }
  }
  SignalConfig read_cfg;
  SignalDomain domain = SignalDomain::kAcquired;
  const auto back = read_signal_file(dir / "s.csv", &read_cfg, &domain);
  EXPECT_EQ(read_cfg, cfg);
  EXPECT_EQ(domain, SignalDomain::kRaw);
  ASSERT_EQ(back.size(), frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(back[i].t, frames[i].t);
    EXPECT_EQ(back[i].voltages, frames[i].voltages);
  }
}

TEST(SignalFile, ShortRowCitesLine) {
  testing::TempDir dir("sig");
  SignalConfig cfg;
  cfg.n_channels = 2;
  {
    std::ofstream out(dir / "bad.csv");
    out << "# " << nlohmann::json(cfg).dump() << "\n";
    out << "t,ch1,ch2\n0,1,2\n1,3\n";
  }
  SignalFileReader r(dir / "bad.csv");
  EXPECT_TRUE(r.next().has_value());
  try {
    r.next();
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
  }
}

TEST(SignalFile, MissingSidecarIsParseError) {
  testing::TempDir dir("sig");
  std::ofstream(dir / "x.csv") << "t,ch1\n0,1\n";
  EXPECT_THROW(SignalFileReader(dir / "x.csv"), ParseError);
}

TEST(SignalIo, ShortestDoubleFormattingRoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    EXPECT_EQ(parse_double(format_double(x)).value(), x);
  }
  EXPECT_FALSE(parse_double("1.5x").has_value());
  EXPECT_FALSE(parse_double("").has_value());
}

}  // namespace
}  // namespace cortexloop
