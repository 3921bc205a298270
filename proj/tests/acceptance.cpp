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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Thresholds are fixed here and must not be relaxed to make a run
// pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "cortexloop/decoder.hpp"
#include "cortexloop/errors.hpp"
#include "cortexloop/robot.hpp"
#include "cortexloop/session.hpp"
#include "cortexloop/signal.hpp"
#include "cortexloop/subject.hpp"
#include "filter_probe.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace cortexloop {
namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double hit_rate(const SessionResult& r) {
  int n = 0, hits = 0;
  for (const auto& run : r.runs)
    for (const auto& t : run) {
      ++n;
      hits += t.outcome == Outcome::kHit;
    }
  return n ? static_cast<double>(hits) / n : 0.0;
}

long trial_count(const SessionResult& r) {
  long n = 0;
  for (const auto& run : r.runs) n += static_cast<long>(run.size());
  return n;
}

// Noiseless subject, full-length training; the fitted map must reproduce the
// generative inverse on frames it never saw.
Verdict decoder_recovery() {
  SessionConfig cfg;
  cfg.scenario.subject.noise_sigma = 0.0;
  cfg.scenario.subject.background = 0.0;
  cfg.scenario.protocol.ridge_lambda = 1e-6;  // noiseless features span a 13-dim subspace
  cfg.scenario.protocol.test_trials = 0;
  const auto t0 = Clock::now();
  const auto result = run_session(cfg);
  const double runtime = seconds_since(t0);
  const DecoderModel& model = *result.model;

  const SignalConfig& sig = cfg.scenario.signal_config;
  SyntheticSubject subject(sig, cfg.scenario.resolved_subject(), 4242);
  const auto h = training_reference(Axis::kHorizontal, 60.0, 901, sig.sample_rate_hz);
  const auto v = training_reference(Axis::kVertical, 60.0, 902, sig.sample_rate_hz);
  LagWindow window(sig);
  std::vector<double> pu, pv, tu, tv;
  for (std::size_t i = 0; i < h.velocity.size(); ++i) {
    const auto frame = subject.gen_frame({h.velocity[i].u, v.velocity[i].v});
    window.push(frame);
    if (!window.warm()) continue;
    const Velocity predicted = model.predict(window.feature_vector());
    const Velocity truth = subject.invert(frame);
    pu.push_back(predicted.u);
    pv.push_back(predicted.v);
    tu.push_back(truth.u);
    tv.push_back(truth.v);
  }
  auto rms = [](const std::vector<double>& a) {
    double s = 0;
    for (double x : a) s += x * x;
    return std::sqrt(s / static_cast<double>(a.size()));
  };
  const double rx = pearson(pu, tu).value_or(0.0), ry = pearson(pv, tv).value_or(0.0);
  const double ex = rmse(pu, tu) / rms(tu), ey = rmse(pv, tv) / rms(tv);
  return {rx >= 0.999 && ry >= 0.999 && ex <= 1e-3 && ey <= 1e-3 && runtime < 10.0,
          fmt("r=(%.6f, %.6f) rmse/scale=(%.2e, %.2e) runtime=%.2fs", rx, ry, ex, ey,
              runtime)};
}

Verdict oracle_equivalence() {
  SignalConfig cfg;
  cfg.n_channels = 3;
  cfg.lag_count = 1;
  const int p = cfg.feature_length();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  oracle::Matrix x;
  std::vector<double> u, v;
  TrainingSet ts(p);
  for (int r = 0; r < 50; ++r) {
    std::vector<double> f(p);
    f[0] = 1.0;
    for (int c = 1; c < p; ++c) f[c] = g(rng);
    x.push_back(f);
    u.push_back(g(rng));
    v.push_back(g(rng));
    ts.add_row(f, u.back(), v.back(), 0);
  }
  const auto model = fit(ts, cfg);
  const auto ox = oracle::normal_equations(x, u), oy = oracle::normal_equations(x, v);
  double worst = 0.0;
  for (int i = 0; i < p; ++i)
    worst = std::max({worst, std::abs(model.axis_x[i] - ox[i]), std::abs(model.axis_y[i] - oy[i])});
  return {worst <= 1e-9, fmt("max |theta - oracle| = %.3e over 3ch K=1 50 rows", worst)};
}

Verdict success_table() {
  auto run = [](TestMode mode, int trials, double& secs) {
    SessionConfig cfg;
    cfg.scenario.protocol.test_trials = trials;
    cfg.scenario.protocol.timeout_s = 15.0;
    cfg.test_modes = {mode};
    const auto t0 = Clock::now();
    const auto r = run_session(cfg);
    secs = seconds_since(t0);
    if (trial_count(r) != trials) throw RuntimeFault("scored trial count mismatch");
    return hit_rate(r);
  };
  double sh = 0, sv = 0;
  const double h = run(TestMode::kHorizontal1D, 24, sh);
  const double v = run(TestMode::kVertical1D, 30, sv);
  return {h >= 0.95 && v < h && v >= 0.60 && sh < 60.0 && sv < 60.0,
          fmt("horizontal %.1f%% of 24 (%.2fs), vertical %.1f%% of 30 (%.2fs)", 100 * h, sh,
              100 * v, sv)};
}

Verdict snr_monotonicity() {
  const double sigmas[] = {0.05, 0.2, 0.8, 3.2};
  std::vector<double> rates;
  for (double s : sigmas) {
    SessionConfig cfg;
    cfg.scenario.subject.noise_sigma = s;
    cfg.scenario.protocol.test_trials = 48;
    rates.push_back(hit_rate(run_session(cfg)));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < rates.size(); ++i) monotone = monotone && rates[i] <= rates[i - 1];
  return {monotone && rates.back() <= 0.5,
          fmt("sigma 0.05/0.2/0.8/3.2 -> %.3f/%.3f/%.3f/%.3f", rates[0], rates[1], rates[2],
              rates[3])};
}

Verdict filter_oracle() {
  SignalConfig cfg;
  cfg.n_channels = 1;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double f = 0.05 * std::pow(30.0 / 0.05, i / 9.0);
    const double dev = std::abs(oracle::db(probe::measured_gain(f, cfg)) -
                                oracle::db(oracle::analog_product(f, cfg.highpass_hz,
                                                                  cfg.lowpass_hz)));
    worst = std::max(worst, dev);
  }
  BandFilter filter(cfg);
  double y = 0.0;
  for (SampleIndex t = 0; t < 20 * 128; ++t) y = filter.step({t, {1.0}}).voltages[0];
  const double dc_db = oracle::db(std::abs(y));
  return {worst <= 0.5 && dc_db < -40.0,
          fmt("max deviation %.3f dB over 10 probes, DC gain %.1f dB after 20 s", worst,
              dc_db)};
}

Verdict replay_determinism() {
  testing::TempDir dir("acceptance-replay");
  SessionConfig cfg;
  cfg.scenario.protocol.test_trials = 12;
  cfg.test_modes = {TestMode::kHorizontal1D, TestMode::kVertical1D};
  cfg.recording_dir = dir / "rec";
  run_session(cfg);
  replay_session(dir / "rec", std::nullopt, dir / "refit");
  replay_session(dir / "rec", load_model(dir / "rec" / "model.json"), dir / "saved");
  bool same = true;
  for (const char* out : {"refit", "saved"})
    for (const char* f : {"events.jsonl", "decoded.csv", "cursor.csv"})
      same = same && testing::slurp(dir / "rec" / f) == testing::slurp(dir / out / f);
  const auto bytes = testing::slurp(dir / "rec" / "events.jsonl").size();
  return {same, fmt("events (%zu bytes), decoded and cursor streams identical after refit "
                    "and saved-model replays",
                    bytes)};
}

Verdict robot_protocol() {
  std::mt19937_64 rng(99);
  long failures = 0, cases = 0;
  for (; cases < 200000; ++cases) {
    const GestureCommand cmd{static_cast<Gesture>(rng() % 5),
                             {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
                              static_cast<std::uint8_t>(rng())},
                             static_cast<std::uint16_t>(rng())};
    try {
      failures += decode_command(encode_command(cmd)) != cmd;
    } catch (const DatagramError&) {
      ++failures;
    }
  }
  long accepted_corrupt = 0, corruptions = 0;
  auto expect_reject = [&](std::span<const std::uint8_t> d) {
    ++corruptions;
    try {
      decode_command(d);
      ++accepted_corrupt;
    } catch (const DatagramError&) {
    }
  };
  for (int i = 0; i < 30000; ++i) {
    auto d = encode_command({static_cast<Gesture>(rng() % 5), {1, 2, 3}, 7});
    auto m = d;
    m[0] = static_cast<std::uint8_t>(kMagic + 1 + rng() % 255);
    expect_reject(m);
    m = d;
    m[1] = static_cast<std::uint8_t>(kVersion + 1 + rng() % 255);
    expect_reject(m);
    std::vector<std::uint8_t> resized(d.begin(), d.end());
    resized.resize(rng() % 2 ? rng() % 8 : 9 + rng() % 8, 0);
    expect_reject(resized);
  }
  // The canonical table, written out independently of the library's own.
  struct Row {
    Direction d;
    Gesture g;
    Rgb eye;
  };
  const Row table[] = {{Direction::kRight, Gesture::kRightHand, {0, 255, 0}},
                       {Direction::kLeft, Gesture::kLeftHand, {0, 0, 255}},
                       {Direction::kTop, Gesture::kBothHands, {0, 255, 255}},
                       {Direction::kBottom, Gesture::kHeadShake, {255, 0, 0}}};
  int mapping_mismatches = 0;
  const Rgb held{9, 8, 7};
  for (const auto& row : table) {
    const Target t{row.d, target_center(row.d, 0.85), 0.15, 0.0};
    const auto on = map_online(t, true, held);
    const auto off = map_online(t, false, held);
    mapping_mismatches += on.gesture != row.g || !(on.eye == row.eye);
    mapping_mismatches += off.gesture != Gesture::kIdle || !(off.eye == held);
  }
  return {failures == 0 && accepted_corrupt == 0 && mapping_mismatches == 0,
          fmt("%ld round trips with %ld failures, %ld corruptions with %ld accepted, "
              "%d mapping mismatches",
              cases, failures, corruptions, accepted_corrupt, mapping_mismatches)};
}

Verdict activation_fidelity() {
  const Target target{Direction::kRight, target_center(Direction::kRight, 0.85), 0.15, 0.0};
  std::vector<bool> active;
  for (int i = 0; i < 64; ++i) {
    const bool wrong = (i >= 12 && i < 18) || (i >= 40 && i < 47);
    active.push_back(activation_gate({wrong ? -0.25 : 0.3, 0.05}, target, 0.02));
  }
  const auto segments = activation_timeline(active, 0.0, 1.0 / 16.0);
  const int gaps = activation_gaps(segments);
  return {gaps == 2, fmt("%zu segments, %d gaps, duty cycle %.3f", segments.size(), gaps,
                         duty_cycle(active))};
}

Verdict loop_latency() {
  SessionConfig train;
  train.scenario.protocol.training_trials_per_axis = 1;
  train.scenario.protocol.training_trial_s = 30.0;
  train.scenario.protocol.test_trials = 0;
  const auto model = *run_session(train).model;

  SessionConfig cfg;
  cfg.scenario.protocol.test_trials = 12;
  cfg.scenario.protocol.inter_trial_s = 0.25;
  cfg.scenario.protocol.timeout_s = 2.0;
  cfg.model = model;
  cfg.run_training = false;
  cfg.clock = ClockMode::kRealtime;
  const auto r = run_session(cfg);
  return {r.latency.samples > 0 && r.latency.p99_ms < 10.0,
          fmt("%ld ticks at 128 Hz / 16 Hz: p50 %.3f ms, p99 %.3f ms, max %.3f ms",
              r.latency.samples, r.latency.p50_ms, r.latency.p99_ms, r.latency.max_ms)};
}

}  // namespace
}  // namespace cortexloop

int main() {
  using namespace cortexloop;
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"decoder-recovery", decoder_recovery},
      {"oracle-equivalence", oracle_equivalence},
      {"success-table", success_table},
      {"snr-monotonicity", snr_monotonicity},
      {"filter-oracle", filter_oracle},
      {"replay-determinism", replay_determinism},
      {"robot-protocol", robot_protocol},
      {"activation-timeline", activation_fidelity},
      {"loop-latency", loop_latency},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu acceptance criteria passed\n",
              static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
