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

#include "cortexloop/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "cortexloop/errors.hpp"
#include "cortexloop/signal_io.hpp"

namespace cortexloop {

namespace fs = std::filesystem;
using json = nlohmann::json;
using SteadyClock = std::chrono::steady_clock;

std::string to_string(ControlAction a) {
  switch (a) {
    case ControlAction::kStart: return "start";
    case ControlAction::kAbort: return "abort";
    case ControlAction::kNextMode: return "next_mode";
  }
  return "?";
}

ControlAction control_action_from_string(std::string_view s) {
  if (s == "start") return ControlAction::kStart;
  if (s == "abort") return ControlAction::kAbort;
  if (s == "next_mode") return ControlAction::kNextMode;
  throw ConfigError("unknown control action '" + std::string(s) + "'");
}

void SessionConfig::validate() const {
  scenario.validate();
  if (test_modes.empty()) throw ConfigError("at least one test mode is required");
  if (!run_training && !model)
    throw ConfigError("skipping training requires a fitted decoder");
  if (model) model->check_config(scenario.signal_config);
  if (!replay_signals && scenario.source == SourceKind::kSurrogate &&
      clock == ClockMode::kMaxSpeed)
    throw ConfigError("max_speed clock is not allowed with a surrogate (human) source");
  if (!replay_signals && scenario.source == SourceKind::kSurrogate && !ui)
    throw ConfigError("a surrogate source needs a UI channel");
}

json summary_json(const SessionResult& r) {
  json runs = json::array();
  for (const auto& run : r.runs) runs.push_back(run);
  json j = {{"status", r.status},
            {"complete", r.complete},
            {"frames", r.frames},
            {"ticks", r.ticks},
            {"control_faults", r.control_faults},
            {"runs", runs},
            {"summary", r.summary ? json(*r.summary) : json(nullptr)}};
  if (r.model) j["fit_report"] = r.model->fit_report;
  return j;
}

namespace {

/// Every artifact of a session directory. All writes are no-ops when the
/// directory is empty.
class Recorder {
 public:
  Recorder(const fs::path& dir, const SignalConfig& cfg, SignalDomain domain)
      : dir_(dir) {
    if (dir_.empty()) return;
    fs::create_directories(dir_);
    std::ofstream(dir_ / "format_version") << kRecordingFormatVersion << '\n';
    signals_.emplace(dir_ / "signals.csv", cfg, domain);
    events_.emplace(dir_ / "events.jsonl");
    reference_.emplace(dir_ / "reference.csv");
    *reference_ << "t,x,y,u,v\n";
    decoded_.emplace(dir_ / "decoded.csv");
    *decoded_ << "t_s,u,v\n";
    cursor_.emplace(dir_ / "cursor.csv");
    *cursor_ << "t_s,trial,x,y,u,v,active\n";
    controls_.emplace(dir_ / "controls.jsonl");
    status(false, "running");
  }

  bool enabled() const { return !dir_.empty(); }
  fs::path path(const char* name) const { return dir_ / name; }

  void frame(const SampleFrame& f) {
    if (signals_) signals_->write(f);
  }
  void reference(SampleIndex t, const Vec2& p, const Velocity& v) {
    if (!reference_) return;
    *reference_ << t << ',' << format_double(p.x) << ',' << format_double(p.y)
                << ',' << format_double(v.u) << ',' << format_double(v.v) << '\n';
  }
  void event(const Event& e) {
    if (events_) events_->write(e);
  }
  void tick(const TickRecord& r) {
    if (!decoded_) return;
    *decoded_ << format_double(r.t_s) << ',' << format_double(r.u) << ','
              << format_double(r.v) << '\n';
    *cursor_ << format_double(r.t_s) << ',' << r.trial << ',' << format_double(r.x)
             << ',' << format_double(r.y) << ',' << format_double(r.u) << ','
             << format_double(r.v) << ',' << (r.active ? 1 : 0) << '\n';
  }
  void intent(double t_s, const Velocity& v) {
    if (!enabled()) return;
    if (!intents_) intents_.emplace(dir_ / "intents.jsonl");
    *intents_ << json{{"t_s", t_s}, {"u", v.u}, {"v", v.v}}.dump() << '\n';
  }
  void control(SampleIndex sample, ControlAction a) {
    if (controls_)
      *controls_ << json{{"sample", sample}, {"action", to_string(a)}}.dump() << '\n';
  }
  void model(const DecoderModel& m) {
    if (enabled()) save_model(m, dir_ / "model.json");
  }
  void config(const json& j) {
    if (enabled()) std::ofstream(dir_ / "config.json") << j.dump(2) << '\n';
  }
  void summary(const json& j) {
    if (enabled()) std::ofstream(dir_ / "summary.json") << j.dump(2) << '\n';
  }
  void status(bool complete, const std::string& reason) {
    if (!enabled()) return;
    flush();
    std::ofstream(dir_ / "status.json")
        << json{{"complete", complete}, {"status", reason}}.dump(2) << '\n';
  }
  void flush() {
    if (signals_) signals_->flush();
    if (events_) events_->flush();
    for (auto* s : {&reference_, &decoded_, &cursor_, &intents_, &controls_})
      if (*s) (*s)->flush();
  }

 private:
  fs::path dir_;
  std::optional<SignalFileWriter> signals_;
  std::optional<EventLogWriter> events_;
  std::optional<std::ofstream> reference_, decoded_, cursor_, intents_, controls_;
};

class SessionRunner {
 public:
  explicit SessionRunner(const SessionConfig& cfg)
      : cfg_(cfg),
        scenario_(cfg.scenario),
        sig_(scenario_.signal_config),
        window_(sig_),
        targets_rng_(scenario_.seeds.targets_seed()) {
    cfg_.validate();
    const auto& proto = scenario_.protocol;
    samples_per_tick_ =
        static_cast<int>(std::llround(sig_.sample_rate_hz / proto.update_hz));
    tick_s_ = samples_per_tick_ / sig_.sample_rate_hz;

    if (cfg_.replay_signals) {
      source_ = std::make_unique<ReplaySource>(*cfg_.replay_signals, sig_);
    } else {
      SyntheticSubject subject(sig_, scenario_.resolved_subject(),
                               scenario_.seeds.noise_seed());
      if (scenario_.source == SourceKind::kSynthetic) {
        source_ = std::make_unique<SyntheticSource>(std::move(subject));
        intent_.emplace(scenario_.policy, scenario_.subject.asymmetry,
                        sig_.sample_rate_hz, scenario_.seeds.policy_seed());
      } else {
        auto surrogate = std::make_unique<SurrogateSource>(std::move(subject));
        surrogate_ = surrogate.get();
        source_ = std::move(surrogate);
      }
    }
    switch (scenario_.acquisition_filter) {
      case FilterMode::kAuto: filter_on_ = source_->domain() == SignalDomain::kRaw; break;
      case FilterMode::kOn: filter_on_ = true; break;
      case FilterMode::kOff: filter_on_ = false; break;
    }
    if (filter_on_) filter_.emplace(sig_);
    recorder_.emplace(cfg_.recording_dir, sig_, source_->domain());
    if (cfg_.robot) sender_.emplace(*cfg_.robot);
    if (recorder_->enabled())
      actuator_.emplace(recorder_->path("robot.jsonl"));
    else
      actuator_.emplace();
    scripted_ = cfg_.scripted_controls;
    std::stable_sort(scripted_.begin(), scripted_.end(),
                     [](const auto& a, const auto& b) { return a.sample < b.sample; });
  }

  SessionResult run() {
    write_config();
    start_ = SteadyClock::now();
    if (surrogate_) {
      surrogate_->on_message([this](double t_s, Velocity v) { recorder_->intent(t_s, v); });
      cfg_.ui->set_intent_sink([this](Velocity v) { surrogate_->submit(v, session_clock_s()); });
    }
    try {
      if (cfg_.wait_for_start) wait_in_lobby();
      if (!aborted_) run_protocol();
    } catch (const SingularFitError& e) {
      finish("halted_at_calibration", false);
      throw;
    } catch (const AbortedSessionError& e) {
      finish("aborted_source_exhausted", false);
      throw;
    } catch (...) {
      finish("failed", false);
      throw;
    }
    finish(aborted_ ? "aborted" : "complete", !aborted_);
    return std::move(result_);
  }

 private:
  double session_clock_s() const {
    return std::chrono::duration<double>(SteadyClock::now() - start_).count();
  }
  double now_s() const { return static_cast<double>(next_t_) / sig_.sample_rate_hz; }

  void write_config() {
    json modes = json::array();
    for (auto m : cfg_.test_modes) modes.push_back(to_string(m));
    recorder_->config({{"format_version", kRecordingFormatVersion},
                       {"scenario", scenario_},
                       {"test_modes", modes},
                       {"clock", cfg_.clock == ClockMode::kRealtime ? "realtime" : "max_speed"},
                       {"run_training", cfg_.run_training},
                       {"model_supplied", cfg_.model.has_value()},
                       {"filter_applied", filter_on_},
                       {"source", cfg_.replay_signals ? "replay"
                                  : surrogate_       ? "surrogate"
                                                     : "synthetic"}});
  }

  void emit(EventType type, json payload) {
    recorder_->event(Event{now_s(), type, std::move(payload)});
  }

  void enter(const ProtocolPhase& phase) {
    fsm_.advance(phase);
    world_.phase = phase;
    json payload = {{"phase", phase.name()}};
    if (phase.kind == ProtocolPhase::Kind::kTest) payload["mode"] = to_string(phase.mode);
    emit(EventType::kPhaseStart, std::move(payload));
  }

  void wait_in_lobby() {
    while (true) {
      if (cfg_.stop_flag && cfg_.stop_flag->load()) {
        aborted_ = true;
        return;
      }
      publish_state();
      if (cfg_.ui) {
        while (auto a = cfg_.ui->poll_control()) {
          if (*a == ControlAction::kStart) return;
          if (*a == ControlAction::kAbort) {
            aborted_ = true;
            return;
          }
        }
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }

  void run_protocol() {
    if (cfg_.run_training) {
      for (Axis axis : {Axis::kHorizontal, Axis::kVertical}) {
        enter(ProtocolPhase::training(axis));
        for (int i = 0; i < scenario_.protocol.training_trials_per_axis && !aborted_; ++i)
          run_training_trial(axis);
        if (aborted_) return;
      }
    }
    enter(ProtocolPhase::calibration());
    calibrate();
    for (std::size_t m = 0; m < cfg_.test_modes.size() && !aborted_; ++m) {
      next_mode_requested_ = false;
      run_test_mode(cfg_.test_modes[m]);
    }
  }

  // One sample through source, recorder, filter and lag window.
  const SampleFrame& advance_sample() {
    if (cfg_.clock == ClockMode::kRealtime)
      std::this_thread::sleep_until(
          start_ + std::chrono::duration_cast<SteadyClock::duration>(
                       std::chrono::duration<double>(now_s())));
    world_.t_s = now_s();
    const Velocity intent = intent_ ? intent_->next(world_) : Velocity{};
    auto frame = source_->next_frame(intent);
    frame_in_ = SteadyClock::now();
    if (!frame)
      throw AbortedSessionError("signal source exhausted at t=" + std::to_string(next_t_) +
                                " during " + world_.phase.name());
    if (frame->t != next_t_)
      throw SequencingError("source produced t=" + std::to_string(frame->t) +
                            ", expected t=" + std::to_string(next_t_));
    check_frame(*frame, sig_.n_channels);
    recorder_->frame(*frame);
    if (keep_frames_) training_frames_.push_back(*frame);
    window_.push(filter_ ? filter_->step(*frame) : *frame);
    ++next_t_;
    ++result_.frames;
    return window_.newest();
  }

  void poll_controls() {
    auto apply = [this](ControlAction a) {
      recorder_->control(next_t_, a);
      if (a == ControlAction::kAbort) aborted_ = true;
      if (a == ControlAction::kNextMode) next_mode_requested_ = true;
    };
    if (cfg_.stop_flag && cfg_.stop_flag->load() && !aborted_) apply(ControlAction::kAbort);
    if (cfg_.ui)
      while (auto a = cfg_.ui->poll_control()) apply(*a);
    while (scripted_pos_ < scripted_.size() && scripted_[scripted_pos_].sample <= next_t_)
      apply(scripted_[scripted_pos_++].action);
  }

  // Samples with no trial running; the cursor rests at the center.
  void rest(double seconds) {
    world_.trial = -1;
    world_.target.reset();
    world_.reference_velocity.reset();
    world_.cursor = {};
    const auto n = static_cast<long>(std::llround(seconds * sig_.sample_rate_hz));
    for (long i = 0; i < n && !aborted_; ++i) {
      advance_sample();
      if ((i + 1) % samples_per_tick_ == 0 || i + 1 == n) {
        publish_state();
        poll_controls();
      }
    }
  }

  void run_training_trial(Axis axis) {
    const int id = training_trial_count_++;
    const auto& proto = scenario_.protocol;
    const auto ref = training_reference(
        axis, proto.training_trial_s, derive_seed(scenario_.seeds.reference_seed(), id),
        sig_.sample_rate_hz, proto.reference);
    keep_frames_ = true;
    world_.trial = trial_serial_++;
    world_.target.reset();
    const SampleIndex begin = next_t_;
    emit(EventType::kTrialStart,
         {{"trial", id}, {"phase", world_.phase.name()}, {"sample", begin}});
    for (std::size_t i = 0; i < ref.velocity.size() && !aborted_; ++i) {
      world_.trial_elapsed_s = static_cast<double>(i) / sig_.sample_rate_hz;
      world_.reference_velocity = ref.velocity[i];
      world_.cursor.position = ref.position[i];
      world_.cursor.velocity = ref.velocity[i];
      const SampleIndex t = next_t_;
      advance_sample();
      recorder_->reference(t, ref.position[i], ref.velocity[i]);
      reference_.push_back({t, ref.velocity[i].u, ref.velocity[i].v});
      if ((i + 1) % samples_per_tick_ == 0) {
        publish_state();
        poll_controls();
      }
    }
    trials_.push_back({id, begin, next_t_});
    emit(EventType::kTrialEnd, {{"trial", id},
                                {"phase", world_.phase.name()},
                                {"sample", next_t_},
                                {"outcome", aborted_ ? "abandoned" : "completed"}});
    rest(proto.inter_trial_s);
  }

  void calibrate() {
    keep_frames_ = false;
    if (cfg_.model) {
      model_ = *cfg_.model;
    } else {
      const TrainingSet ts = assemble_training_set(training_frames_, sig_, filter_on_,
                                                   trials_, reference_);
      model_ = fit(ts, sig_, scenario_.protocol.ridge_lambda);
    }
    model_->check_config(sig_);
    recorder_->model(*model_);
    result_.model = model_;
    training_frames_.clear();
    training_frames_.shrink_to_fit();
  }

  void run_test_mode(TestMode mode) {
    enter(ProtocolPhase::test(mode));
    const auto& proto = scenario_.protocol;
    const int total = proto.resolved_test_trials(mode);
    const int run_length = proto.resolved_run_length(mode);
    for (int i = 0; i < total && !aborted_ && !next_mode_requested_; ++i) {
      if (i % run_length == 0) result_.runs.emplace_back();
      rest(proto.inter_trial_s);
      if (aborted_ || next_mode_requested_) break;
      if (auto r = run_test_trial(mode, i, i / run_length)) result_.runs.back().push_back(*r);
    }
    if (!result_.runs.empty() && result_.runs.back().empty()) result_.runs.pop_back();
  }

  std::optional<TrialResult> run_test_trial(TestMode mode, int index, int run) {
    const auto& proto = scenario_.protocol;
    const Target target = spawn_target(mode, targets_rng_, proto.geometry, now_s());
    world_.trial = trial_serial_++;
    world_.target = target;
    world_.reference_velocity.reset();
    world_.cursor = {};
    world_.trial_elapsed_s = 0.0;
    const SampleIndex begin = next_t_;
    current_trial_ = index;
    emit(EventType::kTrialStart, {{"trial", index},
                                  {"phase", world_.phase.name()},
                                  {"mode", to_string(mode)},
                                  {"run", run},
                                  {"sample", begin}});
    emit(EventType::kTargetShown, {{"trial", index},
                                   {"direction", to_string(target.direction)},
                                   {"center", {target.center.x, target.center.y}},
                                   {"radius", target.radius}});
    double wrong_time = 0.0;
    std::optional<TrialResult> result;
    while (!result && !aborted_ && !next_mode_requested_) {
      for (int s = 0; s < samples_per_tick_; ++s) {
        world_.trial_elapsed_s = static_cast<double>(next_t_ - begin) / sig_.sample_rate_hz;
        advance_sample();
      }
      const double elapsed = static_cast<double>(next_t_ - begin) / sig_.sample_rate_hz;
      world_.trial_elapsed_s = elapsed;
      result = tick(mode, target, elapsed, wrong_time);
      publish_state();
      poll_controls();
    }
    if (!result) {
      emit(EventType::kTrialEnd, {{"trial", index},
                                  {"phase", world_.phase.name()},
                                  {"sample", next_t_},
                                  {"outcome", "abandoned"},
                                  {"wrong_direction_time", wrong_time}});
      return std::nullopt;
    }
    if (result->outcome == Outcome::kHit) {
      ++hits_;
      emit(EventType::kHit, {{"trial", index}, {"time_to_target", *result->time_to_target}});
    } else {
      emit(EventType::kTimeout, {{"trial", index}, {"elapsed_s", elapsed_of(begin)}});
    }
    ++completed_;
    emit(EventType::kTrialEnd, {{"trial", index},
                                {"phase", world_.phase.name()},
                                {"sample", next_t_},
                                {"outcome", result->outcome == Outcome::kHit ? "hit" : "timeout"},
                                {"wrong_direction_time", result->wrong_direction_time}});
    world_.cursor = {};
    world_.target.reset();
    return result;
  }

  double elapsed_of(SampleIndex begin) const {
    return static_cast<double>(next_t_ - begin) / sig_.sample_rate_hz;
  }

  // Decode, move the cursor, gate the robot and score the trial.
  std::optional<TrialResult> tick(TestMode mode, const Target& target, double elapsed,
                                  double& wrong_time) {
    const auto& proto = scenario_.protocol;
    ++result_.ticks;
    Velocity decoded;
    if (window_.warm()) {
      window_.feature_vector(features_);
      decoded = model_->predict(features_);
    }
    const StepResult step = step_cursor(world_.cursor, decoded, tick_s_, proto.gain, mode);
    if (step.fault) {
      ++result_.control_faults;
      emit(EventType::kFault, {{"reason", "non_finite_decode"}, {"trial", current_trial_}});
    }
    world_.cursor = step.state;
    last_decoded_ = decoded;
    const double along = axis_of(target.direction) == Axis::kHorizontal ? decoded.u : decoded.v;
    if (sign_of(target.direction) * along < 0.0) wrong_time += tick_s_;

    const bool active = !step.fault && activation_gate(decoded, target, proto.dead_zone);
    const GestureCommand cmd =
        sequencer_.stamp(map_online(target, active, actuator_->state().eye));
    if (sender_) sender_->send(cmd);
    actuator_->on_command(cmd, now_s());
    const double latency_ms =
        std::chrono::duration<double, std::milli>(SteadyClock::now() - frame_in_).count();
    latencies_.push_back(latency_ms);

    recorder_->tick({now_s(), current_trial_, world_.cursor.position.x,
                     world_.cursor.position.y, decoded.u, decoded.v, active});
    return check_trial(world_.cursor, target, elapsed, proto.timeout_s, wrong_time);
  }

  void publish_state() {
    if (!cfg_.ui) return;
    json target = nullptr;
    if (world_.target)
      target = {{"direction", to_string(world_.target->direction)},
                {"center", {world_.target->center.x, world_.target->center.y}},
                {"radius", world_.target->radius}};
    const auto& robot = actuator_->state();
    const bool testing = world_.phase.kind == ProtocolPhase::Kind::kTest;
    cfg_.ui->publish({{"type", "state"},
                      {"t_s", now_s()},
                      {"phase", world_.phase.name()},
                      {"mode", testing ? json(to_string(world_.phase.mode)) : json(nullptr)},
                      {"cursor", {world_.cursor.position.x, world_.cursor.position.y}},
                      {"target", target},
                      {"decoded", {last_decoded_.u, last_decoded_.v}},
                      {"robot",
                       {{"gesture", to_string(robot.gesture)},
                        {"eye_rgb", {robot.eye.r, robot.eye.g, robot.eye.b}}}},
                      {"trial",
                       {{"index", world_.trial >= 0 ? json(current_trial_) : json(nullptr)},
                        {"elapsed_s", world_.trial_elapsed_s},
                        {"hits", hits_},
                        {"completed", completed_}}}});
    ++result_.state_messages;
  }

  void finish(const std::string& status, bool complete) {
    result_.complete = complete;
    result_.status = status;
    std::vector<std::vector<TrialResult>> runs;
    for (const auto& r : result_.runs)
      if (!r.empty()) runs.push_back(r);
    if (!runs.empty()) result_.summary = summarize(runs);
    if (!latencies_.empty()) {
      auto sorted = latencies_;
      std::sort(sorted.begin(), sorted.end());
      auto pct = [&](double q) {
        const auto idx = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(sorted.size())) - 1);
        return sorted[std::min(idx, sorted.size() - 1)];
      };
      result_.latency = {static_cast<long>(sorted.size()), pct(0.50), pct(0.99),
                         sorted.back()};
    }
    const json summary = summary_json(result_);
    recorder_->summary(summary);
    recorder_->status(complete, status);
    if (cfg_.ui) cfg_.ui->publish({{"type", "summary"}, {"summary", summary}});
  }

  SessionConfig cfg_;
  Scenario scenario_;
  SignalConfig sig_;
  int samples_per_tick_ = 8;
  double tick_s_ = 0.0625;

  std::unique_ptr<SignalSource> source_;
  SurrogateSource* surrogate_ = nullptr;
  std::optional<IntentGenerator> intent_;
  std::optional<BandFilter> filter_;
  bool filter_on_ = false;
  LagWindow window_;
  std::vector<double> features_ = std::vector<double>(sig_.feature_length());
  std::optional<Recorder> recorder_;
  std::optional<UdpCommandSender> sender_;
  std::optional<VirtualActuator> actuator_;
  CommandSequencer sequencer_;

  ProtocolFsm fsm_;
  SessionState world_;
  std::mt19937_64 targets_rng_;
  SampleIndex next_t_ = 0;
  int trial_serial_ = 0;
  int training_trial_count_ = 0;
  int current_trial_ = -1;
  int hits_ = 0;
  int completed_ = 0;
  Velocity last_decoded_;

  bool keep_frames_ = false;
  std::vector<SampleFrame> training_frames_;
  std::vector<TrainingTrial> trials_;
  std::vector<ReferenceSample> reference_;
  std::optional<DecoderModel> model_;

  std::vector<ScriptedControl> scripted_;
  std::size_t scripted_pos_ = 0;
  bool aborted_ = false;
  bool next_mode_requested_ = false;

  SteadyClock::time_point start_;
  SteadyClock::time_point frame_in_;
  std::vector<double> latencies_;
  SessionResult result_;
};

}  // namespace

SessionResult run_session(const SessionConfig& cfg) {
  SessionRunner runner(cfg);
  return runner.run();
}

}  // namespace cortexloop
