#include "spoofkit/session.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "spoofkit/errors.hpp"

namespace spoofkit {

namespace {

constexpr std::array<std::string_view, 7> kStateNames = {"CREATED",   "ATTACHED", "INJECTED", "RUNNING",
                                                         "RESTORING", "CLOSED",   "FAILED"};
constexpr std::array<std::string_view, 3> kOutcomeNames = {"verified", "attempted", "not_needed"};
constexpr std::int64_t kTickNs = 1'000'000'000;

std::atomic<std::uint64_t> g_session_counter{0};

std::unique_ptr<SessionClock> make_clock(ClockMode mode) {
  if (mode == ClockMode::wall) return std::make_unique<WallClock>();
  return std::make_unique<VirtualClock>();
}

// One source of timed host messages during run().
struct Stream {
  SensorType sensor;
  std::optional<SignalGenerator> generator;
  const SensorTrace* trace = nullptr;
  std::size_t index = 0;
  std::int64_t remaining = 0;
  std::optional<SensorSample> pending;

  void advance() {
    pending.reset();
    if (remaining <= 0) return;
    --remaining;
    if (generator) {
      pending = generator->next();
    } else {
      pending = trace->samples[index++];
    }
  }
};

}  // namespace

std::string_view state_name(SessionState state) { return kStateNames[static_cast<std::size_t>(state)]; }

std::string_view outcome_name(RestoreOutcome outcome) {
  return kOutcomeNames[static_cast<std::size_t>(outcome)];
}

std::optional<ClockMode> clock_mode_from_name(std::string_view name) {
  if (name == "virtual") return ClockMode::virtual_time;
  if (name == "wall") return ClockMode::wall;
  return std::nullopt;
}

void VirtualClock::sleep_until(std::int64_t t_ns) { now_ = std::max(now_, t_ns); }

void VirtualClock::charge_timeout(std::chrono::milliseconds timeout) {
  now_ += std::chrono::duration_cast<std::chrono::nanoseconds>(timeout).count();
}

WallClock::WallClock() : start_(std::chrono::steady_clock::now()) {}

std::int64_t WallClock::now_ns() const {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_)
      .count();
}

void WallClock::sleep_until(std::int64_t t_ns) {
  std::this_thread::sleep_until(start_ + std::chrono::nanoseconds(t_ns));
}

Session::Session(HookPlan plan, Transport& transport, SessionOptions options)
    : plan_(std::move(plan)), transport_(transport), options_(std::move(options)),
      clock_(make_clock(options_.clock)) {
  id_ = "s" + std::to_string(++g_session_counter) + "-" + plan_.plan_id.substr(0, 12);
  for (const auto& hook : plan_.hooks) {
    if (auto sensor = sensor_for_api(hook.api)) samples_sent_[*sensor] = 0;
  }
  note("session created for plan " + plan_.plan_id);
}

Session::~Session() {
  if (conn_) conn_->detach();
}

SessionState Session::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

std::optional<RestoreOutcome> Session::restore_outcome() const {
  std::lock_guard lock(mu_);
  return outcome_;
}

std::vector<LogEntry> Session::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::map<SystemKey, PropertyValue> Session::baselines() const {
  std::lock_guard lock(mu_);
  return baselines_;
}

SessionReport Session::report() const {
  std::lock_guard lock(mu_);
  return report_locked();
}

SessionReport Session::report_locked() const {
  SessionReport r;
  r.session_id = id_;
  r.plan_id = plan_.plan_id;
  r.state = state_;
  r.samples_sent = samples_sent_;
  r.properties_applied = properties_applied_;
  r.property_pushes = property_pushes_;
  r.last_pushed = last_pushed_;
  r.app_events = events_;
  if (state_ == SessionState::closed || state_ == SessionState::failed) r.restore_outcome = outcome_;
  r.duration_s = duration_s_;
  r.failure_reason = failure_reason_;
  r.log = log_;
  return r;
}

void Session::require(SessionState expected, const char* op) const {
  if (state_ != expected) {
    throw IllegalState(std::string(op) + " requires state " + std::string(state_name(expected)) +
                       ", session is " + std::string(state_name(state_)));
  }
}

void Session::note(std::string text) { log_.push_back({clock_->now_ns(), std::move(text)}); }

void Session::fail(std::string reason) {
  state_ = SessionState::failed;
  note("failed: " + reason);
  if (!failure_reason_) failure_reason_ = std::move(reason);
}

std::uint64_t Session::send(HostMessage message) {
  const std::uint64_t seq = next_seq_++;
  std::visit([seq](auto& m) { m.seq = seq; }, message);
  conn_->send(encode(message));
  return seq;
}

void Session::handle_incoming(const std::string& line, std::optional<std::uint64_t> awaited, Reply* out) {
  AgentMessage m;
  try {
    m = decode_agent(line);
  } catch (const ProtocolError& e) {
    note(std::string("ignored malformed agent line: ") + e.what());
    return;
  }
  if (const auto* e = std::get_if<msg::Event>(&m)) {
    if (e->seq > last_event_seq_) {
      last_event_seq_ = e->seq;
      events_.push_back({e->name, e->t_ns, clock_->now_ns()});
      note("app event " + e->name);
    }
    return;
  }
  if (const auto* a = std::get_if<msg::Ack>(&m)) {
    if (awaited && a->ref == *awaited) out->kind = Reply::Kind::ack;
    return;
  }
  if (const auto* n = std::get_if<msg::Nack>(&m)) {
    if (awaited && n->ref == *awaited) {
      out->kind = Reply::Kind::nack;
      out->reason = n->reason;
    } else if (!pending_failure_) {
      pending_failure_ = "message " + std::to_string(n->ref) + " rejected: " + n->reason;
    }
    return;
  }
  const auto& v = std::get<msg::Value>(m);
  if (awaited && v.ref == *awaited) {
    out->kind = Reply::Kind::value;
    out->value = v.value;
  }
}

Session::Reply Session::await(std::uint64_t ref) {
  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  for (;;) {
    const auto left = std::max(std::chrono::milliseconds(0),
                               std::chrono::duration_cast<std::chrono::milliseconds>(
                                   deadline - std::chrono::steady_clock::now()));
    auto line = conn_->receive(left);
    if (!line) {
      clock_->charge_timeout(options_.timeout);
      return Reply{};
    }
    Reply reply{};
    handle_incoming(*line, ref, &reply);
    if (reply.kind != Reply::Kind::timeout) {
      drain();
      return reply;
    }
  }
}

void Session::drain() {
  while (auto line = conn_->receive(std::chrono::milliseconds(0))) {
    handle_incoming(*line, std::nullopt, nullptr);
  }
}

void Session::attach() {
  std::lock_guard lock(mu_);
  require(SessionState::created, "attach");
  try {
    conn_ = transport_.attach(plan_.target.process);
  } catch (const SessionError& e) {
    fail(e.what());
    outcome_ = RestoreOutcome::not_needed;
    throw AttachError(e.what());
  }
  state_ = SessionState::attached;
  note("attached to " + plan_.target.process);
}

void Session::inject() {
  std::lock_guard lock(mu_);
  require(SessionState::attached, "inject");
  std::optional<std::string> problem;
  try {
    for (auto key : plan_.property_keys()) {
      const auto seq = send(msg::Query{0, key});
      const auto reply = await(seq);
      if (reply.kind == Reply::Kind::value) {
        baselines_[key] = *reply.value;
        note("baseline " + std::string(key_name(key)) + " = " + to_display(*reply.value));
      } else if (reply.kind == Reply::Kind::timeout) {
        problem = "baseline query for " + std::string(key_name(key)) + " timed out";
        break;
      } else {
        note("baseline for " + std::string(key_name(key)) + " unreadable");
      }
    }
    if (!problem) {
      const auto seq = send(msg::ApplyPlan{0, plan_});
      note("apply_plan sent");
      const auto reply = await(seq);
      if (reply.kind == Reply::Kind::nack) {
        problem = reply.reason;
      } else if (reply.kind != Reply::Kind::ack) {
        problem = "apply_plan timed out";
      }
    }
  } catch (const TransportError& e) {
    problem = e.what();
  }
  if (problem) {
    fail(*problem);
    restore_locked();
    throw InjectError(*problem);
  }
  for (const auto& hook : plan_.hooks) {
    if (hook.kind == HookKind::property_constant) {
      properties_applied_.emplace_back(property_keys_for_api(hook.api).front(), *hook.value);
    } else if (hook.kind == HookKind::property_program) {
      const auto keys = property_keys_for_api(hook.api);
      if (hook.signal->mode == SignalMode::battery_discharge) {
        properties_applied_.emplace_back(
            SystemKey::battery_level,
            static_cast<std::int64_t>(std::llround(
                hook.signal->scalar("start_level").value_or(static_cast<double>(kDefaultStartLevel)))));
      } else if (hook.api == TargetApi::clock_current_time_millis) {
        properties_applied_.emplace_back(
            SystemKey::clock_offset_ms,
            static_cast<std::int64_t>(std::llround(hook.signal->scalar("offset_ms").value_or(0.0))));
        properties_applied_.emplace_back(SystemKey::clock_scale, hook.signal->scalar("scale").value_or(1.0));
      }
    } else if (hook.value) {
      properties_applied_.emplace_back(SystemKey::ambient_temperature_c, *hook.value);
    }
  }
  state_ = SessionState::injected;
  note("plan injected");
}

SessionReport Session::run(double duration_s) {
  std::lock_guard lock(mu_);
  require(SessionState::injected, "run");
  if (!std::isfinite(duration_s) || duration_s < 0.0) {
    throw InvalidParams("duration must be a non-negative number of seconds");
  }
  state_ = SessionState::running;
  const std::int64_t epoch = clock_->now_ns();
  const auto duration_ns = static_cast<std::int64_t>(std::llround(duration_s * 1e9));
  {
    std::ostringstream text;
    text << "run started for " << duration_s << " s";
    note(text.str());
  }

  std::vector<Stream> streams;
  const Hook* battery = nullptr;
  const Hook* clock = nullptr;
  for (const auto& hook : plan_.hooks) {
    if (hook.kind == HookKind::sensor_stream) {
      Stream s{*sensor_for_api(hook.api), std::nullopt, nullptr, 0, 0, std::nullopt};
      if (auto it = options_.replay.find(s.sensor); it != options_.replay.end()) {
        s.trace = &it->second;
        for (const auto& sample : it->second.samples) {
          if (sample.t_ns > duration_ns) break;
          ++s.remaining;
        }
      } else {
        s.generator.emplace(*hook.signal, s.sensor, *hook.rate_hz);
        s.remaining = sample_count(*hook.rate_hz, duration_s);
      }
      s.advance();
      streams.push_back(std::move(s));
    } else if (hook.kind == HookKind::property_program) {
      if (hook.signal->mode == SignalMode::battery_discharge) {
        battery = &hook;
      } else if (!clock) {
        clock = &hook;
      }
    }
  }
  for (const auto& [sensor, trace] : options_.replay) {
    if (!samples_sent_.count(sensor)) {
      note("replay trace for unhooked sensor " + std::string(sensor_name(sensor)) + " ignored");
    }
  }

  const std::int64_t ticks = (battery || clock) ? floor_snapped(duration_s) : 0;
  std::int64_t next_tick = 1;
  std::optional<std::string> problem;

  auto push = [&](SystemKey key, PropertyValue value) {
    const auto seq = send(msg::SetProperty{0, key, value});
    const auto reply = await(seq);
    if (reply.kind == Reply::Kind::ack) {
      ++property_pushes_;
      last_pushed_[key] = std::move(value);
      return;
    }
    problem = "set_property " + std::string(key_name(key)) +
              (reply.kind == Reply::Kind::nack ? " rejected: " + reply.reason : " timed out");
  };

  try {
    while (!problem) {
      std::int64_t best_t = std::numeric_limits<std::int64_t>::max();
      Stream* best = nullptr;
      for (auto& s : streams) {
        if (s.pending && s.pending->t_ns < best_t) {
          best_t = s.pending->t_ns;
          best = &s;
        }
      }
      const std::int64_t tick_t = next_tick <= ticks ? next_tick * kTickNs
                                                     : std::numeric_limits<std::int64_t>::max();
      if (!best && next_tick > ticks) break;
      if (next_tick <= ticks && tick_t <= best_t) {
        clock_->sleep_until(epoch + tick_t);
        const double t_s = static_cast<double>(next_tick);
        if (battery) {
          const auto start = static_cast<std::int64_t>(std::llround(
              battery->signal->scalar("start_level").value_or(static_cast<double>(kDefaultStartLevel))));
          const double rate = battery->signal->scalar("discharge_rate").value_or(kDefaultDischargeRate);
          push(SystemKey::battery_level, battery_level_at(start, rate, t_s));
        }
        if (clock && !problem) {
          const auto offset =
              static_cast<std::int64_t>(std::llround(clock->signal->scalar("offset_ms").value_or(0.0)));
          const double scale = clock->signal->scalar("scale").value_or(1.0);
          const std::int64_t now_ms = next_tick * 1000;
          push(SystemKey::clock_offset_ms, warped_clock(now_ms, offset, scale, 0) - now_ms);
        }
        ++next_tick;
      } else {
        clock_->sleep_until(epoch + best_t);
        const auto& sample = *best->pending;
        send(msg::Sample{0, sample.sensor, epoch + sample.t_ns, sample.values});
        ++samples_sent_[sample.sensor];
        best->advance();
        drain();
      }
      if (!problem && pending_failure_) problem = pending_failure_;
    }
    if (!problem) {
      clock_->sleep_until(epoch + duration_ns);
      drain();
      if (pending_failure_) problem = pending_failure_;
    }
  } catch (const TransportError& e) {
    problem = e.what();
  }
  duration_s_ = static_cast<double>(clock_->now_ns() - epoch) / 1e9;

  if (problem) {
    fail(*problem);
  } else {
    note("run finished");
  }
  restore_locked();
  return report_locked();
}

RestoreOutcome Session::restore() {
  std::lock_guard lock(mu_);
  if (state_ == SessionState::attached) {
    outcome_ = RestoreOutcome::not_needed;
    state_ = SessionState::closed;
    conn_->detach();
    note("restore not needed");
    return *outcome_;
  }
  require(SessionState::injected, "restore");
  return restore_locked();
}

RestoreOutcome Session::restore_locked() {
  if (restore_tried_) return outcome_.value_or(RestoreOutcome::attempted);
  restore_tried_ = true;
  const bool already_failed = state_ == SessionState::failed;
  if (!already_failed) state_ = SessionState::restoring;
  note("restore attempted");

  std::optional<std::string> problem;
  bool verifiable = true;
  try {
    const auto seq = send(msg::Restore{});
    const auto reply = await(seq);
    if (reply.kind == Reply::Kind::nack) {
      problem = "restore rejected: " + reply.reason;
    } else if (reply.kind != Reply::Kind::ack) {
      problem = "restore timed out";
    }
    for (auto key : plan_.property_keys()) {
      if (problem) break;
      auto base = baselines_.find(key);
      if (base == baselines_.end()) {
        verifiable = false;
        note("no baseline for " + std::string(key_name(key)) + "; restore unverifiable");
        continue;
      }
      const auto q = send(msg::Query{0, key});
      const auto answer = await(q);
      if (answer.kind != Reply::Kind::value) {
        problem = "restore check for " + std::string(key_name(key)) +
                  (answer.kind == Reply::Kind::nack ? " rejected" : " timed out");
      } else if (!(*answer.value == base->second)) {
        problem = "restore check for " + std::string(key_name(key)) + " read " + to_display(*answer.value) +
                  ", baseline " + to_display(base->second);
      }
    }
    drain();
  } catch (const TransportError& e) {
    problem = e.what();
  }

  outcome_ = (!problem && verifiable) ? RestoreOutcome::verified : RestoreOutcome::attempted;
  if (problem) {
    fail(*problem);
  } else if (!already_failed) {
    state_ = SessionState::closed;
  }
  note("restore outcome " + std::string(outcome_name(*outcome_)));
  conn_->detach();
  return *outcome_;
}

std::unique_ptr<Session> create_session(HookPlan plan, Transport& transport, ClockMode clock) {
  SessionOptions options;
  options.clock = clock;
  return std::make_unique<Session>(std::move(plan), transport, std::move(options));
}

}  // namespace spoofkit
