#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <set>
#include <thread>

#include "spoofkit/errors.hpp"
#include "spoofkit/session.hpp"
#include "spoofkit/transport.hpp"
#include "support.hpp"

using namespace spoofkit;

namespace {

HookPlan fixture_plan(const std::string& name) { return compile(parse_profile(testing::fixture_text(name))); }

bool logged(const std::vector<LogEntry>& log, const std::string& text) {
  return std::any_of(log.begin(), log.end(), [&](const LogEntry& e) { return e.text == text; });
}

std::vector<HostMessage> decoded(const std::vector<std::string>& lines) {
  std::vector<HostMessage> out;
  for (const auto& l : lines) out.push_back(decode_host(l));
  return out;
}

// Rounded-half-away battery level for rate = tenths/10 %/min, by integer arithmetic.
std::int64_t battery_oracle(std::int64_t start, std::int64_t tenths, std::int64_t t_s) {
  const std::int64_t n = start * 600 - tenths * t_s;  // level * 600
  if (n <= 0) return 0;
  return std::min<std::int64_t>(100, (n + 300) / 600);
}

std::string fitness_app(const std::string& rules = "[]", const std::string& process = "com.example.fitness") {
  return R"({"process": ")" + process + R"(", "baseline": {"battery.level": 87}, "rules": )" + rules + "}";
}

HookPlan with_target(SpoofProfile p, const std::string& process = "com.example.fitness") {
  p.target.process = process;
  return compile(p);
}

}  // namespace

TEST_CASE("battery.level 5 session: saver fires, restore verifies") {
  MockDevice device;
  const auto app = device.spawn_from_document(testing::fixture_text("low_battery.app.json"));
  MockTransport transport(device);
  Session session(fixture_plan("battery_low.profile.json"), transport);
  CHECK(session.state() == SessionState::created);
  session.attach();
  CHECK(session.state() == SessionState::attached);
  session.inject();
  CHECK(session.state() == SessionState::injected);
  CHECK(session.baselines().at(SystemKey::battery_level) == PropertyValue{std::int64_t{87}});
  CHECK(app->perceived(SystemKey::battery_level) == PropertyValue{std::int64_t{5}});
  const auto report = session.run(5.0);
  CHECK(report.state == SessionState::closed);
  CHECK(report.restore_outcome == RestoreOutcome::verified);
  CHECK_FALSE(report.failure_reason.has_value());
  REQUIRE(report.app_events.size() == 1);
  CHECK(report.app_events[0].name == "battery_saver_on");
  CHECK(report.properties_applied ==
        std::vector<std::pair<SystemKey, PropertyValue>>{{SystemKey::battery_level, std::int64_t{5}}});
  CHECK(report.duration_s == 5.0);
  CHECK(app->perceived(SystemKey::battery_level) == PropertyValue{std::int64_t{87}});
  CHECK(logged(report.log, "restore attempted"));
  CHECK(logged(report.log, "restore outcome verified"));
}

TEST_CASE("walking session streams 50 Hz samples and the app sees 20 steps") {
  MockDevice device;
  const auto app = device.spawn_from_document(fitness_app());
  MockTransport transport(device);
  Session session(fixture_plan("walking.profile.json"), transport);
  session.attach();
  session.inject();
  const auto report = session.run(10.0);
  CHECK(report.samples_sent.at(SensorType::accelerometer) == 500);
  CHECK(report.samples_sent.at(SensorType::step_counter) == 500);
  CHECK(report.restore_outcome == RestoreOutcome::verified);
  std::vector<double> last_steps;
  for (const auto& m : decoded(transport.sent())) {
    if (const auto* s = std::get_if<msg::Sample>(&m); s && s->sensor == SensorType::step_counter) last_steps = s->values;
  }
  CHECK(last_steps == std::vector<double>{20.0});
}

TEST_CASE("illegal transitions throw and leave the state alone") {
  MockDevice device;
  device.spawn_from_document(fitness_app());
  MockTransport transport(device);
  Session s(fixture_plan("battery_low.profile.json"), transport);
  CHECK_THROWS_AS(s.inject(), IllegalState);
  CHECK_THROWS_AS(s.run(1.0), IllegalState);
  CHECK_THROWS_AS(s.restore(), IllegalState);
  CHECK(s.state() == SessionState::created);
  s.attach();
  CHECK_THROWS_AS(s.attach(), IllegalState);
  CHECK_THROWS_AS(s.run(1.0), IllegalState);
  s.inject();
  CHECK_THROWS_AS(s.inject(), IllegalState);
  CHECK_THROWS_AS(s.run(-1.0), InvalidParams);
  CHECK_THROWS_AS(s.run(std::nan("")), InvalidParams);
  CHECK(s.state() == SessionState::injected);
  s.run(1.0);
  CHECK(s.state() == SessionState::closed);
  CHECK_THROWS_AS(s.attach(), IllegalState);
  CHECK_THROWS_AS(s.inject(), IllegalState);
  CHECK_THROWS_AS(s.run(1.0), IllegalState);
  CHECK_THROWS_AS(s.restore(), IllegalState);
}

TEST_CASE("restore straight after attach is not needed") {
  MockDevice device;
  device.spawn_from_document(fitness_app());
  MockTransport transport(device);
  Session s(fixture_plan("battery_low.profile.json"), transport);
  s.attach();
  CHECK(s.restore() == RestoreOutcome::not_needed);
  CHECK(s.state() == SessionState::closed);
  CHECK(transport.sent().empty());
}

TEST_CASE("restore after inject verifies") {
  MockDevice device;
  const auto app = device.spawn_from_document(fitness_app());
  MockTransport transport(device);
  Session s(fixture_plan("battery_low.profile.json"), transport);
  s.attach();
  s.inject();
  CHECK(s.restore() == RestoreOutcome::verified);
  CHECK(s.state() == SessionState::closed);
  CHECK(app->perceived(SystemKey::battery_level) == PropertyValue{std::int64_t{87}});
}

TEST_CASE("attach failures") {
  MockDevice device;
  MockTransport transport(device);
  Session missing(fixture_plan("battery_low.profile.json"), transport);
  CHECK_THROWS_AS(missing.attach(), AttachError);
  CHECK(missing.state() == SessionState::failed);
  CHECK(missing.restore_outcome() == RestoreOutcome::not_needed);
  CHECK(missing.report().failure_reason.has_value());

  device.spawn_from_document(fitness_app());
  FaultPlan refuse;
  refuse.refuse_attach = true;
  MockTransport refusing(device, refuse);
  Session s(fixture_plan("battery_low.profile.json"), refusing);
  CHECK_THROWS_AS(s.attach(), AttachError);
  CHECK(s.state() == SessionState::failed);
}

TEST_CASE("tamper-detecting app rejects injection; one restore attempt is logged") {
  MockDevice device;
  const auto app = device.spawn_from_document(testing::fixture_text("tamper.app.json"));
  MockTransport transport(device);
  Session s(fixture_plan("battery_low.profile.json"), transport);
  s.attach();
  CHECK_THROWS_AS(s.inject(), InjectError);
  CHECK(s.state() == SessionState::failed);
  const auto report = s.report();
  CHECK(report.failure_reason == std::optional<std::string>("injection rejected"));
  CHECK(logged(report.log, "restore attempted"));
  CHECK(std::count_if(report.log.begin(), report.log.end(),
                      [](const LogEntry& e) { return e.text == "restore attempted"; }) == 1);
  CHECK(report.restore_outcome.has_value());
  CHECK(app->perceived(SystemKey::battery_level) == PropertyValue{std::int64_t{87}});
  CHECK_THROWS_AS(s.run(1.0), IllegalState);
  CHECK_THROWS_AS(s.restore(), IllegalState);
}

TEST_CASE("host message order: baselines, apply, time-ordered run traffic, restore, verification") {
  MockDevice device;
  const auto plan = fixture_plan("full_catalog.profile.json");
  device.spawn_from_document(fitness_app("[]", plan.target.process));
  MockTransport transport(device);
  Session s(plan, transport);
  s.attach();
  s.inject();
  const auto report = s.run(3.0);
  CHECK(report.restore_outcome == RestoreOutcome::verified);
  const auto msgs = decoded(transport.sent());
  const auto keys = plan.property_keys();
  REQUIRE(msgs.size() > 2 * keys.size() + 2);

  for (std::size_t i = 0; i < msgs.size(); ++i) CHECK(seq_of(msgs[i]) == i + 1);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    REQUIRE(std::holds_alternative<msg::Query>(msgs[i]));
    CHECK(std::get<msg::Query>(msgs[i]).key == keys[i]);
  }
  CHECK(std::holds_alternative<msg::ApplyPlan>(msgs[keys.size()]));
  CHECK(std::get<msg::ApplyPlan>(msgs[keys.size()]).plan == plan);
  const std::size_t restore_at = msgs.size() - keys.size() - 1;
  CHECK(std::holds_alternative<msg::Restore>(msgs[restore_at]));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    REQUIRE(std::holds_alternative<msg::Query>(msgs[restore_at + 1 + i]));
    CHECK(std::get<msg::Query>(msgs[restore_at + 1 + i]).key == keys[i]);
  }

  // Run phase: samples are time-ordered; property pushes land on whole seconds.
  std::int64_t last_t = 0;
  std::int64_t pushes = 0;
  std::map<SensorType, std::int64_t> counts;
  for (std::size_t i = keys.size() + 1; i < restore_at; ++i) {
    if (const auto* smp = std::get_if<msg::Sample>(&msgs[i])) {
      CHECK(smp->t_ns >= last_t);
      last_t = smp->t_ns;
      ++counts[smp->sensor];
    } else {
      REQUIRE(std::holds_alternative<msg::SetProperty>(msgs[i]));
      ++pushes;
    }
  }
  CHECK(counts[SensorType::accelerometer] == 150);
  CHECK(counts[SensorType::gyroscope] == 300);
  CHECK(counts[SensorType::step_counter] == 150);
  CHECK(counts[SensorType::ambient_temperature] == 3);
  CHECK(pushes == 6);  // battery and clock on each of 3 ticks
  CHECK(report.property_pushes == 6);
}

TEST_CASE("battery discharge pushes follow the rounded linear level") {
  for (std::int64_t tenths : {5, 10, 20, 35, 600}) {
    MockDevice device;
    device.spawn_from_document(fitness_app());
    MockTransport transport(device);
    SpoofProfile p;
    SignalSpec discharge;
    discharge.mode = SignalMode::battery_discharge;
    discharge.params["start_level"] = 60.0;
    discharge.params["discharge_rate"] = static_cast<double>(tenths) / 10.0;
    p.system_overrides.push_back({SystemKey::battery_level, discharge});
    Session s(with_target(p), transport);
    s.attach();
    s.inject();
    const auto report = s.run(120.0);
    CHECK(report.property_pushes == 120);
    std::int64_t t = 0;
    for (const auto& m : decoded(transport.sent())) {
      if (const auto* sp = std::get_if<msg::SetProperty>(&m)) {
        ++t;
        CHECK(sp->value == PropertyValue{battery_oracle(60, tenths, t)});
      }
    }
    CHECK(t == 120);
    CHECK(report.last_pushed.at(SystemKey::battery_level) == PropertyValue{battery_oracle(60, tenths, 120)});
  }
}

TEST_CASE("clock warp pushes the warped offset each second") {
  MockDevice device;
  device.spawn_from_document(fitness_app());
  MockTransport transport(device);
  SpoofProfile p;
  p.system_overrides.push_back({SystemKey::clock_offset_ms, PropertyValue{std::int64_t{3600000}}});
  p.system_overrides.push_back({SystemKey::clock_scale, PropertyValue{2.0}});
  Session s(with_target(p), transport);
  s.attach();
  s.inject();
  const auto report = s.run(4.0);
  std::vector<PropertyValue> pushed;
  for (const auto& m : decoded(transport.sent())) {
    if (const auto* sp = std::get_if<msg::SetProperty>(&m)) {
      CHECK(sp->key == SystemKey::clock_offset_ms);
      pushed.push_back(sp->value);
    }
  }
  // At real second j the warped clock reads 2 * j s + 1 h, an offset of 1 h + j s.
  CHECK(pushed == std::vector<PropertyValue>{std::int64_t{3601000}, std::int64_t{3602000}, std::int64_t{3603000},
                                             std::int64_t{3604000}});
  CHECK(report.restore_outcome == RestoreOutcome::verified);
}

TEST_CASE("virtual time: long sessions finish instantly with exact durations") {
  MockDevice device;
  device.spawn_from_document(fitness_app());
  MockTransport transport(device);
  SpoofProfile p;
  SensorOverride o;
  o.sensor = SensorType::step_counter;
  o.signal.mode = SignalMode::walking;
  p.sensor_overrides.push_back(o);
  p.default_rate_hz = 5.0;
  Session s(with_target(p), transport);
  s.attach();
  s.inject();
  const auto start = std::chrono::steady_clock::now();
  const auto report = s.run(3600.0);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
  CHECK(report.duration_s == 3600.0);
  CHECK(report.samples_sent.at(SensorType::step_counter) == 18000);
  for (std::size_t i = 1; i < report.log.size(); ++i) CHECK(report.log[i].t_ns >= report.log[i - 1].t_ns);
}

TEST_CASE("wall clock sessions take real time") {
  MockDevice device;
  device.spawn_from_document(fitness_app());
  MockTransport transport(device);
  SessionOptions options;
  options.clock = ClockMode::wall;
  Session s(fixture_plan("walking.profile.json"), transport, options);
  s.attach();
  s.inject();
  const auto start = std::chrono::steady_clock::now();
  const auto report = s.run(0.3);
  CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(290));
  CHECK(report.duration_s >= 0.3);
  CHECK(report.samples_sent.at(SensorType::accelerometer) == 15);
}

TEST_CASE("replayed traces are streamed verbatim") {
  MockDevice device;
  device.spawn_from_document(fitness_app());
  MockTransport transport(device);
  SignalSpec spec;
  spec.mode = SignalMode::running;
  spec.params["noise_sigma"] = 0.2;
  spec.seed = 3;
  const auto trace = synth_trace(spec, SensorType::accelerometer, 20.0, 2.0);
  SessionOptions options;
  options.replay[SensorType::accelerometer] = trace;
  Session s(fixture_plan("walking.profile.json"), transport, options);
  s.attach();
  s.inject();
  s.run(2.0);
  std::vector<SensorSample> seen;
  for (const auto& m : decoded(transport.sent())) {
    if (const auto* smp = std::get_if<msg::Sample>(&m); smp && smp->sensor == SensorType::accelerometer) {
      seen.push_back({smp->t_ns, smp->sensor, smp->values, 3});
    }
  }
  CHECK(seen == trace.samples);
}

TEST_CASE("app events carry both clocks") {
  MockDevice device;
  device.spawn_from_document(fitness_app(
      R"([{"name": "fall", "when": {"magnitude": {"sensor": "accelerometer", "op": ">", "value": 30}}, "emit": "fall_alarm"}])"));
  MockTransport transport(device);
  SpoofProfile p;
  SensorOverride o;
  o.sensor = SensorType::accelerometer;
  o.signal.mode = SignalMode::shake_spike;
  p.sensor_overrides.push_back(o);
  Session s(with_target(p), transport);
  s.attach();
  s.inject();
  const auto report = s.run(3.0);
  REQUIRE(report.app_events.size() == 1);
  CHECK(report.app_events[0].name == "fall_alarm");
  // The half-sine pulse crosses |a| > 30 partway up; both stamps fall inside it.
  CHECK(report.app_events[0].t_ns > 1'000'000'000);
  CHECK(report.app_events[0].t_ns < 1'200'000'000);
  CHECK(report.app_events[0].received_ns == report.app_events[0].t_ns);
}

TEST_CASE("report document carries every field") {
  MockDevice device;
  device.spawn_from_document(fitness_app());
  MockTransport transport(device);
  Session s(fixture_plan("battery_low.profile.json"), transport);
  s.attach();
  s.inject();
  const auto report = s.run(1.0);
  const auto j = Json::parse(report_to_document(report));
  std::vector<std::string> fields;
  for (const auto& [k, _] : j.items()) fields.push_back(k);
  CHECK(fields == std::vector<std::string>{"session_id", "plan_id", "state", "samples_sent", "properties_applied",
                                           "property_pushes", "last_pushed", "app_events", "restore_outcome",
                                           "duration_s", "failure_reason", "log"});
  CHECK(j["state"] == "CLOSED");
  CHECK(j["restore_outcome"] == "verified");
  CHECK(j["failure_reason"].is_null());
  CHECK(j["plan_id"] == s.plan().plan_id);
  CHECK(j["properties_applied"][0]["key"] == "battery.level");
  CHECK(j["properties_applied"][0]["value"] == 5);
}

TEST_CASE("a timed-out baseline query fails inject and leaves restore unverifiable") {
  MockDevice device;
  device.spawn_from_document(fitness_app());
  FaultPlan faults;
  faults.faults[0] = FaultKind::drop_response;
  MockTransport transport(device, faults);
  Session s(fixture_plan("battery_low.profile.json"), transport);
  s.attach();
  CHECK_THROWS_AS(s.inject(), InjectError);
  CHECK(s.state() == SessionState::failed);
  CHECK(s.restore_outcome() == RestoreOutcome::attempted);
  CHECK(s.report().failure_reason == std::optional<std::string>("baseline query for battery.level timed out"));
}

TEST_CASE("property: any single fault ends with baselines back") {
  testing::Gen g(9090);
  const std::vector<std::string> fixtures = {"battery_low", "walking", "full_catalog"};
  for (int trial = 0; trial < 60; ++trial) {
    const auto plan = fixture_plan(g.pick(fixtures) + ".profile.json");
    const double duration = g.pick(std::vector<double>{0.5, 2.0, 3.0});
    std::size_t total = 0;
    {
      MockDevice device;
      device.spawn_from_document(fitness_app("[]", plan.target.process));
      MockTransport dry(device);
      Session s(plan, dry);
      s.attach();
      s.inject();
      s.run(duration);
      total = dry.sent().size();
    }
    const std::size_t first = plan.property_keys().size();           // apply_plan
    const std::size_t last = total - plan.property_keys().size() - 2;  // final run message
    FaultPlan faults;
    const auto index = static_cast<std::size_t>(g.integer(static_cast<int>(first), static_cast<int>(last)));
    faults.faults[index] = g.pick(std::vector<FaultKind>{FaultKind::send_error, FaultKind::nack, FaultKind::drop_response});
    MockDevice device;
    const auto app = device.spawn_from_document(fitness_app("[]", plan.target.process));
    MockTransport transport(device, faults);
    Session s(plan, transport);
    s.attach();
    SessionReport report;
    try {
      s.inject();
      report = s.run(duration);
    } catch (const InjectError&) {
      report = s.report();
    }
    INFO("fault " << fault_kind_name(faults.faults.begin()->second) << " at " << index << " of " << total);
    CHECK(report.restore_outcome == RestoreOutcome::verified);
    CHECK(logged(report.log, "restore attempted"));
    for (auto key : kAllSystemKeys) CHECK(app->perceived(key) == app->config().baseline.at(key));
    CHECK_FALSE(app->plan_active());
    if (report.state == SessionState::failed) {
      CHECK(report.failure_reason.has_value());
    } else {
      CHECK(report.state == SessionState::closed);
    }
  }
}

TEST_CASE("property: a crashed agent still gets exactly one restore attempt") {
  testing::Gen g(9191);
  for (int trial = 0; trial < 40; ++trial) {
    const auto plan = fixture_plan("full_catalog.profile.json");
    FaultPlan faults;
    const auto index = static_cast<std::size_t>(g.integer(0, 40));
    faults.faults[index] = FaultKind::crash;
    if (g.coin()) faults.faults[index + static_cast<std::size_t>(g.integer(1, 5))] = FaultKind::send_error;
    MockDevice device;
    device.spawn_from_document(fitness_app("[]", plan.target.process));
    MockTransport transport(device, faults);
    Session s(plan, transport);
    s.attach();
    SessionReport report;
    try {
      s.inject();
      report = s.run(1.0);
    } catch (const InjectError&) {
      report = s.report();
    }
    CHECK(report.state == SessionState::failed);
    CHECK(report.failure_reason.has_value());
    CHECK(report.restore_outcome == RestoreOutcome::attempted);
    CHECK(std::count_if(report.log.begin(), report.log.end(),
                        [](const LogEntry& e) { return e.text == "restore attempted"; }) == 1);
  }
}

TEST_CASE("property: random operation sequences follow the state machine") {
  enum class Op { attach, inject, run, restore };
  testing::Gen g(31337);
  for (int trial = 0; trial < 300; ++trial) {
    MockDevice device;
    const bool tamper = g.coin(0.2);
    device.spawn_from_document(tamper ? testing::fixture_text("tamper.app.json") : fitness_app());
    MockTransport transport(device);
    Session s(fixture_plan("battery_low.profile.json"), transport);
    SessionState model = SessionState::created;
    for (int step = 0; step < 8; ++step) {
      const auto op = g.pick(std::vector<Op>{Op::attach, Op::inject, Op::run, Op::restore});
      const SessionState before = s.state();
      CHECK(before == model);
      switch (op) {
        case Op::attach:
          if (model == SessionState::created) {
            s.attach();
            model = SessionState::attached;
          } else {
            CHECK_THROWS_AS(s.attach(), IllegalState);
          }
          break;
        case Op::inject:
          if (model == SessionState::attached) {
            if (tamper) {
              CHECK_THROWS_AS(s.inject(), InjectError);
              model = SessionState::failed;
            } else {
              s.inject();
              model = SessionState::injected;
            }
          } else {
            CHECK_THROWS_AS(s.inject(), IllegalState);
          }
          break;
        case Op::run:
          if (model == SessionState::injected) {
            CHECK(s.run(1.0).state == SessionState::closed);
            model = SessionState::closed;
          } else {
            CHECK_THROWS_AS(s.run(1.0), IllegalState);
          }
          break;
        case Op::restore:
          if (model == SessionState::attached) {
            CHECK(s.restore() == RestoreOutcome::not_needed);
            model = SessionState::closed;
          } else if (model == SessionState::injected) {
            CHECK(s.restore() == RestoreOutcome::verified);
            model = SessionState::closed;
          } else {
            CHECK_THROWS_AS(s.restore(), IllegalState);
          }
          break;
      }
      CHECK(s.state() == model);
      // Terminal states report a restore outcome whenever the plan may have
      // been touched.
      if ((model == SessionState::closed || model == SessionState::failed)) {
        CHECK(s.report().restore_outcome.has_value());
      }
    }
  }
}

TEST_CASE("concurrent sessions on separate apps do not interfere") {
  MockDevice device;
  constexpr int kSessions = 8;
  std::vector<std::shared_ptr<MockApp>> apps;
  std::vector<HookPlan> plans;
  for (int i = 0; i < kSessions; ++i) {
    const auto process = "com.example.app" + std::to_string(i);
    apps.push_back(device.spawn_from_document(R"({"process": ")" + process + R"(", "baseline": {"battery.level": )" +
                                              std::to_string(50 + i) + "}}"));
    auto profile = parse_profile(testing::fixture_text("walking.profile.json"));
    profile.system_overrides.push_back({SystemKey::battery_level, PropertyValue{std::int64_t{i}}});
    plans.push_back(with_target(profile, process));
  }
  MockTransport transport(device);
  std::vector<SessionReport> reports(kSessions);
  std::vector<std::thread> threads;
  for (int i = 0; i < kSessions; ++i) {
    threads.emplace_back([&, i] {
      Session s(plans[static_cast<std::size_t>(i)], transport);
      s.attach();
      s.inject();
      reports[static_cast<std::size_t>(i)] = s.run(20.0);
    });
  }
  for (auto& t : threads) t.join();
  std::set<std::string> ids;
  for (int i = 0; i < kSessions; ++i) {
    const auto& r = reports[static_cast<std::size_t>(i)];
    CHECK(r.state == SessionState::closed);
    CHECK(r.restore_outcome == RestoreOutcome::verified);
    CHECK(r.samples_sent.at(SensorType::accelerometer) == 1000);
    CHECK(apps[static_cast<std::size_t>(i)]->perceived(SystemKey::battery_level) == PropertyValue{std::int64_t{50 + i}});
    ids.insert(r.session_id);
  }
  CHECK(ids.size() == kSessions);
}

TEST_CASE("a session shared across threads serializes its callers") {
  MockDevice device;
  device.spawn_from_document(fitness_app());
  MockTransport transport(device);
  Session s(fixture_plan("walking.profile.json"), transport);
  s.attach();
  s.inject();
  std::thread runner([&] { s.run(30.0); });
  std::vector<std::thread> readers;
  for (int i = 0; i < 4; ++i) {
    readers.emplace_back([&] {
      for (int k = 0; k < 200; ++k) {
        const auto st = s.state();
        CHECK(st != SessionState::failed);
        (void)s.report();
      }
    });
  }
  runner.join();
  for (auto& t : readers) t.join();
  CHECK(s.state() == SessionState::closed);
}

TEST_CASE("state and outcome names") {
  CHECK(state_name(SessionState::created) == "CREATED");
  CHECK(state_name(SessionState::restoring) == "RESTORING");
  CHECK(state_name(SessionState::failed) == "FAILED");
  CHECK(outcome_name(RestoreOutcome::not_needed) == "not_needed");
  CHECK(clock_mode_from_name("virtual") == ClockMode::virtual_time);
  CHECK(clock_mode_from_name("wall") == ClockMode::wall);
  CHECK_FALSE(clock_mode_from_name("sundial").has_value());
}
