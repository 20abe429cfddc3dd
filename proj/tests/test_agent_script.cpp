#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <regex>
#include <set>
#include <sstream>

#include "spoofkit/agent_script.hpp"
#include "spoofkit/protocol.hpp"
#include "support.hpp"

using namespace spoofkit;
namespace fs = std::filesystem;

namespace {

HookPlan fixture_plan(const std::string& name) { return compile(parse_profile(testing::fixture_text(name))); }

std::string run_capture(const std::string& command, int* status = nullptr) {
  std::string out;
  FILE* pipe = ::popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int rc = ::pclose(pipe);
  if (status != nullptr) *status = rc;
  return out;
}

fs::path scratch_dir() {
  static int counter = 0;
  auto dir = fs::temp_directory_path() / ("spoofkit_agent_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

struct Stanza {
  std::string api;
  std::string class_token;
  std::string kind;
  std::string body;
};

// Splits the script on its @hook/@end markers.
std::vector<Stanza> stanzas(const std::string& script) {
  std::vector<Stanza> out;
  const std::regex open(R"(^// @hook (\S+) class=(\S+) kind=(\S+)$)");
  std::istringstream in(script);
  std::string line;
  Stanza* current = nullptr;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_match(line, m, open)) {
      REQUIRE(current == nullptr);
      out.push_back({m[1], m[2], m[3], ""});
      current = &out.back();
    } else if (current != nullptr && line == "// @end " + current->api) {
      current = nullptr;
    } else if (current != nullptr) {
      current->body += line + "\n";
    }
  }
  CHECK(current == nullptr);
  return out;
}

// Bracket balance outside string literals and comments.
bool balanced(const std::string& src) {
  std::vector<char> stack;
  char quote = 0;
  bool line_comment = false;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const char c = src[i];
    if (line_comment) {
      if (c == '\n') line_comment = false;
      continue;
    }
    if (quote != 0) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      line_comment = true;
    } else if (c == '\'' || c == '"' || c == '`') {
      quote = c;
    } else if (c == '(' || c == '[' || c == '{') {
      stack.push_back(c);
    } else if (c == ')' || c == ']' || c == '}') {
      const char want = c == ')' ? '(' : c == ']' ? '[' : '{';
      if (stack.empty() || stack.back() != want) return false;
      stack.pop_back();
    }
  }
  return stack.empty() && quote == 0;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

void check_sound(const HookPlan& plan, const std::string& script) {
  const auto found = stanzas(script);
  REQUIRE(found.size() == plan.hooks.size());
  for (std::size_t i = 0; i < found.size(); ++i) {
    const auto& b = binding(plan.hooks[i].api);
    CHECK(found[i].api == b.name);
    CHECK(found[i].class_token == b.class_token);
    CHECK(found[i].kind == hook_kind_name(plan.hooks[i].kind));
    CHECK(found[i].body.find(std::string(b.java_class)) != std::string::npos);
    CHECK(found[i].body.find(std::string(b.member)) != std::string::npos);
    CHECK(balanced(found[i].body));
  }
  CHECK(count(script, "// @restore\n") == 1);
  CHECK(count(script, "// @end restore\n") == 1);
  CHECK(balanced(script));
  CHECK(script.find("const PLAN_ID = \"" + plan.plan_id + "\";") != std::string::npos);
}

#ifdef SPOOFKIT_NODE
bool node_accepts(const std::string& script) {
  const auto dir = scratch_dir();
  testing::write_file((dir / "agent.js").string(), script);
  int status = 0;
  run_capture(std::string(SPOOFKIT_NODE) + " --check " + (dir / "agent.js").string() + " 2>&1", &status);
  fs::remove_all(dir);
  return status == 0;
}

std::vector<Json> run_harness(const std::string& script, const Json& commands) {
  const auto dir = scratch_dir();
  testing::write_file((dir / "agent.js").string(), script);
  testing::write_file((dir / "commands.json").string(), commands.dump());
  int status = 0;
  const auto out = run_capture(std::string(SPOOFKIT_NODE) + " " + SPOOFKIT_AGENT_HARNESS + " " +
                                   (dir / "agent.js").string() + " " + (dir / "commands.json").string() + " 2>&1",
                               &status);
  fs::remove_all(dir);
  INFO(out);
  REQUIRE(status == 0);
  std::vector<Json> lines;
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) lines.push_back(Json::parse(line));
  return lines;
}

Json host(const HostMessage& m) { return Json::parse(encode(m)); }
Json call(const std::string& cls, const std::string& member, Json args = Json::array()) {
  return Json{{"call", Json{{"class", cls}, {"member", member}, {"args", std::move(args)}}}};
}
Json field(const std::string& cls, const std::string& member) {
  return Json{{"field", Json{{"class", cls}, {"member", member}}}};
}
Json hostcmd(const HostMessage& m) { return Json{{"host", host(m)}}; }
#endif

const std::vector<std::string> kGoldenFixtures = {"battery_low", "walking", "full_catalog"};

}  // namespace

TEST_CASE("battery.level 5 script hooks BatteryManager and inlines 5") {
  const auto plan = fixture_plan("battery_low.profile.json");
  const auto script = emit_agent_script(plan);
  CHECK(script.find("BatteryManager") != std::string::npos);
  const auto found = stanzas(script);
  REQUIRE(found.size() == 1);
  CHECK(found[0].class_token == "BatteryManager");
  CHECK(found[0].body.find(R"(initial: {"battery.level":5})") != std::string::npos);
  check_sound(plan, script);
}

TEST_CASE("empty plan gives the scaffold and the restore stanza only") {
  SpoofProfile p;
  p.target.process = "com.example.empty";
  const auto plan = compile(p);
  const auto script = emit_agent_script(plan);
  CHECK(stanzas(script).empty());
  CHECK(script.find("// @restore") != std::string::npos);
  CHECK(script.find("recv(onMessage);") != std::string::npos);
  check_sound(plan, script);
}

TEST_CASE("emission is deterministic") {
  for (const auto& name : kGoldenFixtures) {
    const auto plan = fixture_plan(name + ".profile.json");
    CHECK(emit_agent_script(plan) == emit_agent_script(plan));
    CHECK(emit_agent_script(plan) == emit_agent_script(plan_from_document(plan_to_document(plan))));
  }
}

TEST_CASE("property: every hook gets one sound stanza with its class token") {
  testing::Gen g(515);
  for (int i = 0; i < 300; ++i) {
    const auto plan = compile(testing::random_profile(g));
    check_sound(plan, emit_agent_script(plan));
  }
}

TEST_CASE("bracket scanner self-check") {
  CHECK(balanced("f(a, [1, 2], {b: '}'})"));
  CHECK(balanced("x = \"(\"; // )\n"));
  CHECK_FALSE(balanced("f(a"));
  CHECK_FALSE(balanced("f(a]"));
  CHECK_FALSE(balanced("'open"));
}

TEST_CASE("golden agent scripts") {
  const bool update = std::getenv("SPOOFKIT_UPDATE_GOLDEN") != nullptr;
  for (const auto& name : kGoldenFixtures) {
    const auto script = emit_agent_script(fixture_plan(name + ".profile.json"));
    const auto path = std::string(SPOOFKIT_GOLDEN) + "/" + name + ".agent.js";
    if (update) testing::write_file(path, script);
    INFO(path);
    CHECK(fs::exists(path));
    CHECK(testing::read_file(path) == script);
  }
}

#ifdef SPOOFKIT_NODE
TEST_CASE("node parses every emitted script") {
  for (const auto& name : kGoldenFixtures) {
    CHECK(node_accepts(emit_agent_script(fixture_plan(name + ".profile.json"))));
  }
  testing::Gen g(616);
  for (int i = 0; i < 20; ++i) CHECK(node_accepts(emit_agent_script(compile(testing::random_profile(g)))));
  CHECK_FALSE(node_accepts("function ( {"));
}

TEST_CASE("agent script applies, spoofs and restores against a simulated runtime") {
  const auto plan = fixture_plan("full_catalog.profile.json");
  const std::string battery = "android.os.BatteryManager";
  const std::string queue = "android.hardware.SystemSensorManager$SensorEventQueue";
  Json cmds = Json::array();
  cmds.push_back(call(battery, "getIntProperty", {4}));                                   // 0
  cmds.push_back(hostcmd(msg::ApplyPlan{1, plan}));                                       // 1
  cmds.push_back(call(battery, "getIntProperty", {4}));                                   // 2
  cmds.push_back(call(battery, "isCharging"));                                            // 3
  cmds.push_back(field("android.os.Build", "MODEL"));                                    // 4
  cmds.push_back(call("java.lang.System", "currentTimeMillis"));                         // 5
  cmds.push_back(hostcmd(msg::Sample{2, SensorType::accelerometer, 20'000'000, {1.0, 2.0, 3.0}}));  // 6
  cmds.push_back(call(queue, "dispatchSensorEvent", {1, {0.0, 0.0, 9.81}, 3, 0}));       // 7
  cmds.push_back(call(queue, "dispatchSensorEvent", {4, {0.1, 0.2, 0.3}, 3, 0}));        // 8
  cmds.push_back(hostcmd(msg::SetProperty{3, SystemKey::battery_level, std::int64_t{30}}));  // 9
  cmds.push_back(call(battery, "getIntProperty", {4}));                                   // 10
  cmds.push_back(hostcmd(msg::Query{4, SystemKey::battery_level}));                       // 11
  cmds.push_back(hostcmd(msg::Restore{5}));                                               // 12
  cmds.push_back(call(battery, "getIntProperty", {4}));                                   // 13
  cmds.push_back(field("android.os.Build", "MODEL"));                                    // 14
  cmds.push_back(call("java.lang.System", "currentTimeMillis"));                         // 15
  cmds.push_back(call(queue, "dispatchSensorEvent", {1, {0.0, 0.0, 9.81}, 3, 0}));       // 16
  cmds.push_back(hostcmd(msg::Query{6, SystemKey::battery_level}));                       // 17
  cmds.push_back(hostcmd(msg::Query{7, SystemKey::build_model}));                         // 18
  cmds.push_back(hostcmd(msg::Restore{5}));                                               // 19: duplicate seq
  cmds.push_back(Json{{"host", Json{{"type", "reboot"}, {"seq", 8}}}});                   // 20
  cmds.push_back(hostcmd(msg::ApplyPlan{9, plan}));                                       // 21
  cmds.push_back(hostcmd(msg::ApplyPlan{10, plan}));                                      // 22
  cmds.push_back(hostcmd(msg::Sample{11, SensorType::gyroscope, 1, {1.0, 1.0, 1.0}}));   // 23
  cmds.push_back(hostcmd(msg::Restore{12}));                                              // 24

  const auto out = run_harness(emit_agent_script(plan), cmds);
  REQUIRE(out.size() == cmds.size());
  auto reply = [&](std::size_t i) { return decode_agent(out[i]["reply"].dump()); };
  auto result = [&](std::size_t i) { return out[i]["result"]; };

  CHECK(result(0) == 87);
  CHECK(reply(1) == AgentMessage{msg::Ack{1}});
  CHECK(result(2) == 40);
  CHECK(result(3) == false);
  CHECK(result(4) == "Pixel 8");
  CHECK(result(5) == 1700000000000LL + 3600000);
  CHECK(reply(6) == AgentMessage{msg::Ack{2}});
  CHECK(result(7) == Json{1.0, 2.0, 3.0});
  CHECK(result(8) == Json{0.1, 0.2, 0.3});  // gyroscope hooked but no sample yet
  CHECK(reply(9) == AgentMessage{msg::Ack{3}});
  CHECK(result(10) == 30);
  CHECK(reply(11) == AgentMessage{msg::Value{4, SystemKey::battery_level, std::int64_t{30}}});
  CHECK(reply(12) == AgentMessage{msg::Ack{5}});
  CHECK(result(13) == 87);
  CHECK(result(14) == "RealPhone");
  CHECK(result(15) == 1700000000000LL);
  CHECK(result(16) == Json{0.0, 0.0, 9.81});
  CHECK(reply(17) == AgentMessage{msg::Value{6, SystemKey::battery_level, std::int64_t{87}}});
  CHECK(reply(18) == AgentMessage{msg::Value{7, SystemKey::build_model, std::string("RealPhone")}});
  CHECK(reply(19) == AgentMessage{msg::Ack{5}});
  CHECK(reply(20) == AgentMessage{msg::Nack{8, "unknown message type"}});
  CHECK(reply(21) == AgentMessage{msg::Ack{9}});
  CHECK(reply(22) == AgentMessage{msg::Nack{10, "plan already applied"}});
  CHECK(reply(23) == AgentMessage{msg::Ack{11}});
  CHECK(reply(24) == AgentMessage{msg::Ack{12}});
}

TEST_CASE("agent script refuses a plan it was not built for and unhooked traffic") {
  const auto plan = fixture_plan("battery_low.profile.json");
  const auto other = fixture_plan("walking.profile.json");
  Json cmds = Json::array();
  cmds.push_back(hostcmd(msg::Sample{1, SensorType::accelerometer, 1, {0.0, 0.0, 9.81}}));
  cmds.push_back(hostcmd(msg::ApplyPlan{2, other}));
  cmds.push_back(hostcmd(msg::ApplyPlan{3, plan}));
  cmds.push_back(hostcmd(msg::Sample{4, SensorType::accelerometer, 1, {0.0, 0.0, 9.81}}));
  cmds.push_back(hostcmd(msg::SetProperty{5, SystemKey::build_model, std::string("X")}));
  cmds.push_back(hostcmd(msg::Query{6, SystemKey::build_model}));
  const auto out = run_harness(emit_agent_script(plan), cmds);
  REQUIRE(out.size() == cmds.size());
  auto reply = [&](std::size_t i) { return decode_agent(out[i]["reply"].dump()); };
  CHECK(reply(0) == AgentMessage{msg::Nack{1, "no plan applied"}});
  CHECK(reply(1) == AgentMessage{msg::Nack{2, "plan mismatch"}});
  CHECK(reply(2) == AgentMessage{msg::Ack{3}});
  CHECK(reply(3) == AgentMessage{msg::Nack{4, "sensor not hooked"}});
  CHECK(reply(4) == AgentMessage{msg::Nack{5, "key not hooked"}});
  CHECK(reply(5) == AgentMessage{msg::Nack{6, "unreadable key"}});
}
#endif
