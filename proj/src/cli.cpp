#include "spoofkit/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "spoofkit/agent_script.hpp"
#include "spoofkit/errors.hpp"
#include "spoofkit/hookplan.hpp"
#include "spoofkit/mock_device.hpp"
#include "spoofkit/profile.hpp"
#include "spoofkit/session.hpp"
#include "spoofkit/trace_io.hpp"
#include "spoofkit/transport.hpp"

namespace spoofkit {

namespace {

// Signals an exit code from deep inside a command.
struct Exit {
  int code;
};

std::string read_input(const std::string& path, std::ostream& err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    err << "error: cannot read " << path << "\n";
    throw Exit{kExitUsage};
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& err) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) {
    err << "error: cannot write " << path << "\n";
    throw Exit{kExitUsage};
  }
}

void emit_or_write(const std::string& path, const std::string& text, std::ostream& out, std::ostream& err) {
  if (path.empty()) {
    out << text;
  } else {
    write_output(path, text, err);
  }
}

SpoofProfile load_profile(const std::string& path, std::ostream& err) {
  const auto analysis = analyze_profile(read_input(path, err));
  if (analysis.syntax_error) {
    err << format_diagnostic({Diagnostic::Severity::error, analysis.syntax_error->path(),
                              analysis.syntax_error->what()})
        << "\n";
    throw Exit{kExitInvalid};
  }
  for (const auto& d : analysis.diagnostics) err << format_diagnostic(d) << "\n";
  if (!analysis.ok()) throw Exit{kExitInvalid};
  return *analysis.profile;
}

HookPlan load_plan_input(const std::string& path, std::ostream& err) {
  const std::string text = read_input(path, err);
  const Json probe = Json::parse(text, nullptr, false);
  if (probe.is_object() && probe.contains("plan_id")) return plan_from_document(text);
  return compile(load_profile(path, err));
}

int cmd_validate(const std::string& profile_path, std::ostream& err) {
  load_profile(profile_path, err);
  return kExitOk;
}

int cmd_synth(const std::string& profile_path, const std::string& sensor_name_arg, double duration_s,
              const std::string& out_path, std::ostream& out, std::ostream& err) {
  const auto profile = load_profile(profile_path, err);
  const auto sensor = sensor_from_name(sensor_name_arg);
  if (!sensor) {
    err << "error: unknown sensor " << sensor_name_arg << "\n";
    return kExitInvalid;
  }
  const auto* override_ = profile.find_sensor(*sensor);
  if (!override_) {
    err << "error: profile has no override for " << sensor_name_arg << "\n";
    return kExitInvalid;
  }
  const auto trace = synth_trace(override_->signal, *sensor, profile.rate_for(*override_), duration_s);
  write_output(out_path, trace_to_string(trace), err);
  out << trace.samples.size() << " samples written to " << out_path << "\n";
  return kExitOk;
}

struct RunArgs {
  std::string transport = "mock";
  std::string app_path;
  std::string report_path;
  std::string clock = "virtual";
  std::string agent_command;
  double duration_s = 0.0;
  int timeout_ms = 5000;
};

int exit_for(const SessionReport& report) {
  if (report.state == SessionState::closed && report.restore_outcome &&
      *report.restore_outcome != RestoreOutcome::attempted) {
    return kExitOk;
  }
  return kExitSessionFailed;
}

int execute_session(const HookPlan& plan, Transport& transport, SessionOptions options, double duration_s,
                    const std::string& report_path, std::ostream& out, std::ostream& err) {
  Session session(plan, transport, std::move(options));
  SessionReport report;
  try {
    session.attach();
    session.inject();
    report = session.run(duration_s);
  } catch (const SessionError& e) {
    err << "error: " << e.what() << "\n";
    report = session.report();
  }
  if (!report_path.empty()) write_output(report_path, report_to_document(report), err);
  out << "session " << report.session_id << " " << state_name(report.state) << "; restore "
      << (report.restore_outcome ? outcome_name(*report.restore_outcome) : std::string_view("none")) << "; "
      << report.app_events.size() << " app events\n";
  for (const auto& [sensor, count] : report.samples_sent) {
    out << "  " << sensor_name(sensor) << ": " << count << " samples\n";
  }
  for (const auto& e : report.app_events) out << "  event " << e.name << " at " << e.t_ns << " ns\n";
  if (report.failure_reason) out << "  failure: " << *report.failure_reason << "\n";
  return exit_for(report);
}

SessionOptions session_options(const RunArgs& args, std::ostream& err) {
  SessionOptions options;
  const auto clock = clock_mode_from_name(args.clock);
  if (!clock) {
    err << "error: --clock must be virtual or wall\n";
    throw Exit{kExitUsage};
  }
  options.clock = *clock;
  if (args.timeout_ms < 0) {
    err << "error: --timeout-ms must be non-negative\n";
    throw Exit{kExitUsage};
  }
  options.timeout = std::chrono::milliseconds(args.timeout_ms);
  return options;
}

int cmd_run(const std::string& profile_path, const RunArgs& args, std::ostream& out, std::ostream& err) {
  auto options = session_options(args, err);
  if (args.transport == "mock" && args.app_path.empty()) {
    err << "error: --app is required with --transport mock\n";
    return kExitUsage;
  }
  if (args.transport == "external" && args.agent_command.empty()) {
    err << "error: --agent-command is required with --transport external\n";
    return kExitUsage;
  }
  if (args.transport != "mock" && args.transport != "external") {
    err << "error: --transport must be mock or external\n";
    return kExitUsage;
  }
  const auto plan = compile(load_profile(profile_path, err));
  if (args.transport == "external") {
    PipeTransport transport(args.agent_command);
    return execute_session(plan, transport, std::move(options), args.duration_s, args.report_path, out, err);
  }
  MockDevice device;
  device.spawn_from_document(read_input(args.app_path, err));
  MockTransport transport(device);
  return execute_session(plan, transport, std::move(options), args.duration_s, args.report_path, out, err);
}

int cmd_replay(const std::string& trace_path, const std::string& profile_path, const RunArgs& args,
               std::ostream& out, std::ostream& err) {
  auto options = session_options(args, err);
  const auto trace = trace_from_string(read_input(trace_path, err));
  MockDevice device;
  const auto app = device.spawn_from_document(read_input(args.app_path, err));

  HookPlan plan;
  if (profile_path.empty()) {
    SpoofProfile profile;
    profile.target.process = app->process();
    std::vector<double> first(sensor_dims(trace.sensor), 0.0);
    if (!trace.samples.empty()) first = trace.samples.front().values;
    profile.sensor_overrides.push_back({trace.sensor, constant_spec(first), trace.rate_hz});
    plan = compile(profile);
  } else {
    const auto profile = load_profile(profile_path, err);
    if (!profile.find_sensor(trace.sensor)) {
      err << "error: profile has no override for " << sensor_name(trace.sensor) << "\n";
      return kExitInvalid;
    }
    plan = compile(profile);
  }
  const double duration_s =
      trace.samples.empty() ? 0.0 : static_cast<double>(trace.samples.back().t_ns) / 1e9;
  options.replay.emplace(trace.sensor, trace);
  MockTransport transport(device);
  return execute_session(plan, transport, std::move(options), duration_s, args.report_path, out, err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"spoofkit: compile spoof profiles into hook plans and run spoofing sessions", "spoofkit"};
  app.require_subcommand(1);
  app.allow_windows_style_options(false);

  std::string profile_path;
  std::string input_path;
  std::string trace_path;
  std::string out_path;
  std::string sensor;
  double duration_s = 0.0;
  RunArgs run_args;
  std::string replay_profile;

  auto* validate = app.add_subcommand("validate", "check a profile and print diagnostics");
  validate->add_option("profile", profile_path, "profile document")->required();

  auto* synth = app.add_subcommand("synth", "synthesize one sensor's trace from a profile");
  synth->add_option("profile", profile_path, "profile document")->required();
  synth->add_option("--sensor", sensor, "sensor name")->required();
  synth->add_option("--duration", duration_s, "seconds")->required();
  synth->add_option("--out", out_path, "trace file")->required();

  auto* compile_cmd = app.add_subcommand("compile", "compile a profile into a plan document");
  compile_cmd->add_option("profile", profile_path, "profile document")->required();
  compile_cmd->add_option("--out", out_path, "plan file (stdout when omitted)");

  auto* emit = app.add_subcommand("emit-agent", "emit the agent script for a profile or plan document");
  emit->add_option("input", input_path, "profile or plan document")->required();
  emit->add_option("--out", out_path, "script file (stdout when omitted)");

  auto* run = app.add_subcommand("run", "run a full spoofing session");
  run->add_option("profile", profile_path, "profile document")->required();
  run->add_option("--transport", run_args.transport, "mock or external");
  run->add_option("--app", run_args.app_path, "mock app config (mock transport)");
  run->add_option("--agent-command", run_args.agent_command, "agent command (external transport)");
  run->add_option("--duration", run_args.duration_s, "seconds")->required();
  run->add_option("--report", run_args.report_path, "report file");
  run->add_option("--clock", run_args.clock, "virtual or wall");
  run->add_option("--timeout-ms", run_args.timeout_ms, "reply timeout in milliseconds");

  auto* replay = app.add_subcommand("replay", "stream a stored trace into a mock app");
  replay->add_option("trace", trace_path, "trace file")->required();
  replay->add_option("--app", run_args.app_path, "mock app config")->required();
  replay->add_option("--report", run_args.report_path, "report file");
  replay->add_option("--profile", replay_profile, "profile supplying the remaining overrides");
  replay->add_option("--clock", run_args.clock, "virtual or wall");
  replay->add_option("--timeout-ms", run_args.timeout_ms, "reply timeout in milliseconds");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(profile_path, err);
    if (synth->parsed()) return cmd_synth(profile_path, sensor, duration_s, out_path, out, err);
    if (compile_cmd->parsed()) {
      emit_or_write(out_path, plan_to_document(compile(load_profile(profile_path, err))), out, err);
      return kExitOk;
    }
    if (emit->parsed()) {
      emit_or_write(out_path, emit_agent_script(load_plan_input(input_path, err)), out, err);
      return kExitOk;
    }
    if (run->parsed()) return cmd_run(profile_path, run_args, out, err);
    if (replay->parsed()) return cmd_replay(trace_path, replay_profile, run_args, out, err);
  } catch (const Exit& e) {
    return e.code;
  } catch (const SchemaError& e) {
    for (const auto& d : e.diagnostics()) err << format_diagnostic(d) << "\n";
    return kExitInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}

}  // namespace spoofkit
