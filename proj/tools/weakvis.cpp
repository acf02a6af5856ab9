// Command-line front end: explore instrumented object models, check traces
// and histories against weak-visibility specifications, and cross-validate
// the membership checker against the generative enumeration.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "weakvis/explorer.hpp"
#include "weakvis/json_io.hpp"
#include "weakvis/membership.hpp"
#include "weakvis/monitor.hpp"
#include "weakvis/programs.hpp"

namespace {

using namespace weakvis;

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
  std::string spec_name;
  std::vector<std::string> vis_overrides;
  std::vector<std::int32_t> values = {0, 1, 2};
  std::string out_path;
};

std::map<std::string, VisibilityKind> parse_overrides(const std::vector<std::string>& raw) {
  std::map<std::string, VisibilityKind> out;
  for (const std::string& entry : raw) {
    std::size_t eq = entry.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--vis expects method=absolute|monotonic, got: " + entry);
    auto kind = visibility_from_string(entry.substr(eq + 1));
    if (!kind)
      throw CLI::ValidationError("unknown visibility kind in: " + entry);
    out[entry.substr(0, eq)] = *kind;
  }
  return out;
}

WeakVisibilitySpec build_spec(const CommonOptions& opts) {
  return make_weak_spec(opts.spec_name, parse_overrides(opts.vis_overrides));
}

Json config_echo(const CommonOptions& opts) {
  Json j;
  j["spec"] = opts.spec_name;
  j["vis"] = opts.vis_overrides;
  j["values"] = opts.values;
  return j;
}

void emit_report(const CommonOptions& opts, Json report,
                 std::chrono::steady_clock::time_point started) {
  report["schema"] = "weakvis/1";
  report["timing_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  std::string text = report.dump(2);
  if (!opts.out_path.empty()) {
    std::ofstream out(opts.out_path);
    out << text << "\n";
  }
  std::cout << text << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<Value> completion_universe(const WeakVisibilitySpec& spec,
                                       std::span<const std::int32_t> values, int max_ops) {
  std::vector<Value> out;
  for (const std::string& m : spec.spec->methods())
    for (const Value& y : spec.spec->return_universe(m, values, max_ops))
      if (std::find(out.begin(), out.end(), y) == out.end()) out.push_back(y);
  return out;
}

int cmd_explore(const CommonOptions& opts, const std::string& model,
                const std::string& client_path, const std::string& client_inline,
                const std::string& mode, std::uint64_t seed, std::uint64_t count,
                int step_budget, int table_size, unsigned jobs) {
  auto started = std::chrono::steady_clock::now();
  auto program = program_by_name(model, table_size);
  std::string client_text = client_inline;
  if (!client_path.empty()) client_text = read_file(client_path);
  if (client_text.empty())
    throw CLI::ValidationError("provide a client via --client or --client-inline");
  ClientProgram client = parse_client(client_text);

  CommonOptions effective = opts;
  if (effective.spec_name.empty())
    effective.spec_name = program->spec().spec->name();
  WeakVisibilitySpec spec = build_spec(effective);

  ExplorerConfig cfg;
  cfg.step_budget = step_budget;
  cfg.table_size = table_size;
  cfg.jobs = jobs;
  cfg.spec = spec;

  ExploreStats stats;
  if (mode == "exhaustive")
    stats = enumerate_schedules(*program, client, cfg);
  else if (mode == "random")
    stats = random_schedules(*program, client, cfg, seed, count);
  else
    throw CLI::ValidationError("--mode must be exhaustive or random");

  Json report;
  report["command"] = "explore";
  report["config"] = config_echo(effective);
  report["config"]["model"] = model;
  report["config"]["client"] = client_to_string(client);
  report["config"]["mode"] = mode;
  report["config"]["seed"] = seed;
  report["config"]["count"] = count;
  report["config"]["step_budget"] = step_budget;
  report["config"]["table_size"] = table_size;
  report["config"]["jobs"] = jobs;
  report["stats"] = {{"schedules", stats.schedules},
                     {"steps", stats.steps},
                     {"violations", stats.violations}};
  report["ok"] = stats.violations == 0;
  if (stats.first_violation) {
    Json v;
    v["schedule"] = stats.first_violation->schedule;
    v["op"] = stats.first_violation->violation.op;
    v["reason"] = to_string(stats.first_violation->violation.reason);
    v["prefix_len"] = stats.first_violation->violation.prefix_len;
    report["first_violation"] = std::move(v);
  }
  emit_report(effective, std::move(report), started);
  return stats.violations == 0 ? kExitOk : kExitViolation;
}

int cmd_check_history(const CommonOptions& opts, const std::string& history_path,
                      std::size_t max_ops) {
  auto started = std::chrono::steady_clock::now();
  WeakVisibilitySpec spec = build_spec(opts);
  History h = history_from_json(Json::parse(read_file(history_path)));

  SearchBounds bounds;
  bounds.max_ops = max_ops;
  bounds.completion_values =
      completion_universe(spec, opts.values, static_cast<int>(max_ops));
  auto witness = history_in_spec(h, spec, bounds);

  Json report;
  report["command"] = "check-history";
  report["config"] = config_echo(opts);
  report["config"]["history"] = history_path;
  report["config"]["max_ops"] = max_ops;
  report["member"] = witness.has_value();
  report["witness"] = witness_to_json(witness);
  emit_report(opts, std::move(report), started);
  std::cerr << (witness ? "member" : "NONE") << "\n";
  return witness ? kExitOk : kExitViolation;
}

int cmd_check_trace(const CommonOptions& opts, const std::string& trace_path, bool atomic) {
  auto started = std::chrono::steady_clock::now();
  WeakVisibilitySpec spec = build_spec(opts);
  std::ifstream in(trace_path);
  if (!in) throw CLI::ValidationError("cannot open file: " + trace_path);
  Trace trace = trace_from_jsonl(in);

  Json report;
  report["command"] = "check-trace";
  report["config"] = config_echo(opts);
  report["config"]["trace"] = trace_path;
  report["config"]["atomic"] = atomic;
  int code = kExitOk;
  try {
    Verdict verdict = product_check(trace, spec, atomic ? MonitorMode::Atomic : MonitorMode::General);
    report["verdict"] = to_json(verdict);
    code = verdict.ok ? kExitOk : kExitViolation;
  } catch (const ShapeViolationError& e) {
    report["verdict"] = {{"ok", false}, {"violations", Json::array()}};
    report["shape_violation"] = {{"index", e.index()}, {"message", e.what()}};
    code = kExitViolation;
  }
  emit_report(opts, std::move(report), started);
  return code;
}

int cmd_cross_validate(const CommonOptions& opts, int n) {
  auto started = std::chrono::steady_clock::now();
  WeakVisibilitySpec spec = build_spec(opts);
  SearchBounds bounds;
  bounds.max_ops = static_cast<std::size_t>(n);
  CrossValidationReport result = cross_validate(spec, n, opts.values, bounds);

  Json report;
  report["command"] = "cross-validate";
  report["config"] = config_echo(opts);
  report["config"]["n"] = n;
  report["histories_checked"] = result.histories_checked;
  report["members"] = result.members;
  report["ok"] = result.ok();
  report["counterexamples"] = Json::array();
  for (const History& h : result.counterexamples)
    report["counterexamples"].push_back(to_json(h));
  emit_report(opts, std::move(report), started);
  return result.ok() ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak-visibility consistency checking toolkit"};
  app.require_subcommand(1);

  CommonOptions opts;

  // explore
  auto* explore = app.add_subcommand("explore", "enumerate schedules of an object model");
  std::string model, client_path, client_inline, mode = "exhaustive";
  std::uint64_t seed = 1, count = 100;
  int step_budget = 16, table_size = 4;
  unsigned jobs = 1;
  explore->add_option("--model", model, "object model name (chm, msq, or a mutant)")->required();
  explore->add_option("--client", client_path, "client program file, one thread per line");
  explore->add_option("--client-inline", client_inline,
                      "client program text; separate threads with ||");
  explore->add_option("--spec", opts.spec_name, "specification: map or queue");
  explore->add_option("--vis", opts.vis_overrides, "visibility override method=kind");
  explore->add_option("--mode", mode, "exhaustive or random");
  explore->add_option("--seed", seed, "random mode seed");
  explore->add_option("--count", count, "random mode schedule count");
  explore->add_option("--step-budget", step_budget, "per-operation step budget");
  explore->add_option("--table-size", table_size, "map table size");
  explore->add_option("--values", opts.values, "value domain")->delimiter(',');
  explore->add_option("--jobs", jobs, "worker threads");
  explore->add_option("--out", opts.out_path, "write the JSON report here");

  // check-history
  auto* check_history =
      app.add_subcommand("check-history", "decide membership of a history file");
  std::string history_path;
  std::size_t max_ops = 8;
  check_history->add_option("--history", history_path, "history JSON file")->required();
  check_history->add_option("--spec", opts.spec_name, "specification: map or queue")->required();
  check_history->add_option("--vis", opts.vis_overrides, "visibility override method=kind");
  check_history->add_option("--values", opts.values, "value domain")->delimiter(',');
  check_history->add_option("--max-ops", max_ops, "operation bound");
  check_history->add_option("--out", opts.out_path, "write the JSON report here");

  // check-trace
  auto* check_trace = app.add_subcommand("check-trace", "run the monitor over a trace file");
  std::string trace_path;
  bool atomic = false;
  check_trace->add_option("--trace", trace_path, "trace file, one action per line")->required();
  check_trace->add_option("--spec", opts.spec_name, "specification: map or queue")->required();
  check_trace->add_option("--vis", opts.vis_overrides, "visibility override method=kind");
  check_trace->add_flag("--atomic", atomic, "restrict steps to atomic transition shapes");
  check_trace->add_option("--out", opts.out_path, "write the JSON report here");

  // cross-validate
  auto* cross = app.add_subcommand("cross-validate",
                                   "compare witness search with the generative enumeration");
  int n = 3;
  cross->add_option("--spec", opts.spec_name, "specification: map or queue")->required();
  cross->add_option("--vis", opts.vis_overrides, "visibility override method=kind");
  cross->add_option("--n", n, "maximum operations per history (up to 4)");
  cross->add_option("--values", opts.values, "value domain")->delimiter(',');
  cross->add_option("--out", opts.out_path, "write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (explore->parsed())
      return cmd_explore(opts, model, client_path, client_inline, mode, seed, count,
                         step_budget, table_size, jobs);
    if (check_history->parsed()) return cmd_check_history(opts, history_path, max_ops);
    if (check_trace->parsed()) return cmd_check_trace(opts, trace_path, atomic);
    if (cross->parsed()) return cmd_cross_validate(opts, n);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BoundsExceededError& e) {
    std::cerr << "bounds exceeded: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TraceError& e) {
    std::cerr << "ill-formed trace: " << e.what() << "\n";
    return kExitUsage;
  } catch (const JsonFormatError& e) {
    std::cerr << "bad input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
