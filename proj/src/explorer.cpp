#include "weakvis/explorer.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace weakvis {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Value parse_args(const std::string& inside) {
  std::string body = trim(inside);
  if (body.empty()) return Value::unit();
  std::size_t comma = body.find(',');
  if (comma == std::string::npos) return Value::integer(std::stoi(body));
  int a = std::stoi(trim(body.substr(0, comma)));
  int b = std::stoi(trim(body.substr(comma + 1)));
  return Value::pair(a, b);
}

}  // namespace

ClientProgram parse_client(const std::string& text) {
  std::string normalized = text;
  for (std::size_t pos; (pos = normalized.find("||")) != std::string::npos;)
    normalized.replace(pos, 2, "\n");
  ClientProgram client;
  std::istringstream lines(normalized);
  std::string line;
  while (std::getline(lines, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<ClientProgram::Invocation> thread;
    std::istringstream invs(line);
    std::string inv;
    while (std::getline(invs, inv, ';')) {
      inv = trim(inv);
      if (inv.empty()) continue;
      std::size_t open = inv.find('(');
      std::size_t close = inv.rfind(')');
      if (open == std::string::npos || close == std::string::npos || close < open)
        throw std::invalid_argument("cannot parse invocation: " + inv);
      std::string method = trim(inv.substr(0, open));
      if (method.empty()) throw std::invalid_argument("missing method name in: " + inv);
      thread.emplace_back(method, parse_args(inv.substr(open + 1, close - open - 1)));
    }
    if (!thread.empty()) client.threads.push_back(std::move(thread));
  }
  if (client.threads.empty()) throw std::invalid_argument("client program has no threads");
  return client;
}

std::string client_to_string(const ClientProgram& client) {
  std::string out;
  for (std::size_t t = 0; t < client.threads.size(); ++t) {
    if (t) out += " || ";
    for (std::size_t i = 0; i < client.threads[t].size(); ++i) {
      if (i) out += "; ";
      const auto& [m, arg] = client.threads[t][i];
      if (arg.is_unit())
        out += m + "()";
      else if (arg.is_pair())
        out += m + "(" + std::to_string(arg.first()) + "," + std::to_string(arg.second()) + ")";
      else
        out += m + "(" + arg.str() + ")";
    }
  }
  return out;
}

namespace {

/// One exploration context: program state, monitor, and undo bookkeeping.
class Worker {
  struct ThreadState {
    std::size_t next_inv = 0;
    int active = -1;  // op index of the running invocation, -1 when idle
    int steps_used = 0;
    bool stuck = false;
    LocalState local;
  };

 public:
  Worker(const ObjectProgram& program, const ClientProgram& client, const ExplorerConfig& cfg)
      : program_(program),
        client_(client),
        cfg_(cfg),
        engine_(cfg.spec ? *cfg.spec : program.spec(),
                ConsistencyEngine::FailurePolicy::Latch) {
    engine_.enable_warnings(false);
    engine_.enable_checks(cfg.check);
    if (client.total_invocations() > ConsistencyEngine::kMaxOps)
      throw std::invalid_argument("client exceeds the per-run operation limit");
    if (cfg.step_budget < 1) throw std::invalid_argument("step budget must be positive");
    for (auto& thread : client.threads)
      for (auto& [m, arg] : thread) (void)program.method_index(m);
    threads_.resize(client.threads.size());
    program_.init_memory(mem_);
  }

  void set_trace_out(Trace* trace, std::vector<std::size_t>* offsets) {
    trace_out_ = trace;
    offsets_out_ = offsets;
  }

  bool schedulable(int t) const {
    const ThreadState& th = threads_[t];
    if (th.stuck) return false;
    return th.active >= 0 || th.next_inv < client_.threads[t].size();
  }

  bool any_schedulable() const {
    for (int t = 0; t < thread_count(); ++t)
      if (schedulable(t)) return true;
    return false;
  }

  int thread_count() const { return static_cast<int>(threads_.size()); }
  const ConsistencyEngine& engine() const { return engine_; }
  const TaggedMemory& memory() const { return mem_; }
  bool failed() const { return !engine_.ok(); }
  Verdict verdict() const { return engine_.verdict(); }

  struct Snapshot {
    TaggedMemory::Mark mem;
    LinState::Mark lin;
    ConsistencyEngine::Mark eng;
    ThreadState thread;
    std::uint32_t returned;
    OpId next_op;
  };

  Snapshot snapshot(int t) const {
    return Snapshot{mem_.mark(), lin_.mark(), engine_.mark(),
                    threads_[t], returned_mask_, next_op_id_};
  }

  void restore(int t, const Snapshot& s) {
    mem_.rewind(s.mem);
    lin_.rewind(s.lin);
    engine_.rewind(s.eng);
    threads_[t] = s.thread;
    returned_mask_ = s.returned;
    next_op_id_ = s.next_op;
  }

  /// Runs one scheduled step of thread t; the caller checks schedulable(t).
  void step(int t) {
    if (offsets_out_) offsets_out_->push_back(trace_out_->size());
    ThreadState& th = threads_[t];
    if (th.active < 0) {
      start_invocation(t);
      return;
    }
    StepEffects fx;
    program_.step(th.local, mem_, lin_, th.active, fx);
    emit_effects(t, fx);
    ++th.steps_used;
    if (th.local.done)
      th.active = -1;
    else if (th.steps_used >= cfg_.step_budget)
      th.stuck = true;  // operation left pending, thread blocked
  }

 private:
  void start_invocation(int t) {
    ThreadState& th = threads_[t];
    const auto& [method, arg] = client_.threads[t][th.next_inv];
    int mi = program_.method_index(method);
    OpId o = next_op_id_++;
    if (trace_out_) trace_out_->push_back(Action::call(o, method, arg));
    engine_.apply_call(o, method, arg);
    if (trace_out_) {
      std::uint32_t rs = returned_mask_;
      while (rs) {
        int r = std::countr_zero(rs);
        rs &= rs - 1;
        trace_out_->push_back(Action::hb(static_cast<OpId>(r), o));
        engine_.apply_hb(static_cast<OpId>(r), o);
      }
    } else {
      engine_.apply_hb_mask(returned_mask_, o);
    }
    th.local = program_.make_call(mi, arg);
    th.active = static_cast<int>(o);
    th.steps_used = 0;
    ++th.next_inv;
    // Monotonic methods observe the linearized modifiers atomically with
    // their call action.
    if (program_.methods()[mi].vis_at_call) emit_vis_mask(o, lin_.modifier_mask());
  }

  void emit_vis_mask(OpId o, std::uint32_t targets) {
    if (!trace_out_) {
      // Operation ids coincide with engine indices here, so the whole mask
      // can be folded in one go.
      engine_.apply_vis_mask(o, targets);
      return;
    }
    while (targets) {
      int j = std::countr_zero(targets);
      targets &= targets - 1;
      trace_out_->push_back(Action::vis(o, static_cast<OpId>(j)));
      engine_.apply_vis(o, static_cast<OpId>(j));
    }
  }

  void emit_effects(int t, const StepEffects& fx) {
    ThreadState& th = threads_[t];
    OpId o = static_cast<OpId>(th.active);
    emit_vis_mask(o, fx.vis_targets);
    if (fx.emitted_lin) {
      const std::string& m = client_.threads[t][th.next_inv - 1].first;
      lin_.append(th.active, o, OperationLabel{m, th.local.arg, fx.lin_return},
                  fx.lin_readonly);
      if (trace_out_) trace_out_->push_back(Action::lin(o));
      engine_.apply_lin(o);
    }
    if (fx.emitted_ret) {
      if (trace_out_) trace_out_->push_back(Action::retn(o, fx.ret_value));
      engine_.apply_ret(o, fx.ret_value);
      returned_mask_ |= std::uint32_t{1} << th.active;
    }
  }

  const ObjectProgram& program_;
  const ClientProgram& client_;
  ExplorerConfig cfg_;
  TaggedMemory mem_;
  LinState lin_;
  ConsistencyEngine engine_;
  std::vector<ThreadState> threads_;
  std::uint32_t returned_mask_ = 0;  // ops that returned, by op index
  OpId next_op_id_ = 0;
  Trace* trace_out_ = nullptr;
  std::vector<std::size_t>* offsets_out_ = nullptr;
};

/// Canonical byte encoding of a history, for deduplication.
std::string history_key(const History& h) {
  std::string key;
  for (OpId o : h.ops) {
    auto& [m, x] = h.inv.at(o);
    key += std::to_string(o) + ":" + m + "(" + x.str() + ")";
    auto it = h.ret.find(o);
    key += it == h.ret.end() ? "=?" : "=" + it->second.str();
    key += ";";
  }
  key += "|";
  for (auto& [a, b] : h.hb) key += std::to_string(a) + "<" + std::to_string(b) + ",";
  return key;
}

struct SearchContext {
  ExploreStats stats;
  std::unordered_set<std::string> history_keys;
  std::vector<History> histories;
};

void handle_leaf(Worker& w, const ExplorerConfig& cfg, const Schedule& schedule,
                 SearchContext& ctx, ExploreSink* sink) {
  ++ctx.stats.schedules;
  if (cfg.collect_histories) {
    History h = w.engine().history();
    if (ctx.history_keys.insert(history_key(h)).second) ctx.histories.push_back(std::move(h));
  }
  if (sink) sink->on_leaf(w.engine(), schedule);
}

void handle_violation(Worker& w, const Schedule& schedule, SearchContext& ctx) {
  ++ctx.stats.violations;
  if (!ctx.stats.first_violation)
    ctx.stats.first_violation = FoundViolation{schedule, w.verdict().violations.front()};
}

/// Exhaustive DFS over the schedule tree. When split_depth is reached the
/// prefix is recorded instead of being explored (nullptr disables splitting).
void dfs(Worker& w, const ExplorerConfig& cfg, Schedule& schedule, SearchContext& ctx,
         ExploreSink* sink, std::size_t split_depth, std::vector<Schedule>* prefixes) {
  if (prefixes && schedule.size() == split_depth) {
    prefixes->push_back(schedule);
    return;
  }
  int only = -1;
  int candidates = 0;
  for (int t = 0; t < w.thread_count(); ++t) {
    if (!w.schedulable(t)) continue;
    only = t;
    ++candidates;
  }
  if (candidates == 0) {
    handle_leaf(w, cfg, schedule, ctx, sink);
    return;
  }
  if (candidates == 1 && !prefixes) {
    // A thread's schedulability never changes under other threads' steps,
    // so from here the branch is one deterministic chain.
    auto snap = w.snapshot(only);
    std::size_t pushed = 0;
    bool violated = false;
    while (w.schedulable(only)) {
      schedule.push_back(only);
      ++pushed;
      w.step(only);
      ++ctx.stats.steps;
      if (w.failed()) {
        handle_violation(w, schedule, ctx);
        violated = true;
        break;
      }
    }
    if (!violated) handle_leaf(w, cfg, schedule, ctx, sink);
    while (pushed--) schedule.pop_back();
    w.restore(only, snap);
    return;
  }
  for (int t = 0; t < w.thread_count(); ++t) {
    if (!w.schedulable(t)) continue;
    auto snap = w.snapshot(t);
    schedule.push_back(t);
    w.step(t);
    ++ctx.stats.steps;
    if (w.failed())
      handle_violation(w, schedule, ctx);
    else
      dfs(w, cfg, schedule, ctx, sink, split_depth, prefixes);
    schedule.pop_back();
    w.restore(t, snap);
  }
}

void merge_contexts(SearchContext& into, SearchContext&& from, bool collect) {
  into.stats.schedules += from.stats.schedules;
  into.stats.steps += from.stats.steps;
  into.stats.violations += from.stats.violations;
  if (from.stats.first_violation &&
      (!into.stats.first_violation ||
       from.stats.first_violation->schedule < into.stats.first_violation->schedule))
    into.stats.first_violation = from.stats.first_violation;
  if (collect)
    for (auto& h : from.histories)
      if (into.history_keys.insert(history_key(h)).second)
        into.histories.push_back(std::move(h));
}

ExploreStats finish(SearchContext&& ctx) {
  ExploreStats stats = std::move(ctx.stats);
  stats.histories = std::move(ctx.histories);
  return stats;
}

}  // namespace

ScheduleRun run_schedule(const ObjectProgram& program, const ClientProgram& client,
                         const Schedule& schedule, const ExplorerConfig& config) {
  Worker w(program, client, config);
  ScheduleRun run;
  w.set_trace_out(&run.trace, &run.step_offsets);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    int t = schedule[i];
    if (t < 0 || t >= w.thread_count() || !w.schedulable(t))
      throw InvalidScheduleError(i, t);
    w.step(t);
    if (w.failed()) break;
  }
  run.verdict = w.verdict();
  run.execution = w.engine().execution();
  run.memory = w.memory().snapshot();
  return run;
}

ExploreStats enumerate_schedules(const ObjectProgram& program, const ClientProgram& client,
                                 const ExplorerConfig& config, ExploreSink* sink) {
  if (config.jobs <= 1) {
    Worker w(program, client, config);
    SearchContext ctx;
    Schedule schedule;
    dfs(w, config, schedule, ctx, sink, 0, nullptr);
    return finish(std::move(ctx));
  }

  // Choose a split depth with enough fan-out, side-effect free.
  std::size_t depth = 1;
  for (; depth < 12; ++depth) {
    std::vector<Schedule> probe_prefixes;
    SearchContext probe;
    ExplorerConfig probe_cfg = config;
    probe_cfg.collect_histories = false;
    Worker wp(program, client, probe_cfg);
    Schedule p;
    dfs(wp, probe_cfg, p, probe, nullptr, depth, &probe_prefixes);
    if (probe_prefixes.size() >= config.jobs * 4 || probe_prefixes.empty()) break;
  }

  // Shallow pass: explores everything above the split, records the prefixes.
  std::vector<Schedule> prefixes;
  SearchContext shallow;
  {
    Worker wp(program, client, config);
    Schedule p;
    dfs(wp, config, p, shallow, sink, depth, &prefixes);
  }

  std::vector<SearchContext> results(prefixes.size());
  std::atomic<std::size_t> next{0};
  auto worker_fn = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= prefixes.size()) return;
      Worker local(program, client, config);
      for (int t : prefixes[i]) local.step(t);
      Schedule s = prefixes[i];
      dfs(local, config, s, results[i], sink, 0, nullptr);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < std::min<unsigned>(config.jobs, 64); ++j)
    pool.emplace_back(worker_fn);
  for (auto& th : pool) th.join();

  for (auto& r : results) merge_contexts(shallow, std::move(r), config.collect_histories);
  return finish(std::move(shallow));
}

ExploreStats random_schedules(const ObjectProgram& program, const ClientProgram& client,
                              const ExplorerConfig& config, std::uint64_t seed,
                              std::uint64_t count, ExploreSink* sink) {
  SearchContext ctx;
  std::mt19937_64 rng(seed);
  Schedule schedule;
  for (std::uint64_t i = 0; i < count; ++i) {
    Worker w(program, client, config);
    schedule.clear();
    while (w.any_schedulable() && !w.failed()) {
      int pick = -1;
      int seen = 0;
      for (int t = 0; t < w.thread_count(); ++t) {
        if (!w.schedulable(t)) continue;
        ++seen;
        if (rng() % seen == 0) pick = t;
      }
      schedule.push_back(pick);
      w.step(pick);
      ++ctx.stats.steps;
    }
    if (w.failed())
      handle_violation(w, schedule, ctx);
    else
      handle_leaf(w, config, schedule, ctx, sink);
  }
  return finish(std::move(ctx));
}

}  // namespace weakvis
