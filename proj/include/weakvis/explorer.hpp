#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "weakvis/monitor.hpp"
#include "weakvis/programs.hpp"

namespace weakvis {

/// Client program: one invocation sequence per thread.
struct ClientProgram {
  using Invocation = std::pair<std::string, Value>;
  std::vector<std::vector<Invocation>> threads;

  std::size_t total_invocations() const {
    std::size_t n = 0;
    for (auto& t : threads) n += t.size();
    return n;
  }
};

/// Parses the text format: one thread per line (or separated by "||"),
/// semicolon-separated invocations, e.g. "put(1,1); get(0); has(1)".
ClientProgram parse_client(const std::string& text);
std::string client_to_string(const ClientProgram& client);

/// Thread index choices, one per scheduled step.
using Schedule = std::vector<int>;

class InvalidScheduleError : public std::invalid_argument {
 public:
  explicit InvalidScheduleError(std::size_t step, int thread)
      : std::invalid_argument("schedule step " + std::to_string(step) +
                              " picks unschedulable thread " + std::to_string(thread)) {}
};

struct ExplorerConfig {
  int step_budget = 16;  // post-call steps per operation before it is left pending
  int table_size = 4;
  unsigned jobs = 1;
  bool check = true;               // run the consistency monitor alongside
  bool collect_histories = false;  // deduplicate and keep leaf histories
  std::optional<WeakVisibilitySpec> spec;  // defaults to the program's own
};

struct FoundViolation {
  Schedule schedule;  // prefix that produced the violation
  Violation violation;
};

struct ExploreStats {
  std::uint64_t schedules = 0;   // maximal schedules reached (violations count once)
  std::uint64_t steps = 0;       // scheduled steps executed over the whole tree
  std::uint64_t violations = 0;  // failing branches (each pruned at first failure)
  std::optional<FoundViolation> first_violation;
  std::vector<History> histories;  // when collect_histories is set
};

/// Leaf observer for exhaustive runs. Called on the worker's thread; with
/// jobs > 1 implementations must be thread-safe.
class ExploreSink {
 public:
  virtual ~ExploreSink() = default;
  virtual void on_leaf(const ConsistencyEngine& engine, const Schedule& schedule) = 0;
};

struct ScheduleRun {
  Trace trace;
  std::vector<std::size_t> step_offsets;  // trace index where each step's actions begin
  Verdict verdict;
  AbstractExecution execution;
  std::vector<TaggedMemory::CellView> memory;  // final cells, address order
};

/// Deterministic replay of one schedule. Each entry picks the thread that
/// takes the next step: starting an invocation emits its call action, the
/// happens-before edges from every already-returned operation, and (for
/// monotonic methods) the call-time visibility of the linearized
/// modifiers, all in that one step. Subsequent steps run the program's
/// atomic sections; exhausting the step budget leaves the operation pending.
ScheduleRun run_schedule(const ObjectProgram& program, const ClientProgram& client,
                         const Schedule& schedule, const ExplorerConfig& config);

/// Depth-first enumeration of all maximal schedules, sharing work across
/// common prefixes. Branches where the monitor reports a violation are
/// counted and pruned (every extension would fail on the same prefix).
ExploreStats enumerate_schedules(const ObjectProgram& program, const ClientProgram& client,
                                 const ExplorerConfig& config, ExploreSink* sink = nullptr);

/// Reproducible random schedule sampling: `count` maximal schedules drawn
/// with the given seed, each checked like in exhaustive mode.
ExploreStats random_schedules(const ObjectProgram& program, const ClientProgram& client,
                              const ExplorerConfig& config, std::uint64_t seed,
                              std::uint64_t count, ExploreSink* sink = nullptr);

}  // namespace weakvis
