#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weakvis/model.hpp"
#include "weakvis/spec.hpp"

namespace weakvis {

enum class ViolationReason : std::uint8_t {
  NotMonotonic,
  NotAbsolute,
  ReturnNotInSpec,
  VisNotLinPredecessor,
  LinNotExtendingHb,
};

std::string to_string(ViolationReason reason);

struct Violation {
  OpId op = 0;
  ViolationReason reason = ViolationReason::ReturnNotInSpec;
  std::size_t prefix_len = 0;  // actions consumed when the violation surfaced

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct Verdict {
  bool ok = true;
  std::vector<Violation> violations;
};

/// The action sequence handed to an atomic-mode step does not match any of
/// the allowed shapes (single call/ret/hb, or vis(o,_)* lin(o)).
class ShapeViolationError : public std::runtime_error {
 public:
  explicit ShapeViolationError(std::size_t index)
      : std::runtime_error("action sequence violates atomic step shape at action " +
                           std::to_string(index)),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

/// Incremental consistency checker over a growing abstract execution.
///
/// Feeds on trace actions and maintains, per operation: visibility and
/// happens-before masks, linearization position, and the return value (real
/// or the canonical completion of a linearized-but-pending operation).
/// After every action the operations whose obligations could have changed
/// are rechecked:
///   - visibility sets must contain only linearization predecessors,
///   - absolute operations must see exactly their predecessors,
///   - monotonic operations must see every non-read-only happens-before
///     predecessor and everything non-read-only those predecessors see,
///   - the label sequence of each operation's visible projection (plus the
///     operation itself) must be admitted by the sequential spec.
///
/// The engine supports cheap snapshot/rewind so an exploration can share
/// checking work across schedule prefixes.
class ConsistencyEngine {
 public:
  static constexpr int kMaxOps = 32;
  using OpMask = std::uint32_t;

  enum class FailurePolicy : std::uint8_t {
    Latch,    // stop at the first violation (product check semantics)
    Collect,  // keep going, record one violation per operation
  };

  explicit ConsistencyEngine(WeakVisibilitySpec spec,
                             FailurePolicy policy = FailurePolicy::Latch);
  ConsistencyEngine(const ConsistencyEngine& other);
  ConsistencyEngine& operator=(const ConsistencyEngine& other);
  ConsistencyEngine(ConsistencyEngine&&) = default;
  ConsistencyEngine& operator=(ConsistencyEngine&&) = default;

  /// Folds one action and runs the affected checks. Returns false iff the
  /// engine is in a failed state afterwards.
  bool apply(const Action& action);

  // Direct forms of apply, bypassing Action construction.
  bool apply_call(OpId o, const std::string& method, const Value& arg);
  bool apply_ret(OpId o, const Value& y);
  bool apply_hb(OpId before, OpId after);
  bool apply_lin(OpId o);
  bool apply_vis(OpId o, OpId seen);
  /// Batched visibility: `seen_indices` is a mask over engine op indices;
  /// valid when external ids coincide with creation order (explorer runs).
  bool apply_vis_mask(OpId o, OpMask seen_indices);
  /// Batched happens-before: every operation in `sources` precedes `after`.
  bool apply_hb_mask(OpMask sources, OpId after);

  bool ok() const { return !failed_; }
  Verdict verdict() const;
  std::size_t actions_seen() const { return actions_seen_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  void enable_warnings(bool on) { warnings_enabled_ = on; }
  /// With checks off the engine only folds state (pure bookkeeping mode).
  void enable_checks(bool on) { checks_enabled_ = on; }

  struct Mark {
    std::size_t trail = 0;
    std::size_t actions = 0;
  };
  Mark mark() const { return {trail_.size(), actions_seen_}; }
  void rewind(const Mark& m);

  const WeakVisibilitySpec& spec() const { return spec_; }

  // --- introspection ------------------------------------------------------
  int op_count() const { return static_cast<int>(ops_.size()); }
  bool known(OpId ext) const { return index_of(ext) >= 0; }
  bool is_linearized(OpId ext) const;
  bool is_returned(OpId ext) const;
  std::optional<Value> return_value(OpId ext) const;
  /// Label with the real return when present, else the canonical completion.
  std::optional<OperationLabel> label_so_far(OpId ext) const;

  AbstractExecution execution() const;
  History history() const;

 private:
  struct OpState {
    OpId ext_id = 0;
    std::uint8_t method = 0;
    Value arg;
    Value ret;
    Value completion;
    OpMask vis = 0;
    OpMask preds = 0;        // transitively closed hb predecessors
    OpMask lin_before = 0;   // operations linearized before this one
    std::int8_t lin_pos = -1;
    bool has_ret = false;
    bool has_completion = false;
    bool readonly_now = false;  // readonly status of the label so far
  };

  enum class UndoTag : std::uint8_t {
    NewOp,
    RetSet,
    VisMask,
    PredsMask,
    LinAppend,
    Completion,
    Readonly,
    Failure,
    PendingHb,
  };

  struct UndoEntry {
    UndoTag tag;
    std::uint8_t idx;
    bool flag;
    OpMask mask;
    Value value;
  };

  bool ok_after() const { return !failed_ || policy_ == FailurePolicy::Collect; }
  int index_of(OpId ext) const;
  int require_index(OpId ext, const char* action_kind) const;
  const std::string& method_name(const OpState& op) const {
    return method_names_[op.method];
  }
  OperationLabel label_of_index(int i) const;
  void set_failure(int idx, ViolationReason reason);
  void set_completion(int idx, bool has, const Value& v);
  void set_readonly(int idx, bool ro);
  void refresh_readonly(int idx);
  /// Rechecks one linearized operation; records a violation if it fails.
  void recheck(int idx);
  void recheck_mask(OpMask dirty);
  OpMask mandated_set(int idx);

  WeakVisibilitySpec spec_;
  FailurePolicy policy_;
  std::vector<std::string> method_names_;
  std::vector<VisibilityKind> method_vis_;
  std::unique_ptr<SpecEvaluator> eval_;

  std::vector<OpState> ops_;
  std::vector<std::int8_t> dense_lookup_;  // ext id -> index for small ids
  std::vector<std::pair<OpId, int>> sparse_lookup_;
  std::vector<std::pair<OpId, int>> pending_hb_;  // edges to not-yet-called targets
  std::vector<std::uint8_t> lin_seq_;
  OpMask linearized_mask_ = 0;
  OpMask returned_mask_ = 0;
  // Ops that ever appeared as hb sources; conservative across rewinds, used
  // only to skip successor scans that cannot find anything.
  OpMask hb_source_mask_ = 0;

  bool failed_ = false;
  Violation first_violation_;
  std::vector<Violation> collected_;  // Collect mode only
  std::array<std::int8_t, kMaxOps> collected_slot_;

  std::vector<UndoEntry> trail_;
  std::size_t actions_seen_ = 0;
  bool warnings_enabled_ = true;
  bool checks_enabled_ = true;
  std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------------------
// Specification transition system
// ---------------------------------------------------------------------------

enum class MonitorMode : std::uint8_t { General, Atomic };

/// A state of the specification transition system: the abstract execution
/// folded so far, guaranteed consistent with the spec.
class MonitorState {
 public:
  MonitorState(WeakVisibilitySpec spec, MonitorMode mode);

  MonitorMode mode() const { return mode_; }
  AbstractExecution execution() const { return engine_.execution(); }
  const ConsistencyEngine& engine() const { return engine_; }

 private:
  friend struct MonitorStepAccess;
  ConsistencyEngine engine_;
  MonitorMode mode_;
};

struct MonitorStepResult {
  std::optional<MonitorState> state;  // set iff the step was accepted
  Verdict verdict;                    // failure details otherwise

  bool ok() const { return state.has_value(); }
};

/// One transition: folds the action sequence and accepts iff the resulting
/// execution is consistent. In atomic mode the sequence must additionally be
/// a single call/ret/hb action or vis(o,_)* lin(o); other shapes raise
/// ShapeViolationError.
MonitorStepResult monitor_step(const MonitorState& state, std::span<const Action> actions);

/// Splits a flat trace into atomic-transition chunks, or throws
/// ShapeViolationError if the trace is not in the atomic language.
std::vector<std::pair<std::size_t, std::size_t>> atomic_chunks(const Trace& trace);

/// Runs the monitor over a whole trace. In General mode every action is its
/// own step; instrumented implementations emit visibility actions before the
/// matching linearization inside each atomic section, so this agrees with
/// stepping at section boundaries. Throws TraceError on ill-formed input.
Verdict product_check(const Trace& trace, const WeakVisibilitySpec& spec,
                      MonitorMode mode = MonitorMode::General);

/// Full consistency verdict for an abstract execution (one violation per
/// failing operation).
Verdict execution_consistent(const AbstractExecution& e, const WeakVisibilitySpec& spec);

class NotLinearizedError : public std::invalid_argument {
 public:
  explicit NotLinearizedError(OpId o)
      : std::invalid_argument("operation " + std::to_string(o) + " is not linearized") {}
};

/// vis(o) equals the set of o's linearization predecessors.
bool visibility_absolute_ok(const AbstractExecution& e, OpId o);

/// vis(o) contains every non-read-only happens-before predecessor of o and
/// every non-read-only operation those predecessors see. Predecessors that
/// never returned carry no obligation.
bool visibility_monotonic_ok(const AbstractExecution& e, const WeakVisibilitySpec& spec,
                             OpId o);

}  // namespace weakvis
