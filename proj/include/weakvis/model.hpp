#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "weakvis/value.hpp"

namespace weakvis {

/// Numeric operation identifier, unique within one trace or history.
using OpId = std::uint32_t;

/// Observable behaviour of one completed operation: method, argument, return.
struct OperationLabel {
  std::string method;
  Value arg;
  Value ret;

  friend bool operator==(const OperationLabel&, const OperationLabel&) = default;
};

/// The record of a concurrent execution: operations with their invocations,
/// the returns seen so far, and a strict partial happens-before order.
///
/// `hb` holds generator pairs; use `hb_closure()` for the full transitive
/// relation. Both views denote the same order.
struct History {
  std::set<OpId> ops;
  std::map<OpId, std::pair<std::string, Value>> inv;
  std::map<OpId, Value> ret;
  std::set<std::pair<OpId, OpId>> hb;

  bool contains(OpId o) const { return ops.count(o) != 0; }
  bool is_complete(OpId o) const { return ret.count(o) != 0; }
  bool complete() const;

  std::set<std::pair<OpId, OpId>> hb_closure() const;

  friend bool operator==(const History&, const History&) = default;
};

/// History plus a linearization sequence and per-operation visibility sets.
/// `lin` lists linearized operations in order; operations of the history
/// that never linearized simply do not appear in it.
struct AbstractExecution {
  History history;
  std::vector<OpId> lin;
  std::map<OpId, std::set<OpId>> vis;

  std::set<OpId> vis_of(OpId o) const {
    auto it = vis.find(o);
    return it == vis.end() ? std::set<OpId>{} : it->second;
  }

  friend bool operator==(const AbstractExecution&, const AbstractExecution&) = default;
};

enum class ActionKind : std::uint8_t { Call, Ret, Hb, Lin, Vis, Silent };

/// One trace event. `op2` is the second operation of hb/vis actions.
struct Action {
  ActionKind kind = ActionKind::Silent;
  OpId op = 0;
  OpId op2 = 0;
  std::string method;  // call only
  Value arg;           // call only
  Value ret;           // ret only

  static Action call(OpId o, std::string m, Value x) {
    Action a;
    a.kind = ActionKind::Call;
    a.op = o;
    a.method = std::move(m);
    a.arg = x;
    return a;
  }
  static Action retn(OpId o, Value y) {
    Action a;
    a.kind = ActionKind::Ret;
    a.op = o;
    a.ret = y;
    return a;
  }
  static Action hb(OpId before, OpId after) {
    Action a;
    a.kind = ActionKind::Hb;
    a.op = before;
    a.op2 = after;
    return a;
  }
  static Action lin(OpId o) {
    Action a;
    a.kind = ActionKind::Lin;
    a.op = o;
    return a;
  }
  static Action vis(OpId o, OpId seen) {
    Action a;
    a.kind = ActionKind::Vis;
    a.op = o;
    a.op2 = seen;
    return a;
  }
  static Action silent() { return Action{}; }

  friend bool operator==(const Action&, const Action&) = default;

  std::string str() const;
};

using Trace = std::vector<Action>;

/// Raised when a fold is applied to an ill-formed trace.
class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t index, const std::string& what)
      : std::runtime_error("action " + std::to_string(index) + ": " + what),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class IncompleteOperationError : public std::runtime_error {
 public:
  explicit IncompleteOperationError(OpId o)
      : std::runtime_error("operation " + std::to_string(o) + " has not returned") {}
};

/// Outcome of trace well-formedness checking. Warnings flag suspicious but
/// legal patterns (hb edges whose source has not yet returned, visibility
/// of a not-yet-linearized operation).
struct TraceCheck {
  std::optional<std::size_t> error_index;
  std::string error;
  std::vector<std::string> warnings;

  bool ok() const { return !error_index.has_value(); }
};

/// Full diagnostic pass over a trace.
///
/// Rules, per operation id o: at most one call(o), one ret(o), one lin(o);
/// ret/lin/vis actions of o and hb edges sourced at o require a prior
/// call(o). The target of an hb edge may be called later (or never): the
/// environment may constrain operations before they start.
TraceCheck check_trace(const Trace& trace);

bool well_formed(const Trace& trace);

/// Inductive fold of a trace into a history: call extends ops/inv, ret
/// extends ret, hb accumulates order pairs; everything else is skipped.
/// The returned history's hb is transitively closed. Throws TraceError on
/// ill-formed traces.
History history_of_trace(const Trace& trace);

/// Like history_of_trace but additionally folds lin (append) and vis
/// (set extension) actions.
AbstractExecution execution_of_trace(const Trace& trace);

struct FoldResult {
  AbstractExecution execution;
  std::vector<std::string> warnings;
};

/// execution_of_trace with diagnostics attached.
FoldResult fold_execution(const Trace& trace);

/// Label ⟨m,x,y⟩ of a completed operation.
/// Throws IncompleteOperationError when the operation has not returned.
OperationLabel label_of(const History& h, OpId o);

/// Transitive closure of a set of order pairs.
std::set<std::pair<OpId, OpId>> transitive_closure(
    const std::set<std::pair<OpId, OpId>>& pairs);

}  // namespace weakvis
