#include "weakvis/monitor.hpp"

#include <algorithm>
#include <bit>
#include <cassert>

namespace weakvis {

namespace {

inline ConsistencyEngine::OpMask bit(int i) {
  return ConsistencyEngine::OpMask{1} << i;
}

template <typename F>
inline void for_each_bit(ConsistencyEngine::OpMask mask, F&& f) {
  while (mask) {
    int i = std::countr_zero(mask);
    mask &= mask - 1;
    f(i);
  }
}

}  // namespace

std::string to_string(ViolationReason reason) {
  switch (reason) {
    case ViolationReason::NotMonotonic: return "NOT_MONOTONIC";
    case ViolationReason::NotAbsolute: return "NOT_ABSOLUTE";
    case ViolationReason::ReturnNotInSpec: return "RETURN_NOT_IN_S";
    case ViolationReason::VisNotLinPredecessor: return "VIS_NOT_LIN_PREDECESSOR";
    case ViolationReason::LinNotExtendingHb: return "LIN_NOT_EXTENDING_HB";
  }
  return "?";
}

ConsistencyEngine::ConsistencyEngine(WeakVisibilitySpec spec, FailurePolicy policy)
    : spec_(std::move(spec)), policy_(policy) {
  method_names_ = spec_.spec->methods();
  method_vis_.reserve(method_names_.size());
  for (const std::string& m : method_names_) method_vis_.push_back(spec_.visibility(m));
  eval_ = spec_.spec->make_evaluator();
  dense_lookup_.assign(64, -1);
  collected_slot_.fill(-1);
  ops_.reserve(kMaxOps);
}

ConsistencyEngine::ConsistencyEngine(const ConsistencyEngine& other)
    : spec_(other.spec_),
      policy_(other.policy_),
      method_names_(other.method_names_),
      method_vis_(other.method_vis_),
      eval_(other.spec_.spec->make_evaluator()),
      ops_(other.ops_),
      dense_lookup_(other.dense_lookup_),
      sparse_lookup_(other.sparse_lookup_),
      pending_hb_(other.pending_hb_),
      lin_seq_(other.lin_seq_),
      linearized_mask_(other.linearized_mask_),
      returned_mask_(other.returned_mask_),
      hb_source_mask_(other.hb_source_mask_),
      failed_(other.failed_),
      first_violation_(other.first_violation_),
      collected_(other.collected_),
      collected_slot_(other.collected_slot_),
      trail_(other.trail_),
      actions_seen_(other.actions_seen_),
      warnings_enabled_(other.warnings_enabled_),
      checks_enabled_(other.checks_enabled_),
      warnings_(other.warnings_) {}

ConsistencyEngine& ConsistencyEngine::operator=(const ConsistencyEngine& other) {
  if (this == &other) return *this;
  ConsistencyEngine copy(other);
  *this = std::move(copy);
  return *this;
}

int ConsistencyEngine::index_of(OpId ext) const {
  if (ext < dense_lookup_.size()) return dense_lookup_[ext];
  for (auto& [id, idx] : sparse_lookup_)
    if (id == ext) return idx;
  return -1;
}

int ConsistencyEngine::require_index(OpId ext, const char* action_kind) const {
  int i = index_of(ext);
  if (i < 0)
    throw std::invalid_argument(std::string(action_kind) + " action references uncalled operation " +
                                std::to_string(ext));
  return i;
}

OperationLabel ConsistencyEngine::label_of_index(int i) const {
  const OpState& op = ops_[i];
  return OperationLabel{method_name(op), op.arg, op.has_ret ? op.ret : op.completion};
}

void ConsistencyEngine::set_failure(int idx, ViolationReason reason) {
  Violation v{ops_[idx].ext_id, reason, actions_seen_};
  if (policy_ == FailurePolicy::Latch) {
    if (!failed_) {
      trail_.push_back({UndoTag::Failure, 0, false, 0, Value{}});
      failed_ = true;
      first_violation_ = v;
    }
    return;
  }
  // Collect: one violation per operation, tracking the latest recheck.
  if (collected_slot_[idx] < 0) {
    collected_slot_[idx] = static_cast<std::int8_t>(collected_.size());
    collected_.push_back(v);
  } else {
    collected_[collected_slot_[idx]] = v;
  }
  failed_ = true;
}

void ConsistencyEngine::set_completion(int idx, bool has, const Value& v) {
  OpState& op = ops_[idx];
  if (op.has_completion == has && op.completion == v) return;
  trail_.push_back({UndoTag::Completion, static_cast<std::uint8_t>(idx), op.has_completion, 0,
                    op.completion});
  op.has_completion = has;
  op.completion = v;
}

void ConsistencyEngine::set_readonly(int idx, bool ro) {
  OpState& op = ops_[idx];
  if (op.readonly_now == ro) return;
  trail_.push_back({UndoTag::Readonly, static_cast<std::uint8_t>(idx), op.readonly_now, 0, Value{}});
  op.readonly_now = ro;
}

void ConsistencyEngine::refresh_readonly(int idx) {
  const OpState& op = ops_[idx];
  if (!op.has_ret && !op.has_completion) {
    set_readonly(idx, false);
    return;
  }
  set_readonly(idx, spec_.spec->readonly(label_of_index(idx)));
}

ConsistencyEngine::OpMask ConsistencyEngine::mandated_set(int idx) {
  OpMask mandated = 0;
  for_each_bit(ops_[idx].preds, [&](int p) {
    const OpState& pred = ops_[p];
    if (!pred.has_ret) {
      if (warnings_enabled_)
        warnings_.push_back("operation " + std::to_string(pred.ext_id) +
                            " precedes a monotonic operation but has not returned; "
                            "it carries no visibility obligation");
      return;
    }
    if (!pred.readonly_now) mandated |= bit(p);
    for_each_bit(pred.vis, [&](int q) {
      const OpState& seen = ops_[q];
      if (!seen.has_ret && !seen.has_completion) {
        if (warnings_enabled_)
          warnings_.push_back("operation " + std::to_string(seen.ext_id) +
                              " is visible to a happens-before predecessor but has no label yet");
        return;
      }
      if (!seen.readonly_now) mandated |= bit(q);
    });
  });
  return mandated;
}

void ConsistencyEngine::recheck(int idx) {
  OpState& op = ops_[idx];
  assert(op.lin_pos >= 0);

  // Happens-before predecessors must not linearize later.
  bool order_ok = true;
  for_each_bit(op.preds & linearized_mask_, [&](int p) {
    if (ops_[p].lin_pos > op.lin_pos) order_ok = false;
  });
  if (!order_ok) {
    set_failure(idx, ViolationReason::LinNotExtendingHb);
    return;
  }

  if (op.vis & ~op.lin_before) {
    set_failure(idx, ViolationReason::VisNotLinPredecessor);
    return;
  }

  if (method_vis_[op.method] == VisibilityKind::Absolute) {
    if (op.vis != op.lin_before) {
      set_failure(idx, ViolationReason::NotAbsolute);
      return;
    }
  } else {
    if (mandated_set(idx) & ~op.vis) {
      set_failure(idx, ViolationReason::NotMonotonic);
      return;
    }
  }

  // The label sequence of the visible projection plus this operation must be
  // admitted. Linearized-but-pending operations contribute their canonical
  // completion. Read-only members are skipped: they have no effect on the
  // state, their labels answer to their own projections, and keeping them
  // would let one operation's weakly-justified label poison a stronger
  // observer's check. For read-only-compatible deterministic specs the
  // skipped replay yields the same returns.
  eval_->reset();
  for (int pos = 0; pos < op.lin_pos; ++pos) {
    int j = lin_seq_[pos];
    if (!(op.vis & bit(j))) continue;
    const OpState& member = ops_[j];
    if (!member.has_ret && !member.has_completion) {
      set_failure(idx, ViolationReason::ReturnNotInSpec);
      return;
    }
    if (member.readonly_now) continue;
    if (!eval_->step(member.method, member.arg,
                     member.has_ret ? member.ret : member.completion)) {
      set_failure(idx, ViolationReason::ReturnNotInSpec);
      return;
    }
  }
  if (op.has_ret) {
    if (!eval_->step(op.method, op.arg, op.ret)) {
      set_failure(idx, ViolationReason::ReturnNotInSpec);
      return;
    }
  } else {
    std::optional<Value> y = eval_->next_return(op.method, op.arg);
    if (!y) {
      set_failure(idx, ViolationReason::ReturnNotInSpec);
      return;
    }
    set_completion(idx, true, *y);
    refresh_readonly(idx);
  }

  // The operation checks clean; clear any stale collected violation.
  if (policy_ == FailurePolicy::Collect && collected_slot_[idx] >= 0) {
    std::int8_t gone = collected_slot_[idx];
    collected_.erase(collected_.begin() + gone);
    for (auto& slot : collected_slot_)
      if (slot > gone) --slot;
    collected_slot_[idx] = -1;
    failed_ = !collected_.empty();
  }
}

void ConsistencyEngine::recheck_mask(OpMask dirty) {
  if (!checks_enabled_) return;
  // One pass in linearization order: completions only depend on earlier
  // operations, so earlier rechecks settle before later projections read them.
  OpMask changed = dirty;
  for (std::size_t pos = 0; pos < lin_seq_.size(); ++pos) {
    int j = lin_seq_[pos];
    const OpState& op = ops_[j];
    if (!(dirty & bit(j)) && !(op.vis & changed)) continue;
    Value old_completion = op.completion;
    bool old_has = op.has_completion;
    recheck(j);
    if (failed_ && policy_ == FailurePolicy::Latch) return;
    if (ops_[j].has_completion != old_has || !(ops_[j].completion == old_completion))
      changed |= bit(j);
  }
}

bool ConsistencyEngine::apply(const Action& action) {
  switch (action.kind) {
    case ActionKind::Call: return apply_call(action.op, action.method, action.arg);
    case ActionKind::Ret: return apply_ret(action.op, action.ret);
    case ActionKind::Hb: return apply_hb(action.op, action.op2);
    case ActionKind::Lin: return apply_lin(action.op);
    case ActionKind::Vis: return apply_vis(action.op, action.op2);
    case ActionKind::Silent:
      ++actions_seen_;
      return ok_after();
  }
  return ok_after();
}

bool ConsistencyEngine::apply_call(OpId o, const std::string& method, const Value& arg) {
  ++actions_seen_;
  if (index_of(o) >= 0)
    throw std::invalid_argument("duplicate call for operation " + std::to_string(o));
  if (ops_.size() >= kMaxOps)
    throw CapacityError("monitor supports at most " + std::to_string(kMaxOps) +
                        " operations per trace");
  auto mit = std::find(method_names_.begin(), method_names_.end(), method);
  if (mit == method_names_.end()) throw UnknownMethodError(method);
  int idx = static_cast<int>(ops_.size());
  OpState op;
  op.ext_id = o;
  op.method = static_cast<std::uint8_t>(mit - method_names_.begin());
  op.arg = arg;
  ops_.push_back(op);
  if (o < dense_lookup_.size())
    dense_lookup_[o] = static_cast<std::int8_t>(idx);
  else
    sparse_lookup_.emplace_back(o, idx);
  trail_.push_back({UndoTag::NewOp, static_cast<std::uint8_t>(idx), false, 0, Value{}});
  // Bind order constraints recorded before this operation was called.
  for (auto& [target, src] : pending_hb_) {
    if (target != o) continue;
    OpMask add = (ops_[src].preds | bit(src)) & ~ops_[idx].preds;
    if (!add) continue;
    trail_.push_back({UndoTag::PredsMask, static_cast<std::uint8_t>(idx), false,
                      ops_[idx].preds, Value{}});
    ops_[idx].preds |= add;
  }
  return ok_after();
}

bool ConsistencyEngine::apply_ret(OpId o, const Value& y) {
  ++actions_seen_;
  int idx = require_index(o, "ret");
  OpState& op = ops_[idx];
  if (op.has_ret)
    throw std::invalid_argument("duplicate return for operation " + std::to_string(o));
  trail_.push_back({UndoTag::RetSet, static_cast<std::uint8_t>(idx), false, 0, Value{}});
  op.has_ret = true;
  op.ret = y;
  returned_mask_ |= bit(idx);
  if (!checks_enabled_) return ok_after();
  // A return equal to the committed completion changes no label; only
  // happens-before successors can pick up a new obligation.
  bool label_same = op.lin_pos >= 0 && op.has_completion && op.completion == y;
  if (!label_same) refresh_readonly(idx);
  OpMask dirty = label_same ? 0 : bit(idx);
  if (hb_source_mask_ & bit(idx))
    for (int x = 0; x < static_cast<int>(ops_.size()); ++x)
      if (ops_[x].lin_pos >= 0 && (ops_[x].preds & bit(idx))) dirty |= bit(x);
  if (dirty) recheck_mask(dirty);
  return ok_after();
}

bool ConsistencyEngine::apply_hb(OpId before, OpId after) {
  ++actions_seen_;
  int a = require_index(before, "hb");
  hb_source_mask_ |= ops_[a].preds | bit(a);
  int b = index_of(after);
  if (b < 0) {
    // Target not yet called; remember the edge and bind it at call time.
    pending_hb_.emplace_back(after, a);
    trail_.push_back({UndoTag::PendingHb, 0, false, 0, Value{}});
    return ok_after();
  }
  if (a == b) throw std::invalid_argument("reflexive hb edge");
  OpMask add = (ops_[a].preds | bit(a)) & ~ops_[b].preds;
  if (!add) return ok_after();
  trail_.push_back({UndoTag::PredsMask, static_cast<std::uint8_t>(b), false, ops_[b].preds,
                    Value{}});
  ops_[b].preds |= add;
  OpMask dirty = ops_[b].lin_pos >= 0 ? bit(b) : 0;
  // Propagate closure through existing successors (external traces only;
  // generated traces add hb edges at call time, before successors exist).
  if (hb_source_mask_ & bit(b)) {
    bool grew = true;
    while (grew) {
      grew = false;
      for (int x = 0; x < static_cast<int>(ops_.size()); ++x) {
        if (x == b || !(ops_[x].preds & bit(b))) continue;
        OpMask more = ops_[b].preds & ~ops_[x].preds;
        if (!more) continue;
        trail_.push_back({UndoTag::PredsMask, static_cast<std::uint8_t>(x), false,
                          ops_[x].preds, Value{}});
        ops_[x].preds |= more;
        if (ops_[x].lin_pos >= 0) dirty |= bit(x);
        grew = true;
      }
    }
  }
  if (dirty) recheck_mask(dirty);
  return ok_after();
}

bool ConsistencyEngine::apply_hb_mask(OpMask sources, OpId after) {
  if (!sources) return ok_after();
  ++actions_seen_;
  int b = require_index(after, "hb");
  if (sources & ~(bit(static_cast<int>(ops_.size())) - 1))
    throw std::invalid_argument("hb mask references unknown operations");
  OpMask add = sources;
  for_each_bit(sources, [&](int srcidx) { add |= ops_[srcidx].preds; });
  hb_source_mask_ |= add;
  add &= ~ops_[b].preds & ~bit(b);
  if (!add) return ok_after();
  trail_.push_back({UndoTag::PredsMask, static_cast<std::uint8_t>(b), false, ops_[b].preds,
                    Value{}});
  ops_[b].preds |= add;
  if (!checks_enabled_) return ok_after();
  OpMask dirty = ops_[b].lin_pos >= 0 ? bit(b) : 0;
  if (hb_source_mask_ & bit(b)) {
    bool grew = true;
    while (grew) {
      grew = false;
      for (int x = 0; x < static_cast<int>(ops_.size()); ++x) {
        if (x == b || !(ops_[x].preds & bit(b))) continue;
        OpMask more = ops_[b].preds & ~ops_[x].preds;
        if (!more) continue;
        trail_.push_back({UndoTag::PredsMask, static_cast<std::uint8_t>(x), false,
                          ops_[x].preds, Value{}});
        ops_[x].preds |= more;
        if (ops_[x].lin_pos >= 0) dirty |= bit(x);
        grew = true;
      }
    }
  }
  if (dirty) recheck_mask(dirty);
  return ok_after();
}

bool ConsistencyEngine::apply_lin(OpId o) {
  ++actions_seen_;
  int idx = require_index(o, "lin");
  OpState& op = ops_[idx];
  if (op.lin_pos >= 0)
    throw std::invalid_argument("duplicate lin for operation " + std::to_string(o));
  trail_.push_back({UndoTag::LinAppend, static_cast<std::uint8_t>(idx), false, 0, Value{}});
  op.lin_pos = static_cast<std::int8_t>(lin_seq_.size());
  op.lin_before = linearized_mask_;
  lin_seq_.push_back(static_cast<std::uint8_t>(idx));
  linearized_mask_ |= bit(idx);
  if (!checks_enabled_) return ok_after();
  OpMask dirty = bit(idx);
  if (hb_source_mask_ & bit(idx))
    for (int x = 0; x < static_cast<int>(ops_.size()); ++x)
      if (x != idx && ops_[x].lin_pos >= 0 && (ops_[x].preds & bit(idx))) dirty |= bit(x);
  recheck_mask(dirty);
  return ok_after();
}

bool ConsistencyEngine::apply_vis(OpId o, OpId seen) {
  ++actions_seen_;
  int idx = require_index(o, "vis");
  int target = require_index(seen, "vis");
  OpState& op = ops_[idx];
  if (op.vis & bit(target)) return ok_after();
  trail_.push_back({UndoTag::VisMask, static_cast<std::uint8_t>(idx), false, op.vis, Value{}});
  op.vis |= bit(target);
  if (!checks_enabled_) return ok_after();
  OpMask dirty = op.lin_pos >= 0 ? bit(idx) : 0;
  if (hb_source_mask_ & bit(idx))
    for (int x = 0; x < static_cast<int>(ops_.size()); ++x)
      if (ops_[x].lin_pos >= 0 && (ops_[x].preds & bit(idx))) dirty |= bit(x);
  if (dirty) recheck_mask(dirty);
  return ok_after();
}

bool ConsistencyEngine::apply_vis_mask(OpId o, OpMask seen_indices) {
  if (!seen_indices) return ok_after();
  ++actions_seen_;
  int idx = require_index(o, "vis");
  OpState& op = ops_[idx];
  if (seen_indices & ~(bit(static_cast<int>(ops_.size())) - 1))
    throw std::invalid_argument("vis mask references unknown operations");
  OpMask add = seen_indices & ~op.vis;
  if (!add) return ok_after();
  trail_.push_back({UndoTag::VisMask, static_cast<std::uint8_t>(idx), false, op.vis, Value{}});
  op.vis |= add;
  if (!checks_enabled_) return ok_after();
  OpMask dirty = op.lin_pos >= 0 ? bit(idx) : 0;
  if (hb_source_mask_ & bit(idx))
    for (int x = 0; x < static_cast<int>(ops_.size()); ++x)
      if (ops_[x].lin_pos >= 0 && (ops_[x].preds & bit(idx))) dirty |= bit(x);
  if (dirty) recheck_mask(dirty);
  return ok_after();
}

void ConsistencyEngine::rewind(const Mark& m) {
  assert(policy_ == FailurePolicy::Latch);
  while (trail_.size() > m.trail) {
    UndoEntry& e = trail_.back();
    switch (e.tag) {
      case UndoTag::NewOp: {
        OpState& victim = ops_[e.idx];
        if (victim.ext_id < dense_lookup_.size())
          dense_lookup_[victim.ext_id] = -1;
        else
          sparse_lookup_.pop_back();
        ops_.pop_back();
        break;
      }
      case UndoTag::RetSet:
        ops_[e.idx].has_ret = false;
        returned_mask_ &= ~bit(e.idx);
        break;
      case UndoTag::VisMask:
        ops_[e.idx].vis = e.mask;
        break;
      case UndoTag::PredsMask:
        ops_[e.idx].preds = e.mask;
        break;
      case UndoTag::LinAppend:
        ops_[e.idx].lin_pos = -1;
        ops_[e.idx].lin_before = 0;
        linearized_mask_ &= ~bit(e.idx);
        lin_seq_.pop_back();
        break;
      case UndoTag::Completion:
        ops_[e.idx].has_completion = e.flag;
        ops_[e.idx].completion = e.value;
        break;
      case UndoTag::Readonly:
        ops_[e.idx].readonly_now = e.flag;
        break;
      case UndoTag::Failure:
        failed_ = false;
        break;
      case UndoTag::PendingHb:
        pending_hb_.pop_back();
        break;
    }
    trail_.pop_back();
  }
  actions_seen_ = m.actions;
}

Verdict ConsistencyEngine::verdict() const {
  Verdict v;
  if (policy_ == FailurePolicy::Latch) {
    v.ok = !failed_;
    if (failed_) v.violations.push_back(first_violation_);
  } else {
    v.ok = collected_.empty();
    v.violations = collected_;
  }
  return v;
}

bool ConsistencyEngine::is_linearized(OpId ext) const {
  int i = index_of(ext);
  return i >= 0 && ops_[i].lin_pos >= 0;
}

bool ConsistencyEngine::is_returned(OpId ext) const {
  int i = index_of(ext);
  return i >= 0 && ops_[i].has_ret;
}

std::optional<Value> ConsistencyEngine::return_value(OpId ext) const {
  int i = index_of(ext);
  if (i < 0 || !ops_[i].has_ret) return std::nullopt;
  return ops_[i].ret;
}

std::optional<OperationLabel> ConsistencyEngine::label_so_far(OpId ext) const {
  int i = index_of(ext);
  if (i < 0) return std::nullopt;
  const OpState& op = ops_[i];
  if (!op.has_ret && !op.has_completion) return std::nullopt;
  return label_of_index(i);
}

AbstractExecution ConsistencyEngine::execution() const {
  AbstractExecution e;
  for (const OpState& op : ops_) {
    e.history.ops.insert(op.ext_id);
    e.history.inv[op.ext_id] = {method_name(op), op.arg};
    if (op.has_ret) e.history.ret[op.ext_id] = op.ret;
    for_each_bit(op.preds, [&](int p) { e.history.hb.emplace(ops_[p].ext_id, op.ext_id); });
    if (op.vis) {
      auto& vs = e.vis[op.ext_id];
      for_each_bit(op.vis, [&](int q) { vs.insert(ops_[q].ext_id); });
    }
  }
  for (std::uint8_t j : lin_seq_) e.lin.push_back(ops_[j].ext_id);
  return e;
}

History ConsistencyEngine::history() const { return execution().history; }

// ---------------------------------------------------------------------------

MonitorState::MonitorState(WeakVisibilitySpec spec, MonitorMode mode)
    : engine_(std::move(spec), ConsistencyEngine::FailurePolicy::Latch), mode_(mode) {}

struct MonitorStepAccess {
  static ConsistencyEngine& engine(MonitorState& s) { return s.engine_; }
};

namespace {

void validate_atomic_shape(std::span<const Action> actions) {
  if (actions.size() == 1) {
    switch (actions[0].kind) {
      case ActionKind::Call:
      case ActionKind::Ret:
      case ActionKind::Hb:
      case ActionKind::Lin:
        return;
      default:
        throw ShapeViolationError(0);
    }
  }
  if (actions.empty()) throw ShapeViolationError(0);
  // vis(o,_)* lin(o)
  OpId o = actions.front().op;
  for (std::size_t i = 0; i + 1 < actions.size(); ++i)
    if (actions[i].kind != ActionKind::Vis || actions[i].op != o) throw ShapeViolationError(i);
  if (actions.back().kind != ActionKind::Lin || actions.back().op != o)
    throw ShapeViolationError(actions.size() - 1);
}

}  // namespace

MonitorStepResult monitor_step(const MonitorState& state, std::span<const Action> actions) {
  if (state.mode() == MonitorMode::Atomic) validate_atomic_shape(actions);
  MonitorState next = state;
  ConsistencyEngine& eng = MonitorStepAccess::engine(next);
  for (const Action& a : actions) {
    if (!eng.apply(a)) return MonitorStepResult{std::nullopt, eng.verdict()};
  }
  return MonitorStepResult{std::move(next), Verdict{}};
}

std::vector<std::pair<std::size_t, std::size_t>> atomic_chunks(const Trace& trace) {
  std::vector<std::pair<std::size_t, std::size_t>> chunks;
  std::size_t i = 0;
  while (i < trace.size()) {
    const Action& a = trace[i];
    if (a.kind == ActionKind::Vis) {
      std::size_t j = i;
      while (j < trace.size() && trace[j].kind == ActionKind::Vis && trace[j].op == a.op) ++j;
      if (j >= trace.size() || trace[j].kind != ActionKind::Lin || trace[j].op != a.op)
        throw ShapeViolationError(j < trace.size() ? j : trace.size() - 1);
      chunks.emplace_back(i, j + 1);
      i = j + 1;
    } else {
      chunks.emplace_back(i, i + 1);
      ++i;
    }
  }
  return chunks;
}

Verdict product_check(const Trace& trace, const WeakVisibilitySpec& spec, MonitorMode mode) {
  TraceCheck check = check_trace(trace);
  if (!check.ok()) throw TraceError(*check.error_index, check.error);
  if (mode == MonitorMode::Atomic) atomic_chunks(trace);  // validates shapes
  ConsistencyEngine engine(spec, ConsistencyEngine::FailurePolicy::Latch);
  engine.enable_warnings(false);
  for (const Action& a : trace)
    if (!engine.apply(a)) break;
  return engine.verdict();
}

Verdict execution_consistent(const AbstractExecution& e, const WeakVisibilitySpec& spec) {
  for (OpId o : e.lin)
    if (!e.history.contains(o))
      throw std::invalid_argument("linearized operation " + std::to_string(o) +
                                  " is not in the history");
  for (auto& [o, seen] : e.vis) {
    if (!e.history.contains(o))
      throw std::invalid_argument("visibility keyed by unknown operation " + std::to_string(o));
    for (OpId t : seen)
      if (!e.history.contains(t))
        throw std::invalid_argument("visibility references unknown operation " + std::to_string(t));
  }

  ConsistencyEngine engine(spec, ConsistencyEngine::FailurePolicy::Collect);
  for (OpId o : e.history.ops) {
    auto& [m, x] = e.history.inv.at(o);
    engine.apply(Action::call(o, m, x));
  }
  for (auto& [a, b] : e.history.hb) engine.apply(Action::hb(a, b));
  for (OpId o : e.lin) {
    for (OpId t : e.vis_of(o)) engine.apply(Action::vis(o, t));
    engine.apply(Action::lin(o));
  }
  for (auto& [o, seen] : e.vis) {
    if (std::find(e.lin.begin(), e.lin.end(), o) != e.lin.end()) continue;
    for (OpId t : seen) engine.apply(Action::vis(o, t));
  }
  for (auto& [o, y] : e.history.ret) engine.apply(Action::retn(o, y));
  return engine.verdict();
}

bool visibility_absolute_ok(const AbstractExecution& e, OpId o) {
  auto it = std::find(e.lin.begin(), e.lin.end(), o);
  if (it == e.lin.end()) throw NotLinearizedError(o);
  std::set<OpId> before(e.lin.begin(), it);
  return e.vis_of(o) == before;
}

bool visibility_monotonic_ok(const AbstractExecution& e, const WeakVisibilitySpec& spec,
                             OpId o) {
  if (std::find(e.lin.begin(), e.lin.end(), o) == e.lin.end()) throw NotLinearizedError(o);
  auto closed = e.history.hb_closure();
  std::set<OpId> mandated;
  auto readonly_label = [&](OpId p) -> std::optional<bool> {
    if (!e.history.is_complete(p)) return std::nullopt;
    return spec.readonly(label_of(e.history, p));
  };
  for (auto& [a, b] : closed) {
    if (b != o) continue;
    auto ro = readonly_label(a);
    if (!ro) continue;  // pending predecessor: no obligation
    if (!*ro) mandated.insert(a);
    for (OpId q : e.vis_of(a)) {
      auto qro = readonly_label(q);
      if (qro && !*qro) mandated.insert(q);
    }
  }
  std::set<OpId> seen = e.vis_of(o);
  return std::includes(seen.begin(), seen.end(), mandated.begin(), mandated.end());
}

}  // namespace weakvis
