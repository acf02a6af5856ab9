#include "weakvis/model.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace weakvis {

bool History::complete() const {
  return std::all_of(ops.begin(), ops.end(),
                     [&](OpId o) { return is_complete(o); });
}

std::set<std::pair<OpId, OpId>> History::hb_closure() const {
  return transitive_closure(hb);
}

std::string Action::str() const {
  switch (kind) {
    case ActionKind::Call:
      return "call(" + std::to_string(op) + "," + method + "," + arg.str() + ")";
    case ActionKind::Ret:
      return "ret(" + std::to_string(op) + "," + ret.str() + ")";
    case ActionKind::Hb:
      return "hb(" + std::to_string(op) + "," + std::to_string(op2) + ")";
    case ActionKind::Lin:
      return "lin(" + std::to_string(op) + ")";
    case ActionKind::Vis:
      return "vis(" + std::to_string(op) + "," + std::to_string(op2) + ")";
    case ActionKind::Silent:
      return "silent";
  }
  return "?";
}

std::set<std::pair<OpId, OpId>> transitive_closure(
    const std::set<std::pair<OpId, OpId>>& pairs) {
  // Successor lists, then DFS from every source. Sizes here are tiny.
  std::unordered_map<OpId, std::vector<OpId>> succ;
  std::set<OpId> nodes;
  for (auto& [a, b] : pairs) {
    succ[a].push_back(b);
    nodes.insert(a);
    nodes.insert(b);
  }
  std::set<std::pair<OpId, OpId>> out;
  for (OpId src : nodes) {
    std::vector<OpId> stack;
    std::unordered_set<OpId> seen;
    auto it = succ.find(src);
    if (it == succ.end()) continue;
    stack = it->second;
    while (!stack.empty()) {
      OpId b = stack.back();
      stack.pop_back();
      if (!seen.insert(b).second) continue;
      out.emplace(src, b);
      auto jt = succ.find(b);
      if (jt != succ.end())
        stack.insert(stack.end(), jt->second.begin(), jt->second.end());
    }
  }
  return out;
}

TraceCheck check_trace(const Trace& trace) {
  TraceCheck result;
  std::unordered_set<OpId> called, returned, linearized;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const Action& a = trace[i];
    auto fail = [&](const std::string& msg) {
      if (!result.error_index) {
        result.error_index = i;
        result.error = msg;
      }
    };
    switch (a.kind) {
      case ActionKind::Call:
        if (called.count(a.op)) fail("duplicate call for operation " + std::to_string(a.op));
        called.insert(a.op);
        break;
      case ActionKind::Ret:
        if (!called.count(a.op)) fail("return before call of operation " + std::to_string(a.op));
        else if (returned.count(a.op)) fail("duplicate return for operation " + std::to_string(a.op));
        returned.insert(a.op);
        break;
      case ActionKind::Lin:
        if (!called.count(a.op)) fail("lin before call of operation " + std::to_string(a.op));
        else if (linearized.count(a.op)) fail("duplicate lin for operation " + std::to_string(a.op));
        linearized.insert(a.op);
        break;
      case ActionKind::Vis:
        if (!called.count(a.op)) fail("vis before call of operation " + std::to_string(a.op));
        else if (!linearized.count(a.op2))
          result.warnings.push_back("action " + std::to_string(i) + ": vis(" +
                                    std::to_string(a.op) + "," + std::to_string(a.op2) +
                                    ") names a not-yet-linearized operation");
        break;
      case ActionKind::Hb:
        if (!called.count(a.op)) fail("hb sourced at uncalled operation " + std::to_string(a.op));
        else if (a.op == a.op2) fail("reflexive hb edge at operation " + std::to_string(a.op));
        else if (!returned.count(a.op))
          result.warnings.push_back("action " + std::to_string(i) + ": hb(" +
                                    std::to_string(a.op) + "," + std::to_string(a.op2) +
                                    ") sourced at an operation that has not returned");
        break;
      case ActionKind::Silent:
        break;
    }
    if (result.error_index) break;
  }
  return result;
}

bool well_formed(const Trace& trace) { return check_trace(trace).ok(); }

FoldResult fold_execution(const Trace& trace) {
  TraceCheck check = check_trace(trace);
  if (!check.ok()) throw TraceError(*check.error_index, check.error);

  FoldResult out;
  out.warnings = std::move(check.warnings);
  AbstractExecution& e = out.execution;
  std::set<OpId> linearized;
  std::set<std::pair<OpId, OpId>> raw_hb;

  for (const Action& a : trace) {
    switch (a.kind) {
      case ActionKind::Call:
        e.history.ops.insert(a.op);
        e.history.inv[a.op] = {a.method, a.arg};
        break;
      case ActionKind::Ret:
        e.history.ret[a.op] = a.ret;
        break;
      case ActionKind::Hb:
        raw_hb.emplace(a.op, a.op2);
        break;
      case ActionKind::Lin:
        if (auto it = e.vis.find(a.op); it != e.vis.end()) {
          for (OpId seen : it->second)
            if (!linearized.count(seen))
              out.warnings.push_back("operation " + std::to_string(a.op) +
                                     " linearizes while its visible operation " +
                                     std::to_string(seen) + " is not linearized");
        }
        e.lin.push_back(a.op);
        linearized.insert(a.op);
        break;
      case ActionKind::Vis:
        e.vis[a.op].insert(a.op2);
        break;
      case ActionKind::Silent:
        break;
    }
  }

  // Drop hb pairs whose endpoints were never called; they order nothing.
  for (auto& [a, b] : raw_hb) {
    if (e.history.contains(a) && e.history.contains(b))
      e.history.hb.emplace(a, b);
    else
      out.warnings.push_back("hb edge (" + std::to_string(a) + "," + std::to_string(b) +
                             ") references an operation that never appears");
  }
  e.history.hb = transitive_closure(e.history.hb);
  return out;
}

AbstractExecution execution_of_trace(const Trace& trace) {
  return fold_execution(trace).execution;
}

History history_of_trace(const Trace& trace) {
  return fold_execution(trace).execution.history;
}

OperationLabel label_of(const History& h, OpId o) {
  auto inv_it = h.inv.find(o);
  if (inv_it == h.inv.end())
    throw std::invalid_argument("operation " + std::to_string(o) + " not in history");
  auto ret_it = h.ret.find(o);
  if (ret_it == h.ret.end()) throw IncompleteOperationError(o);
  return OperationLabel{inv_it->second.first, inv_it->second.second, ret_it->second};
}

}  // namespace weakvis
