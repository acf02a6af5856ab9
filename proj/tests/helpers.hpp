#pragma once

// Shared fixtures: the five-operation map scenario used throughout the
// tests (two puts on key 1 around an interleaved scan, one put on key 0,
// one get, one value scan that misses), plus small random generators.

#include <random>
#include <vector>

#include "weakvis/model.hpp"
#include "weakvis/spec.hpp"

namespace weakvis::testing {

// Operation ids of the scenario.
inline constexpr OpId kPut11 = 1;  // put(1,1) = true
inline constexpr OpId kGet = 2;    // get(1) = 1
inline constexpr OpId kPut01 = 3;  // put(0,1) = true
inline constexpr OpId kPut10 = 4;  // put(1,0) = false
inline constexpr OpId kHas = 5;    // has(1) = false

/// Trace whose fold yields the scenario execution: linearization order
/// put(1,1) get(1) put(0,1) put(1,0) has(1), happens-before generated by
/// (1,2),(2,3),(3,4),(2,5), leaving has unordered with both later puts,
/// and has seeing exactly put(1,1) and put(1,0).
inline Trace example_trace() {
  Trace t;
  t.push_back(Action::call(kPut11, "put", Value::pair(1, 1)));
  t.push_back(Action::lin(kPut11));
  t.push_back(Action::retn(kPut11, Value::truth()));
  t.push_back(Action::call(kGet, "get", Value::integer(1)));
  t.push_back(Action::hb(kPut11, kGet));
  t.push_back(Action::vis(kGet, kPut11));
  t.push_back(Action::lin(kGet));
  t.push_back(Action::retn(kGet, Value::integer(1)));
  t.push_back(Action::call(kPut01, "put", Value::pair(0, 1)));
  t.push_back(Action::hb(kGet, kPut01));
  t.push_back(Action::call(kHas, "has", Value::integer(1)));
  t.push_back(Action::hb(kGet, kHas));
  t.push_back(Action::vis(kPut01, kPut11));
  t.push_back(Action::vis(kPut01, kGet));
  t.push_back(Action::lin(kPut01));
  t.push_back(Action::retn(kPut01, Value::truth()));
  t.push_back(Action::call(kPut10, "put", Value::pair(1, 0)));
  t.push_back(Action::hb(kPut01, kPut10));
  t.push_back(Action::vis(kPut10, kPut11));
  t.push_back(Action::vis(kPut10, kGet));
  t.push_back(Action::vis(kPut10, kPut01));
  t.push_back(Action::lin(kPut10));
  t.push_back(Action::retn(kPut10, Value::falsity()));
  t.push_back(Action::vis(kHas, kPut11));
  t.push_back(Action::vis(kHas, kPut10));
  t.push_back(Action::lin(kHas));
  t.push_back(Action::retn(kHas, Value::falsity()));
  return t;
}

inline AbstractExecution example_execution() {
  AbstractExecution e;
  auto op = [&](OpId o, const std::string& m, Value x, Value y) {
    e.history.ops.insert(o);
    e.history.inv[o] = {m, x};
    e.history.ret[o] = y;
  };
  op(kPut11, "put", Value::pair(1, 1), Value::truth());
  op(kGet, "get", Value::integer(1), Value::integer(1));
  op(kPut01, "put", Value::pair(0, 1), Value::truth());
  op(kPut10, "put", Value::pair(1, 0), Value::falsity());
  op(kHas, "has", Value::integer(1), Value::falsity());
  e.history.hb = transitive_closure({{kPut11, kGet}, {kGet, kPut01}, {kPut01, kPut10}, {kGet, kHas}});
  e.lin = {kPut11, kGet, kPut01, kPut10, kHas};
  e.vis[kGet] = {kPut11};
  e.vis[kPut01] = {kPut11, kGet};
  e.vis[kPut10] = {kPut11, kGet, kPut01};
  e.vis[kHas] = {kPut11, kPut10};
  return e;
}

/// The strong variant: same five operations run one after the other, has
/// sees everything and finds the value under key 0.
inline AbstractExecution example_sequential_execution() {
  AbstractExecution e = example_execution();
  e.history.ret[kHas] = Value::truth();
  e.history.hb.clear();
  const std::vector<OpId> order = {kPut11, kGet, kPut01, kPut10, kHas};
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = i + 1; j < order.size(); ++j)
      e.history.hb.emplace(order[i], order[j]);
  e.vis[kHas] = {kPut11, kGet, kPut01, kPut10};
  return e;
}

/// The history the scanning client actually produces when every operation
/// overlaps maximally: program order only (get before has; puts in thread
/// order), get(1)=1 and has(1)=false.
inline History sparse_scenario_history() {
  History h = example_execution().history;
  h.hb = transitive_closure({{kGet, kHas}, {kPut11, kPut01}, {kPut01, kPut10}});
  return h;
}

/// Random well-formed trace over the map methods. Each operation id gets a
/// random subset of its lifecycle emitted in a legal order; traces from
/// here need not be consistent with any spec.
inline Trace random_map_trace(std::mt19937& rng, int max_ops = 5) {
  std::uniform_int_distribution<int> ops_dist(0, max_ops);
  int n = ops_dist(rng);
  struct Plan {
    OpId id;
    bool has_lin, has_ret;
  };
  std::vector<Plan> plans;
  std::vector<Action> pool;
  for (int i = 0; i < n; ++i) {
    Plan p{static_cast<OpId>(i), rng() % 2 == 0, rng() % 2 == 0};
    plans.push_back(p);
  }
  Trace t;
  std::vector<int> phase(n, 0);  // 0: uncalled, 1: called, 2: linearized, 3: returned
  std::vector<bool> linearized(n, false);
  auto methods = std::vector<std::string>{"put", "rem", "get", "has"};
  int remaining = 0;
  for (const Plan& p : plans) remaining += 1 + (p.has_lin ? 1 : 0) + (p.has_ret ? 1 : 0);
  while (remaining > 0) {
    int i = static_cast<int>(rng() % n);
    const Plan& p = plans[i];
    if (phase[i] == 0) {
      std::string m = methods[rng() % methods.size()];
      Value arg = m == "put" ? Value::pair(static_cast<int>(rng() % 2), static_cast<int>(rng() % 2))
                             : Value::integer(static_cast<int>(rng() % 2));
      t.push_back(Action::call(p.id, m, arg));
      // A random order edge from any already-called operation.
      for (int j = 0; j < n; ++j)
        if (j != i && phase[j] >= 1 && rng() % 3 == 0) t.push_back(Action::hb(plans[j].id, p.id));
      phase[i] = 1;
      --remaining;
    } else if (phase[i] == 1 && p.has_lin) {
      // Random visibility of linearized operations, then linearize.
      for (int j = 0; j < n; ++j)
        if (linearized[j] && rng() % 2 == 0) t.push_back(Action::vis(p.id, plans[j].id));
      t.push_back(Action::lin(p.id));
      linearized[i] = true;
      phase[i] = 2;
      --remaining;
    } else if ((phase[i] == 2 || (phase[i] == 1 && !p.has_lin)) && p.has_ret && phase[i] != 3) {
      t.push_back(Action::retn(p.id, rng() % 2 ? Value::truth() : Value::falsity()));
      phase[i] = 3;
      --remaining;
    }
  }
  return t;
}

}  // namespace weakvis::testing
