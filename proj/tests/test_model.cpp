#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "weakvis/json_io.hpp"
#include "weakvis/model.hpp"

using namespace weakvis;
using namespace weakvis::testing;

TEST_CASE("well-formedness of action sequences") {
  Trace minimal = {Action::call(1, "put", Value::pair(1, 1)), Action::lin(1),
                   Action::retn(1, Value::truth())};
  CHECK(well_formed(minimal));

  Trace ret_first = {Action::retn(1, Value::truth()),
                     Action::call(1, "put", Value::pair(1, 1))};
  CHECK_FALSE(well_formed(ret_first));
  CHECK(check_trace(ret_first).error_index == 0);

  Trace double_lin = {Action::call(1, "put", Value::pair(1, 1)), Action::lin(1),
                      Action::lin(1)};
  CHECK_FALSE(well_formed(double_lin));

  Trace double_call = {Action::call(1, "get", Value::integer(0)),
                       Action::call(1, "get", Value::integer(0))};
  CHECK_FALSE(well_formed(double_call));

  Trace vis_before_call = {Action::vis(1, 2), Action::call(1, "get", Value::integer(0))};
  CHECK_FALSE(well_formed(vis_before_call));

  // An order edge may precede the call of its target.
  Trace early_hb = {Action::call(1, "put", Value::pair(1, 1)), Action::retn(1, Value::truth()),
                    Action::hb(1, 2), Action::call(2, "get", Value::integer(1)),
                    Action::retn(2, Value::integer(1))};
  CHECK(well_formed(early_hb));

  // Unreturned source is legal but worth a warning.
  Trace early_edge = {Action::call(1, "put", Value::pair(1, 1)),
                      Action::call(2, "get", Value::integer(1)), Action::hb(1, 2)};
  auto check = check_trace(early_edge);
  CHECK(check.ok());
  CHECK(!check.warnings.empty());
}

TEST_CASE("folding a trace into a history") {
  Trace t = {Action::call(1, "put", Value::pair(1, 1)), Action::retn(1, Value::truth()),
             Action::hb(1, 2), Action::call(2, "get", Value::integer(1)),
             Action::retn(2, Value::integer(1))};
  History h = history_of_trace(t);
  CHECK(h.ops == std::set<OpId>{1, 2});
  CHECK(h.hb == std::set<std::pair<OpId, OpId>>{{1, 2}});
  CHECK(h.complete());
  CHECK(h.inv.at(2) == std::pair<std::string, Value>{"get", Value::integer(1)});

  CHECK(history_of_trace({}) == History{});

  CHECK(history_of_trace(example_trace()) == example_execution().history);
}

TEST_CASE("folding a trace into an abstract execution") {
  Trace t = {Action::call(1, "put", Value::pair(1, 1)), Action::lin(1),
             Action::retn(1, Value::truth())};
  AbstractExecution e = execution_of_trace(t);
  CHECK(e.lin == std::vector<OpId>{1});
  CHECK(e.vis_of(1).empty());

  CHECK(execution_of_trace(example_trace()) == example_execution());

  Trace hand = {Action::call(1, "put", Value::pair(1, 1)),
                Action::call(2, "put", Value::pair(1, 1)), Action::lin(1), Action::vis(2, 1),
                Action::lin(2)};
  AbstractExecution e2 = execution_of_trace(hand);
  CHECK(e2.lin == std::vector<OpId>{1, 2});
  CHECK(e2.vis_of(2) == std::set<OpId>{1});

  Trace bad = {Action::retn(7, Value::truth())};
  CHECK_THROWS_AS(execution_of_trace(bad), TraceError);
}

TEST_CASE("labels of completed operations") {
  History h;
  h.ops = {3};
  h.inv[3] = {"get", Value::integer(1)};
  h.ret[3] = Value::integer(1);
  CHECK(label_of(h, 3) == OperationLabel{"get", Value::integer(1), Value::integer(1)});

  h.ret.erase(3);
  h.inv[3] = {"has", Value::integer(1)};
  CHECK_THROWS_AS(label_of(h, 3), IncompleteOperationError);

  CHECK(label_of(example_execution().history, kHas) ==
        OperationLabel{"has", Value::integer(1), Value::falsity()});
}

TEST_CASE("fold monotonicity over prefixes") {
  std::mt19937 rng(7);
  for (int round = 0; round < 200; ++round) {
    Trace t = random_map_trace(rng);
    History full = history_of_trace(t);
    for (std::size_t cut = 0; cut <= t.size(); ++cut) {
      Trace prefix(t.begin(), t.begin() + cut);
      History part = history_of_trace(prefix);
      for (OpId o : part.ops) CHECK(full.ops.count(o));
      for (auto& [o, mx] : part.inv) CHECK(full.inv.at(o) == mx);
      for (auto& [o, y] : part.ret) CHECK(full.ret.at(o) == y);
      for (auto& p : part.hb) CHECK(full.hb.count(p));
    }
  }
}

TEST_CASE("the execution fold projects to the history fold") {
  std::mt19937 rng(11);
  for (int round = 0; round < 300; ++round) {
    Trace t = random_map_trace(rng);
    CHECK(execution_of_trace(t).history == history_of_trace(t));
  }
}

TEST_CASE("disciplined visibility stays within linearization predecessors") {
  // random_map_trace emits vis(o,o') only after lin(o') and before lin(o).
  std::mt19937 rng(13);
  for (int round = 0; round < 300; ++round) {
    AbstractExecution e = execution_of_trace(random_map_trace(rng));
    for (std::size_t pos = 0; pos < e.lin.size(); ++pos) {
      std::set<OpId> before(e.lin.begin(), e.lin.begin() + pos);
      for (OpId seen : e.vis_of(e.lin[pos])) CHECK(before.count(seen));
    }
  }
}

TEST_CASE("json round trips") {
  std::mt19937 rng(17);
  for (int round = 0; round < 100; ++round) {
    Trace t = random_map_trace(rng);
    Trace back = trace_from_jsonl(trace_to_jsonl(t));
    CHECK(back == t);
    AbstractExecution e = execution_of_trace(t);
    CHECK(execution_from_json(to_json(e)) == e);
    CHECK(history_from_json(to_json(e.history)) == e.history);
  }

  // Sentinel values keep their encodings.
  CHECK(to_json(Value::truth()) == Json(true));
  CHECK(to_json(Value::unit()).is_null());
  CHECK(to_json(Value::empty()) == Json("empty"));
  CHECK(value_from_json(Json::parse("[1,2]")) == Value::pair(1, 2));
}

TEST_CASE("transitive closure of order pairs") {
  auto closed = transitive_closure({{1, 2}, {2, 3}});
  CHECK(closed == std::set<std::pair<OpId, OpId>>{{1, 2}, {1, 3}, {2, 3}});
  CHECK(transitive_closure({}).empty());
}
