#pragma once

#include <istream>
#include <optional>
#include <string>

#include <json.hpp>

#include "weakvis/membership.hpp"
#include "weakvis/memory.hpp"
#include "weakvis/model.hpp"
#include "weakvis/monitor.hpp"

namespace weakvis {

using Json = nlohmann::json;

// Values: booleans as true/false, integers as numbers, pairs as [a,b],
// the absent/unit value as null, EMPTY as the string "empty".
Json to_json(const Value& v);
Value value_from_json(const Json& j);

Json to_json(const Action& a);
Action action_from_json(const Json& j);

/// Trace files carry one action object per line.
std::string trace_to_jsonl(const Trace& trace);
Trace trace_from_jsonl(std::istream& in);
Trace trace_from_jsonl(const std::string& text);

Json to_json(const History& h);
History history_from_json(const Json& j);

Json to_json(const AbstractExecution& e);
AbstractExecution execution_from_json(const Json& j);

Json to_json(const Verdict& v);

/// {"lin":[ids],"vis":{"id":[ids]}} for members, {"member":false} otherwise.
Json witness_to_json(const std::optional<Witness>& w);

/// Memory snapshot for debugging: {"addr":{"v":value,"tags":[op indices]}}.
Json memory_to_json(std::span<const TaggedMemory::CellView> cells);

class JsonFormatError : public std::runtime_error {
 public:
  explicit JsonFormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace weakvis
