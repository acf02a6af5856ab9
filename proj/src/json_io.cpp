#include "weakvis/json_io.hpp"

#include <bit>
#include <sstream>

namespace weakvis {

Json to_json(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Unit: return nullptr;
    case ValueKind::Bool: return v.as_bool();
    case ValueKind::Int: return v.as_int();
    case ValueKind::Empty: return "empty";
    case ValueKind::Pair: return Json::array({v.first(), v.second()});
  }
  return nullptr;
}

Value value_from_json(const Json& j) {
  if (j.is_null()) return Value::unit();
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number_integer()) return Value::integer(j.get<std::int32_t>());
  if (j.is_string()) {
    if (j.get<std::string>() == "empty") return Value::empty();
    throw JsonFormatError("unknown value string: " + j.get<std::string>());
  }
  if (j.is_array() && j.size() == 2 && j[0].is_number_integer() && j[1].is_number_integer())
    return Value::pair(j[0].get<std::int32_t>(), j[1].get<std::int32_t>());
  throw JsonFormatError("cannot parse value: " + j.dump());
}

Json to_json(const Action& a) {
  Json j;
  switch (a.kind) {
    case ActionKind::Call:
      j["a"] = "call";
      j["op"] = a.op;
      j["m"] = a.method;
      j["x"] = to_json(a.arg);
      break;
    case ActionKind::Ret:
      j["a"] = "ret";
      j["op"] = a.op;
      j["y"] = to_json(a.ret);
      break;
    case ActionKind::Hb:
      j["a"] = "hb";
      j["op"] = a.op;
      j["op2"] = a.op2;
      break;
    case ActionKind::Lin:
      j["a"] = "lin";
      j["op"] = a.op;
      break;
    case ActionKind::Vis:
      j["a"] = "vis";
      j["op"] = a.op;
      j["op2"] = a.op2;
      break;
    case ActionKind::Silent:
      j["a"] = "silent";
      break;
  }
  return j;
}

Action action_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("a")) throw JsonFormatError("action must have an \"a\" tag");
  std::string kind = j.at("a").get<std::string>();
  auto op = [&]() -> OpId { return j.at("op").get<OpId>(); };
  auto op2 = [&]() -> OpId { return j.at("op2").get<OpId>(); };
  if (kind == "call")
    return Action::call(op(), j.at("m").get<std::string>(), value_from_json(j.value("x", Json{})));
  if (kind == "ret") return Action::retn(op(), value_from_json(j.value("y", Json{})));
  if (kind == "hb") return Action::hb(op(), op2());
  if (kind == "lin") return Action::lin(op());
  if (kind == "vis") return Action::vis(op(), op2());
  if (kind == "silent") return Action::silent();
  throw JsonFormatError("unknown action kind: " + kind);
}

std::string trace_to_jsonl(const Trace& trace) {
  std::string out;
  for (const Action& a : trace) {
    out += to_json(a).dump();
    out += '\n';
  }
  return out;
}

Trace trace_from_jsonl(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    try {
      trace.push_back(action_from_json(Json::parse(line)));
    } catch (const Json::parse_error& e) {
      throw JsonFormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return trace;
}

Trace trace_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  return trace_from_jsonl(in);
}

Json to_json(const History& h) {
  Json j;
  j["ops"] = Json::array();
  for (OpId o : h.ops) j["ops"].push_back(o);
  j["inv"] = Json::object();
  for (auto& [o, mx] : h.inv)
    j["inv"][std::to_string(o)] = Json::array({mx.first, to_json(mx.second)});
  j["ret"] = Json::object();
  for (auto& [o, y] : h.ret) j["ret"][std::to_string(o)] = to_json(y);
  j["hb"] = Json::array();
  for (auto& [a, b] : h.hb) j["hb"].push_back(Json::array({a, b}));
  return j;
}

History history_from_json(const Json& j) {
  History h;
  for (auto& o : j.at("ops")) h.ops.insert(o.get<OpId>());
  for (auto& [key, mx] : j.at("inv").items()) {
    OpId o = static_cast<OpId>(std::stoul(key));
    if (!mx.is_array() || mx.size() != 2)
      throw JsonFormatError("inv entries are [method, argument] pairs");
    h.inv[o] = {mx[0].get<std::string>(), value_from_json(mx[1])};
  }
  if (j.contains("ret"))
    for (auto& [key, y] : j.at("ret").items())
      h.ret[static_cast<OpId>(std::stoul(key))] = value_from_json(y);
  if (j.contains("hb"))
    for (auto& pair : j.at("hb")) {
      if (!pair.is_array() || pair.size() != 2) throw JsonFormatError("hb entries are [a, b]");
      h.hb.emplace(pair[0].get<OpId>(), pair[1].get<OpId>());
    }
  for (OpId o : h.ops)
    if (!h.inv.count(o)) throw JsonFormatError("operation " + std::to_string(o) + " has no inv");
  return h;
}

Json to_json(const AbstractExecution& e) {
  Json j;
  j["history"] = to_json(e.history);
  j["lin"] = Json::array();
  for (OpId o : e.lin) j["lin"].push_back(o);
  j["vis"] = Json::object();
  for (auto& [o, vs] : e.vis) {
    Json arr = Json::array();
    for (OpId t : vs) arr.push_back(t);
    j["vis"][std::to_string(o)] = std::move(arr);
  }
  return j;
}

AbstractExecution execution_from_json(const Json& j) {
  AbstractExecution e;
  e.history = history_from_json(j.at("history"));
  if (j.contains("lin"))
    for (auto& o : j.at("lin")) e.lin.push_back(o.get<OpId>());
  if (j.contains("vis"))
    for (auto& [key, arr] : j.at("vis").items()) {
      auto& vs = e.vis[static_cast<OpId>(std::stoul(key))];
      for (auto& t : arr) vs.insert(t.get<OpId>());
    }
  return e;
}

Json to_json(const Verdict& v) {
  Json j;
  j["ok"] = v.ok;
  j["violations"] = Json::array();
  for (const Violation& violation : v.violations) {
    Json entry;
    entry["op"] = violation.op;
    entry["reason"] = to_string(violation.reason);
    entry["prefix_len"] = violation.prefix_len;
    j["violations"].push_back(std::move(entry));
  }
  return j;
}

Json memory_to_json(std::span<const TaggedMemory::CellView> cells) {
  Json j = Json::object();
  for (const TaggedMemory::CellView& c : cells) {
    Json entry;
    entry["v"] = c.value;
    entry["tags"] = Json::array();
    std::uint32_t tags = c.tags;
    while (tags) {
      int i = std::countr_zero(tags);
      tags &= tags - 1;
      entry["tags"].push_back(i);
    }
    j[std::to_string(c.addr)] = std::move(entry);
  }
  return j;
}

Json witness_to_json(const std::optional<Witness>& w) {
  if (!w) return Json{{"member", false}};
  Json j;
  j["lin"] = Json::array();
  for (OpId o : w->lin) j["lin"].push_back(o);
  j["vis"] = Json::object();
  for (auto& [o, vs] : w->vis) {
    Json arr = Json::array();
    for (OpId t : vs) arr.push_back(t);
    j["vis"][std::to_string(o)] = std::move(arr);
  }
  return j;
}

}  // namespace weakvis
