#include "weakvis/spec.hpp"

#include <algorithm>

namespace weakvis {

std::string to_string(VisibilityKind kind) {
  return kind == VisibilityKind::Absolute ? "absolute" : "monotonic";
}

std::optional<VisibilityKind> visibility_from_string(const std::string& s) {
  if (s == "absolute") return VisibilityKind::Absolute;
  if (s == "monotonic") return VisibilityKind::Monotonic;
  return std::nullopt;
}

bool SequentialSpec::has_method(const std::string& m) const {
  const auto& ms = methods();
  return std::find(ms.begin(), ms.end(), m) != ms.end();
}

int SequentialSpec::method_index(const std::string& m) const {
  const auto& ms = methods();
  auto it = std::find(ms.begin(), ms.end(), m);
  if (it == ms.end()) throw UnknownMethodError(m);
  return static_cast<int>(it - ms.begin());
}

bool SequentialSpec::admits(std::span<const OperationLabel> s) const {
  auto eval = make_evaluator();
  eval->reset();
  for (const OperationLabel& label : s)
    if (!eval->step(method_index(label.method), label.arg, label.ret)) return false;
  return true;
}

std::optional<Value> SequentialSpec::return_of(std::span<const OperationLabel> prefix,
                                               const std::string& method,
                                               const Value& arg) const {
  int mi = method_index(method);
  auto eval = make_evaluator();
  eval->reset();
  for (const OperationLabel& label : prefix)
    if (!eval->step(method_index(label.method), label.arg, label.ret))
      throw InadmissiblePrefixError();
  return eval->next_return(mi, arg);
}

// ---------------------------------------------------------------------------
// Key-value map
// ---------------------------------------------------------------------------

namespace {

// Value 0 is the "no value" sentinel throughout the map: an unmapped key
// reads as 0, and storing 0 clears the key. This keeps the abstract map in
// lockstep with implementations that encode absence as the default cell
// value.
// Method positions in MapSpec::methods().
enum MapMethod { kMapPut = 0, kMapRem = 1, kMapGet = 2, kMapHas = 3 };

class MapEvaluator final : public SpecEvaluator {
 public:
  void reset() override { entries_.clear(); }

  bool step(int mi, const Value& arg, const Value& ret) override {
    auto expected = next_return(mi, arg);
    if (!expected || *expected != ret) return false;
    if (mi == kMapPut)
      set(arg.first(), arg.second());
    else if (mi == kMapRem)
      set(arg.as_int(), 0);
    return true;
  }

  std::optional<Value> next_return(int mi, const Value& arg) override {
    switch (mi) {
      case kMapPut:
        if (!arg.is_pair()) return std::nullopt;
        return Value::boolean(current(arg.first()) == 0);
      case kMapRem:
        if (!arg.is_int()) return std::nullopt;
        return Value::boolean(current(arg.as_int()) != 0);
      case kMapGet: {
        if (!arg.is_int()) return std::nullopt;
        std::int32_t v = current(arg.as_int());
        return v == 0 ? Value::falsity() : Value::integer(v);
      }
      case kMapHas:
        if (!arg.is_int()) return std::nullopt;
        for (auto& [k, v] : entries_)
          if (v != 0 && v == arg.as_int()) return Value::truth();
        return Value::falsity();
    }
    return std::nullopt;
  }

 private:
  std::int32_t current(std::int32_t key) const {
    for (auto& [k, v] : entries_)
      if (k == key) return v;
    return 0;
  }

  void set(std::int32_t key, std::int32_t value) {
    for (auto& [k, v] : entries_) {
      if (k == key) {
        v = value;
        return;
      }
    }
    entries_.emplace_back(key, value);
  }

  // Flat key-value store; domains are tiny so linear scans win.
  std::vector<std::pair<std::int32_t, std::int32_t>> entries_;
};

class MapSpec final : public SequentialSpec {
 public:
  const std::string& name() const override {
    static const std::string n = "map";
    return n;
  }
  const std::vector<std::string>& methods() const override {
    static const std::vector<std::string> ms = {"put", "rem", "get", "has"};
    return ms;
  }
  bool readonly(const OperationLabel& label) const override {
    if (label.method == "get" || label.method == "has") return true;
    if (label.method == "rem") return label.ret.is_false();
    return false;
  }
  std::unique_ptr<SpecEvaluator> make_evaluator() const override {
    return std::make_unique<MapEvaluator>();
  }
  std::vector<Value> argument_universe(const std::string& method,
                                       std::span<const std::int32_t> domain) const override {
    std::vector<Value> out;
    if (method == "put") {
      for (std::int32_t k : domain)
        for (std::int32_t v : domain) out.push_back(Value::pair(k, v));
    } else if (method == "rem" || method == "get" || method == "has") {
      for (std::int32_t k : domain) out.push_back(Value::integer(k));
    } else {
      throw UnknownMethodError(method);
    }
    return out;
  }
  std::vector<Value> return_universe(const std::string& method,
                                     std::span<const std::int32_t> domain,
                                     int) const override {
    if (method == "get") {
      std::vector<Value> out = {Value::falsity()};
      for (std::int32_t v : domain) out.push_back(Value::integer(v));
      return out;
    }
    if (method == "put" || method == "rem" || method == "has")
      return {Value::falsity(), Value::truth()};
    throw UnknownMethodError(method);
  }
};

// ---------------------------------------------------------------------------
// FIFO queue
// ---------------------------------------------------------------------------

// Method positions in QueueSpec::methods().
enum QueueMethod { kQueuePush = 0, kQueuePop = 1, kQueueSize = 2 };

class QueueEvaluator final : public SpecEvaluator {
 public:
  void reset() override { items_.clear(); }

  bool step(int mi, const Value& arg, const Value& ret) override {
    auto expected = next_return(mi, arg);
    if (!expected || *expected != ret) return false;
    if (mi == kQueuePush)
      items_.push_back(arg.as_int());
    else if (mi == kQueuePop && !items_.empty())
      items_.erase(items_.begin());
    return true;
  }

  std::optional<Value> next_return(int mi, const Value& arg) override {
    switch (mi) {
      case kQueuePush:
        if (!arg.is_int()) return std::nullopt;
        return Value::truth();
      case kQueuePop:
        if (items_.empty()) return Value::empty();
        return Value::integer(items_.front());
      case kQueueSize:
        return Value::integer(static_cast<std::int32_t>(items_.size()));
    }
    return std::nullopt;
  }

 private:
  std::vector<std::int32_t> items_;
};

class QueueSpec final : public SequentialSpec {
 public:
  const std::string& name() const override {
    static const std::string n = "queue";
    return n;
  }
  const std::vector<std::string>& methods() const override {
    static const std::vector<std::string> ms = {"push", "pop", "size"};
    return ms;
  }
  bool readonly(const OperationLabel& label) const override {
    if (label.method == "size") return true;
    if (label.method == "pop") return label.ret.is_empty();
    return false;
  }
  std::unique_ptr<SpecEvaluator> make_evaluator() const override {
    return std::make_unique<QueueEvaluator>();
  }
  std::vector<Value> argument_universe(const std::string& method,
                                       std::span<const std::int32_t> domain) const override {
    if (method == "push") {
      std::vector<Value> out;
      for (std::int32_t v : domain) out.push_back(Value::integer(v));
      return out;
    }
    if (method == "pop" || method == "size") return {Value::unit()};
    throw UnknownMethodError(method);
  }
  std::vector<Value> return_universe(const std::string& method,
                                     std::span<const std::int32_t> domain,
                                     int max_ops) const override {
    if (method == "push") return {Value::truth()};
    if (method == "pop") {
      std::vector<Value> out = {Value::empty()};
      for (std::int32_t v : domain) out.push_back(Value::integer(v));
      return out;
    }
    if (method == "size") {
      std::vector<Value> out;
      for (int s = 0; s <= max_ops; ++s) out.push_back(Value::integer(s));
      return out;
    }
    throw UnknownMethodError(method);
  }
};

}  // namespace

std::shared_ptr<const SequentialSpec> map_spec() {
  static const auto instance = std::make_shared<const MapSpec>();
  return instance;
}

std::shared_ptr<const SequentialSpec> queue_spec() {
  static const auto instance = std::make_shared<const QueueSpec>();
  return instance;
}

VisibilityKind WeakVisibilitySpec::visibility(const std::string& method) const {
  auto it = vis.find(method);
  if (it == vis.end()) throw UnknownMethodError(method);
  return it->second;
}

WeakVisibilitySpec make_weak_spec(const std::string& adt,
                                  const std::map<std::string, VisibilityKind>& vis_overrides) {
  WeakVisibilitySpec w;
  if (adt == "map") {
    w.spec = map_spec();
    w.vis = {{"put", VisibilityKind::Absolute},
             {"rem", VisibilityKind::Absolute},
             {"get", VisibilityKind::Absolute},
             {"has", VisibilityKind::Monotonic}};
  } else if (adt == "queue") {
    w.spec = queue_spec();
    w.vis = {{"push", VisibilityKind::Absolute},
             {"pop", VisibilityKind::Absolute},
             {"size", VisibilityKind::Monotonic}};
  } else {
    throw std::invalid_argument("unknown ADT: " + adt);
  }
  for (auto& [m, kind] : vis_overrides) {
    if (!w.vis.count(m)) throw UnknownMethodError(m);
    w.vis[m] = kind;
  }
  return w;
}

bool map_admits(std::span<const OperationLabel> s) { return map_spec()->admits(s); }
bool map_readonly(const OperationLabel& label) { return map_spec()->readonly(label); }
std::optional<Value> map_return_of(std::span<const OperationLabel> prefix,
                                   const std::string& method, const Value& arg) {
  return map_spec()->return_of(prefix, method, arg);
}
bool queue_admits(std::span<const OperationLabel> s) { return queue_spec()->admits(s); }
bool queue_readonly(const OperationLabel& label) { return queue_spec()->readonly(label); }
std::optional<Value> queue_return_of(std::span<const OperationLabel> prefix,
                                     const std::string& method, const Value& arg) {
  return queue_spec()->return_of(prefix, method, arg);
}

}  // namespace weakvis
