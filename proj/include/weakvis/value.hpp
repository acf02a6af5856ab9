#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace weakvis {

/// Argument/return values exchanged with the checked objects.
///
/// The value universe is deliberately small: booleans (with true also
/// written ⊤ and false doubling as the "absent" marker ⊥), small integers,
/// integer pairs (key-value arguments), the EMPTY sentinel of the queue,
/// and a unit value for argument-less methods.
enum class ValueKind : std::uint8_t { Unit, Bool, Int, Empty, Pair };

class Value {
 public:
  constexpr Value() = default;  // unit

  static constexpr Value unit() { return Value{}; }
  static constexpr Value boolean(bool b) {
    Value v;
    v.kind_ = ValueKind::Bool;
    v.a_ = b ? 1 : 0;
    return v;
  }
  static constexpr Value truth() { return boolean(true); }
  static constexpr Value falsity() { return boolean(false); }
  static constexpr Value integer(std::int32_t i) {
    Value v;
    v.kind_ = ValueKind::Int;
    v.a_ = i;
    return v;
  }
  static constexpr Value empty() {
    Value v;
    v.kind_ = ValueKind::Empty;
    return v;
  }
  static constexpr Value pair(std::int32_t first, std::int32_t second) {
    Value v;
    v.kind_ = ValueKind::Pair;
    v.a_ = first;
    v.b_ = second;
    return v;
  }

  constexpr ValueKind kind() const { return kind_; }
  constexpr bool is_unit() const { return kind_ == ValueKind::Unit; }
  constexpr bool is_bool() const { return kind_ == ValueKind::Bool; }
  constexpr bool is_int() const { return kind_ == ValueKind::Int; }
  constexpr bool is_empty() const { return kind_ == ValueKind::Empty; }
  constexpr bool is_pair() const { return kind_ == ValueKind::Pair; }

  constexpr bool as_bool() const { return a_ != 0; }
  constexpr std::int32_t as_int() const { return a_; }
  constexpr std::int32_t first() const { return a_; }
  constexpr std::int32_t second() const { return b_; }

  constexpr bool is_true() const { return is_bool() && as_bool(); }
  constexpr bool is_false() const { return is_bool() && !as_bool(); }

  friend constexpr bool operator==(const Value& x, const Value& y) {
    return x.kind_ == y.kind_ && x.a_ == y.a_ && x.b_ == y.b_;
  }
  friend constexpr bool operator!=(const Value& x, const Value& y) { return !(x == y); }
  friend constexpr bool operator<(const Value& x, const Value& y) {
    if (x.kind_ != y.kind_) return x.kind_ < y.kind_;
    if (x.a_ != y.a_) return x.a_ < y.a_;
    return x.b_ < y.b_;
  }

  std::string str() const {
    switch (kind_) {
      case ValueKind::Unit: return "()";
      case ValueKind::Bool: return as_bool() ? "true" : "false";
      case ValueKind::Int: return std::to_string(a_);
      case ValueKind::Empty: return "empty";
      case ValueKind::Pair:
        return "(" + std::to_string(a_) + "," + std::to_string(b_) + ")";
    }
    return "?";
  }

  std::size_t hash() const {
    std::size_t h = static_cast<std::size_t>(kind_);
    h = h * 1000003u + static_cast<std::size_t>(static_cast<std::uint32_t>(a_));
    h = h * 1000003u + static_cast<std::size_t>(static_cast<std::uint32_t>(b_));
    return h;
  }

 private:
  ValueKind kind_ = ValueKind::Unit;
  std::int32_t a_ = 0;
  std::int32_t b_ = 0;
};

}  // namespace weakvis

template <>
struct std::hash<weakvis::Value> {
  std::size_t operator()(const weakvis::Value& v) const { return v.hash(); }
};
