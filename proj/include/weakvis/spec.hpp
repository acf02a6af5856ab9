#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "weakvis/model.hpp"

namespace weakvis {

enum class VisibilityKind : std::uint8_t { Absolute, Monotonic };

std::string to_string(VisibilityKind kind);
std::optional<VisibilityKind> visibility_from_string(const std::string& s);

/// Per-method visibility requirement, total on the ADT's method set.
using VisibilityAnnotation = std::map<std::string, VisibilityKind>;

class UnknownMethodError : public std::invalid_argument {
 public:
  explicit UnknownMethodError(const std::string& m)
      : std::invalid_argument("unknown method: " + m) {}
};

class InadmissiblePrefixError : public std::runtime_error {
 public:
  InadmissiblePrefixError() : std::runtime_error("prefix not admitted by the spec") {}
};

/// Incremental evaluator for one sequential specification. Reset it, feed
/// labels in order; step() reports whether the extended sequence stays
/// admitted. Methods are addressed by their position in the owning spec's
/// methods() list, keeping checking loops free of string handling.
/// Evaluators are cheap to reset and are reused across checks.
class SpecEvaluator {
 public:
  virtual ~SpecEvaluator() = default;
  virtual void reset() = 0;
  /// Applies one label; returns false if the sequence leaves the spec.
  virtual bool step(int method_index, const Value& arg, const Value& ret) = 0;
  /// The unique admitted return after the fed prefix, or nullopt when the
  /// spec leaves the choice open.
  virtual std::optional<Value> next_return(int method_index, const Value& arg) = 0;
};

/// A sequential specification: a prefix-closed set of label sequences with
/// a read-only predicate and (for the specs shipped here) deterministic
/// return values.
class SequentialSpec {
 public:
  virtual ~SequentialSpec() = default;

  virtual const std::string& name() const = 0;
  virtual const std::vector<std::string>& methods() const = 0;
  virtual bool readonly(const OperationLabel& label) const = 0;
  virtual std::unique_ptr<SpecEvaluator> make_evaluator() const = 0;

  /// All argument values of a method over the given integer domain.
  virtual std::vector<Value> argument_universe(const std::string& method,
                                               std::span<const std::int32_t> domain) const = 0;
  /// All return values a method could plausibly carry in a history over the
  /// domain (including ones no admitted sequence produces).
  virtual std::vector<Value> return_universe(const std::string& method,
                                             std::span<const std::int32_t> domain,
                                             int max_ops) const = 0;

  /// True iff the sequence is admitted. Throws UnknownMethodError for
  /// labels naming methods outside the ADT.
  bool admits(std::span<const OperationLabel> s) const;

  /// The unique y with prefix·⟨m,x,y⟩ admitted. NONDET is signalled by
  /// nullopt; an inadmissible prefix raises InadmissiblePrefixError.
  std::optional<Value> return_of(std::span<const OperationLabel> prefix,
                                 const std::string& method, const Value& arg) const;

  bool has_method(const std::string& m) const;
  /// Position of a method in methods(); throws UnknownMethodError.
  int method_index(const std::string& m) const;
};

/// Key-value map with put/rem/get/has.
///
/// put(k,v) maps k to v and returns true iff k was unmapped; rem(k) returns
/// true iff k was mapped; get(k) returns the mapped value or false; has(v)
/// returns true iff some key maps to v. Value 0 is the "no value" sentinel:
/// an unmapped key reads as absent and putting 0 clears the key, matching
/// implementations whose cells hold 0 until written. Failed rems, gets and
/// has are read-only. Puts never are: even a failed put overwrites the
/// mapped value, and a predicate marking it read-only would break closure
/// of the spec under read-only deletion.
std::shared_ptr<const SequentialSpec> map_spec();

/// FIFO queue with push/pop/size. push always returns true; pop returns the
/// front element or EMPTY; size returns the current length. size and empty
/// pops are read-only.
std::shared_ptr<const SequentialSpec> queue_spec();

/// Sequential spec bundled with its visibility annotation.
struct WeakVisibilitySpec {
  std::shared_ptr<const SequentialSpec> spec;
  VisibilityAnnotation vis;

  bool readonly(const OperationLabel& label) const { return spec->readonly(label); }
  VisibilityKind visibility(const std::string& method) const;
};

/// Builds the weak spec for "map" or "queue". Defaults: map has is
/// monotonic, queue size is monotonic, everything else absolute. Overrides
/// are applied on top (e.g. has=absolute recovers linearizability).
WeakVisibilitySpec make_weak_spec(
    const std::string& adt,
    const std::map<std::string, VisibilityKind>& vis_overrides = {});

// Convenience wrappers matching the per-ADT operation names.
bool map_admits(std::span<const OperationLabel> s);
bool map_readonly(const OperationLabel& label);
std::optional<Value> map_return_of(std::span<const OperationLabel> prefix,
                                   const std::string& method, const Value& arg);
bool queue_admits(std::span<const OperationLabel> s);
bool queue_readonly(const OperationLabel& label);
std::optional<Value> queue_return_of(std::span<const OperationLabel> prefix,
                                     const std::string& method, const Value& arg);

}  // namespace weakvis
