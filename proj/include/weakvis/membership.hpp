#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "weakvis/model.hpp"
#include "weakvis/monitor.hpp"
#include "weakvis/spec.hpp"

namespace weakvis {

struct SearchBounds {
  std::size_t max_ops = 8;
  std::uint64_t max_vis_candidates = 1u << 22;  // visibility assignments tried per history
  std::chrono::milliseconds timeout{60000};
  std::vector<Value> completion_values;  // candidate returns for pending operations
  bool prune_readonly = true;  // restrict monotonic candidates to non-read-only predecessors
};

/// A linearization and visibility assignment certifying membership.
struct Witness {
  std::vector<OpId> lin;
  std::map<OpId, std::set<OpId>> vis;

  AbstractExecution attach(const History& h) const {
    return AbstractExecution{h, lin, vis};
  }
};

class BoundsExceededError : public std::runtime_error {
 public:
  explicit BoundsExceededError(const std::string& what) : std::runtime_error(what) {}
};

/// Searches for a consistent abstract execution over h: linear extensions of
/// happens-before are enumerated in lexicographic id order; absolute
/// operations see exactly their predecessors, monotonic operations try
/// supersets of their mandated set, smallest first. The first witness found
/// is returned, making the result deterministic. NONE (nullopt) means no
/// witness exists within the bounds; genuinely running out of bounds raises
/// BoundsExceededError instead.
///
/// Incomplete histories are decided by trying, for every pending operation,
/// both dropping it and completing it with each configured completion value.
std::optional<Witness> history_in_spec(const History& h, const WeakVisibilitySpec& spec,
                                       const SearchBounds& bounds);

/// The abstract executions of the spec over sequences of length ≤ n with
/// arguments drawn from the domain: seeds are the complete, sequential,
/// absolute executions of admitted sequences; the set is closed under
/// happens-before weakening and under visibility weakening with recomputed
/// returns, keeping only consistent results. n is capped at 4.
std::vector<AbstractExecution> enumerate_executions(const WeakVisibilitySpec& spec, int n,
                                                    std::span<const std::int32_t> domain);

struct CrossValidationReport {
  std::uint64_t histories_checked = 0;
  std::uint64_t members = 0;
  std::vector<History> counterexamples;  // where the two definitions disagree

  bool ok() const { return counterexamples.empty(); }
};

/// Checks, for every complete history over ≤ n operations in the domain,
/// that membership via witness search coincides with membership via the
/// generative enumeration. n is capped at 4.
CrossValidationReport cross_validate(const WeakVisibilitySpec& spec, int n,
                                     std::span<const std::int32_t> domain,
                                     const SearchBounds& bounds);

struct ConsistencyReport {
  bool ok = true;
  std::uint64_t checked = 0;
  std::vector<History> failing;  // histories with no witness
};

/// Batch membership: ok iff every history has a witness.
ConsistencyReport implementation_consistent(const std::vector<History>& histories,
                                            const WeakVisibilitySpec& spec,
                                            const SearchBounds& bounds);

/// All strict partial orders over {0, …, k-1}, as closed pair sets.
/// Exposed for enumeration-style tests; k is capped at 4.
std::vector<std::set<std::pair<OpId, OpId>>> strict_partial_orders(int k);

/// Canonical encoding of a history up to renaming of operation ids.
std::string canonical_history_key(const History& h);

}  // namespace weakvis
