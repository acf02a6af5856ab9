#include "weakvis/membership.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <unordered_set>

namespace weakvis {

namespace {

using Clock = std::chrono::steady_clock;
using Mask = std::uint32_t;

inline Mask bit(int i) { return Mask{1} << i; }

template <typename F>
inline void for_each_bit(Mask mask, F&& f) {
  while (mask) {
    int i = std::countr_zero(mask);
    mask &= mask - 1;
    f(i);
  }
}

/// Witness search over one complete history with dense indices.
class WitnessSearch {
 public:
  WitnessSearch(const History& h, const WeakVisibilitySpec& spec, const SearchBounds& bounds)
      : spec_(spec), bounds_(bounds), deadline_(Clock::now() + bounds.timeout) {
    for (OpId o : h.ops) ids_.push_back(o);
    n_ = static_cast<int>(ids_.size());
    labels_.reserve(n_);
    for (int i = 0; i < n_; ++i) labels_.push_back(label_of(h, ids_[i]));
    method_idx_.reserve(n_);
    for (int i = 0; i < n_; ++i) method_idx_.push_back(spec.spec->method_index(labels_[i].method));
    readonly_mask_ = 0;
    for (int i = 0; i < n_; ++i)
      if (spec.readonly(labels_[i])) readonly_mask_ |= bit(i);
    preds_.assign(n_, 0);
    for (auto& [a, b] : h.hb_closure()) {
      int ia = index_of(a), ib = index_of(b);
      if (ia < 0 || ib < 0) continue;
      preds_[ib] |= bit(ia);
    }
    monotonic_.assign(n_, false);
    for (int i = 0; i < n_; ++i)
      monotonic_[i] = spec.visibility(labels_[i].method) == VisibilityKind::Monotonic;
    eval_ = spec.spec->make_evaluator();
    lin_.reserve(n_);
    vis_.assign(n_, 0);
  }

  std::optional<Witness> run() {
    if (extend()) {
      Witness w;
      for (int i : lin_) w.lin.push_back(ids_[i]);
      for (int i = 0; i < n_; ++i) {
        auto& vs = w.vis[ids_[i]];
        for_each_bit(vis_[i], [&](int j) { vs.insert(ids_[j]); });
      }
      return w;
    }
    return std::nullopt;
  }

 private:
  int index_of(OpId o) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), o);
    return it != ids_.end() && *it == o ? static_cast<int>(it - ids_.begin()) : -1;
  }

  void charge() {
    if (++work_ % 1024 == 0 && Clock::now() > deadline_)
      throw BoundsExceededError("witness search timed out");
    if (work_ > bounds_.max_vis_candidates)
      throw BoundsExceededError("witness search exceeded the candidate budget");
  }

  /// Projection of the chosen linearization prefix onto the non-read-only
  /// part of `visible`, plus the operation `self`; true iff admitted.
  /// Read-only members carry no effects and answer to their own checks.
  bool projection_admitted(Mask visible, int self) {
    eval_->reset();
    for (int i : lin_) {
      if (!(visible & bit(i)) || (readonly_mask_ & bit(i))) continue;
      if (!eval_->step(method_idx_[i], labels_[i].arg, labels_[i].ret)) return false;
    }
    return eval_->step(method_idx_[self], labels_[self].arg, labels_[self].ret);
  }

  Mask mandated_of(int o) const {
    Mask m = 0;
    for_each_bit(preds_[o], [&](int p) {
      if (!(readonly_mask_ & bit(p))) m |= bit(p);
      m |= vis_[p] & ~readonly_mask_;
    });
    return m;
  }

  bool extend() {
    if (static_cast<int>(lin_.size()) == n_) return true;
    for (int o = 0; o < n_; ++o) {
      if (placed_ & bit(o)) continue;
      if (preds_[o] & ~placed_) continue;  // some predecessor not yet placed
      lin_.push_back(o);
      placed_ |= bit(o);
      if (assign_visibility(o)) return true;
      placed_ &= ~bit(o);
      lin_.pop_back();
    }
    return false;
  }

  bool assign_visibility(int o) {
    Mask before = placed_ & ~bit(o);
    if (!monotonic_[o]) {
      charge();
      vis_[o] = before;
      if (projection_admitted(before, o) && extend()) return true;
      vis_[o] = 0;
      return false;
    }
    Mask mandated = mandated_of(o);
    Mask universe = before & ~mandated;
    if (bounds_.prune_readonly) universe &= ~readonly_mask_;
    std::array<int, ConsistencyEngine::kMaxOps> free{};
    int nfree = 0;
    for_each_bit(universe, [&](int i) { free[nfree++] = i; });
    // Smallest candidate first; equal sizes in ascending id order.
    for (int k = 0; k <= nfree; ++k) {
      if (try_subsets(o, mandated, free.data(), nfree, k, 0, 0)) return true;
    }
    vis_[o] = 0;
    return false;
  }

  bool try_subsets(int o, Mask mandated, const int* free, int nfree, int want, int from,
                   Mask chosen) {
    if (want == 0) {
      charge();
      vis_[o] = mandated | chosen;
      if (projection_admitted(vis_[o], o) && extend()) return true;
      return false;
    }
    for (int i = from; i + want <= nfree; ++i) {
      if (try_subsets(o, mandated, free, nfree, want - 1, i + 1, chosen | bit(free[i])))
        return true;
    }
    return false;
  }

  const WeakVisibilitySpec& spec_;
  const SearchBounds& bounds_;
  Clock::time_point deadline_;
  std::uint64_t work_ = 0;

  std::vector<OpId> ids_;
  int n_ = 0;
  std::vector<OperationLabel> labels_;
  std::vector<int> method_idx_;
  std::vector<Mask> preds_;
  std::vector<bool> monotonic_;
  Mask readonly_mask_ = 0;
  std::unique_ptr<SpecEvaluator> eval_;

  std::vector<int> lin_;
  Mask placed_ = 0;
  std::vector<Mask> vis_;
};

std::optional<Witness> search_complete(const History& h, const WeakVisibilitySpec& spec,
                                       const SearchBounds& bounds) {
  return WitnessSearch(h, spec, bounds).run();
}

History drop_operation(const History& h, OpId victim) {
  History out = h;
  out.ops.erase(victim);
  out.inv.erase(victim);
  out.ret.erase(victim);
  for (auto it = out.hb.begin(); it != out.hb.end();)
    it = (it->first == victim || it->second == victim) ? out.hb.erase(it) : std::next(it);
  return out;
}

}  // namespace

std::optional<Witness> history_in_spec(const History& h, const WeakVisibilitySpec& spec,
                                       const SearchBounds& bounds) {
  if (h.ops.size() > bounds.max_ops)
    throw BoundsExceededError("history has " + std::to_string(h.ops.size()) +
                              " operations, bound is " + std::to_string(bounds.max_ops));
  std::vector<OpId> pending;
  for (OpId o : h.ops)
    if (!h.is_complete(o)) pending.push_back(o);
  if (pending.empty()) return search_complete(h, spec, bounds);

  // Each pending operation is either dropped or completed with one of the
  // configured values; accept if any combination has a witness.
  std::size_t options = bounds.completion_values.size() + 1;
  std::vector<std::size_t> pick(pending.size(), 0);
  for (;;) {
    History candidate = h;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (pick[i] == 0)
        candidate = drop_operation(candidate, pending[i]);
      else
        candidate.ret[pending[i]] = bounds.completion_values[pick[i] - 1];
    }
    if (auto w = search_complete(candidate, spec, bounds)) return w;
    std::size_t i = 0;
    while (i < pick.size() && ++pick[i] == options) pick[i++] = 0;
    if (i == pick.size()) return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Generative enumeration
// ---------------------------------------------------------------------------

namespace {

std::string execution_key(const AbstractExecution& e) {
  std::string key;
  for (OpId o : e.history.ops) {
    auto& [m, x] = e.history.inv.at(o);
    key += m + "(" + x.str() + ")";
    auto it = e.history.ret.find(o);
    key += it == e.history.ret.end() ? "=?" : "=" + it->second.str();
    key += ";";
  }
  key += "|";
  for (auto& [a, b] : e.history.hb) key += std::to_string(a) + "<" + std::to_string(b) + ",";
  key += "|";
  for (OpId o : e.lin) key += std::to_string(o) + ",";
  key += "|";
  for (auto& [o, vs] : e.vis) {
    key += std::to_string(o) + ":";
    for (OpId t : vs) key += std::to_string(t) + ",";
    key += ";";
  }
  return key;
}

/// All transitive subsets of a strict partial order given as a pair set.
std::vector<std::set<std::pair<OpId, OpId>>> transitive_suborders(
    const std::set<std::pair<OpId, OpId>>& hb) {
  std::vector<std::pair<OpId, OpId>> pairs(hb.begin(), hb.end());
  std::vector<std::set<std::pair<OpId, OpId>>> out;
  if (pairs.size() > 20) throw BoundsExceededError("order too large to weaken exhaustively");
  for (std::uint32_t sel = 0; sel < (1u << pairs.size()); ++sel) {
    std::set<std::pair<OpId, OpId>> sub;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (sel & (1u << i)) sub.insert(pairs[i]);
    if (transitive_closure(sub) == sub) out.push_back(std::move(sub));
  }
  return out;
}

/// Recomputes returns under a weakened visibility, in linearization order.
/// Returns nullopt when some projection admits no return value.
std::optional<History> recompute_returns(const AbstractExecution& e,
                                         const WeakVisibilitySpec& spec) {
  History h = e.history;
  h.ret.clear();
  auto eval = spec.spec->make_evaluator();
  for (std::size_t pos = 0; pos < e.lin.size(); ++pos) {
    OpId o = e.lin[pos];
    eval->reset();
    bool ok = true;
    const std::set<OpId> seen = e.vis_of(o);
    for (std::size_t p = 0; p < pos && ok; ++p) {
      OpId q = e.lin[p];
      if (!seen.count(q)) continue;
      auto& [m, x] = h.inv.at(q);
      OperationLabel member{m, x, h.ret.at(q)};
      if (spec.readonly(member)) continue;
      ok = eval->step(spec.spec->method_index(m), x, member.ret);
    }
    if (!ok) return std::nullopt;
    auto& [m, x] = h.inv.at(o);
    auto y = eval->next_return(spec.spec->method_index(m), x);
    if (!y) return std::nullopt;
    h.ret[o] = *y;
  }
  return h;
}

}  // namespace

std::vector<AbstractExecution> enumerate_executions(const WeakVisibilitySpec& spec, int n,
                                                    std::span<const std::int32_t> domain) {
  if (n < 0 || n > 4)
    throw BoundsExceededError("generative enumeration is capped at 4 operations");

  // Invocation universe with deterministic returns.
  std::vector<std::pair<std::string, Value>> invocations;
  for (const std::string& m : spec.spec->methods())
    for (const Value& x : spec.spec->argument_universe(m, domain))
      invocations.emplace_back(m, x);

  std::vector<AbstractExecution> result;
  std::unordered_set<std::string> seen;
  std::vector<AbstractExecution> worklist;

  auto add = [&](AbstractExecution e) {
    for (auto it = e.vis.begin(); it != e.vis.end();)
      it = it->second.empty() ? e.vis.erase(it) : std::next(it);
    if (seen.insert(execution_key(e)).second) {
      result.push_back(e);
      worklist.push_back(std::move(e));
    }
  };

  // Seeds: complete, sequential, absolute executions of admitted sequences.
  std::vector<OperationLabel> prefix;
  auto seed = [&](auto&& self) -> void {
    AbstractExecution e;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      OpId o = static_cast<OpId>(i);
      e.history.ops.insert(o);
      e.history.inv[o] = {prefix[i].method, prefix[i].arg};
      e.history.ret[o] = prefix[i].ret;
      e.lin.push_back(o);
      auto& vs = e.vis[o];
      for (OpId q = 0; q < o; ++q) vs.insert(q);
      for (OpId q = 0; q < o; ++q) e.history.hb.emplace(q, o);
    }
    add(std::move(e));
    if (static_cast<int>(prefix.size()) == n) return;
    for (auto& [m, x] : invocations) {
      auto y = spec.spec->return_of(prefix, m, x);
      if (!y) continue;
      prefix.push_back(OperationLabel{m, x, *y});
      self(self);
      prefix.pop_back();
    }
  };
  seed(seed);

  // Closure under happens-before weakening and guarded visibility weakening.
  while (!worklist.empty()) {
    AbstractExecution e = std::move(worklist.back());
    worklist.pop_back();

    for (auto& sub : transitive_suborders(e.history.hb)) {
      if (sub == e.history.hb) continue;
      AbstractExecution weakened = e;
      weakened.history.hb = sub;
      add(std::move(weakened));
    }

    // Per-operation visibility subsets (product), returns recomputed.
    std::vector<OpId> lin = e.lin;
    std::vector<std::vector<OpId>> members;
    for (OpId o : lin) {
      std::set<OpId> vs = e.vis_of(o);
      members.emplace_back(vs.begin(), vs.end());
    }
    std::vector<std::uint32_t> sel(lin.size(), 0);
    auto advance = [&]() -> bool {
      for (std::size_t i = 0; i < sel.size(); ++i) {
        if (++sel[i] < (1u << members[i].size())) return true;
        sel[i] = 0;
      }
      return false;
    };
    if (lin.empty()) continue;
    for (;;) {
      bool all_full = true;
      for (std::size_t i = 0; i < sel.size(); ++i)
        if (sel[i] != (1u << members[i].size()) - 1) all_full = false;
      if (!all_full) {
        AbstractExecution weakened = e;
        for (std::size_t i = 0; i < lin.size(); ++i) {
          std::set<OpId> vs;
          for (std::size_t j = 0; j < members[i].size(); ++j)
            if (sel[i] & (1u << j)) vs.insert(members[i][j]);
          weakened.vis[lin[i]] = std::move(vs);
        }
        if (auto h = recompute_returns(weakened, spec)) {
          weakened.history = std::move(*h);
          if (execution_consistent(weakened, spec).ok) add(std::move(weakened));
        }
      }
      if (!advance()) break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Cross validation and batch checking
// ---------------------------------------------------------------------------

std::vector<std::set<std::pair<OpId, OpId>>> strict_partial_orders(int k) {
  if (k < 0 || k > 4) throw BoundsExceededError("poset enumeration is capped at 4 elements");
  std::vector<std::pair<OpId, OpId>> slots;
  for (OpId a = 0; a < static_cast<OpId>(k); ++a)
    for (OpId b = 0; b < static_cast<OpId>(k); ++b)
      if (a != b) slots.emplace_back(a, b);
  std::vector<std::set<std::pair<OpId, OpId>>> out;
  for (std::uint32_t sel = 0; sel < (1u << slots.size()); ++sel) {
    std::set<std::pair<OpId, OpId>> rel;
    for (std::size_t i = 0; i < slots.size(); ++i)
      if (sel & (1u << i)) rel.insert(slots[i]);
    bool antisym = true;
    for (auto& [a, b] : rel)
      if (rel.count({b, a})) antisym = false;
    if (!antisym) continue;
    if (transitive_closure(rel) != rel) continue;
    out.push_back(std::move(rel));
  }
  return out;
}

std::string canonical_history_key(const History& h) {
  std::vector<OpId> ids(h.ops.begin(), h.ops.end());
  std::vector<int> perm(ids.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::string best;
  do {
    // perm[i] = canonical position of ids[i]
    std::string key;
    std::vector<int> order(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) order[perm[i]] = static_cast<int>(i);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      OpId o = ids[order[pos]];
      auto& [m, x] = h.inv.at(o);
      key += m + "(" + x.str() + ")";
      auto it = h.ret.find(o);
      key += it == h.ret.end() ? "=?" : "=" + it->second.str();
      key += ";";
    }
    key += "|";
    std::set<std::pair<int, int>> mapped;
    for (auto& [a, b] : h.hb) {
      int ia = static_cast<int>(std::lower_bound(ids.begin(), ids.end(), a) - ids.begin());
      int ib = static_cast<int>(std::lower_bound(ids.begin(), ids.end(), b) - ids.begin());
      mapped.emplace(perm[ia], perm[ib]);
    }
    for (auto& [a, b] : mapped) key += std::to_string(a) + "<" + std::to_string(b) + ",";
    if (best.empty() || key < best) best = std::move(key);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

CrossValidationReport cross_validate(const WeakVisibilitySpec& spec, int n,
                                     std::span<const std::int32_t> domain,
                                     const SearchBounds& bounds) {
  if (n < 0 || n > 4)
    throw BoundsExceededError("cross validation is capped at 4 operations");

  CrossValidationReport report;
  std::unordered_set<std::string> generative;
  for (const AbstractExecution& e : enumerate_executions(spec, n, domain))
    generative.insert(canonical_history_key(e.history));

  // Label universe per method.
  std::vector<OperationLabel> labels;
  for (const std::string& m : spec.spec->methods())
    for (const Value& x : spec.spec->argument_universe(m, domain))
      for (const Value& y : spec.spec->return_universe(m, domain, n))
        labels.push_back(OperationLabel{m, x, y});

  for (int k = 0; k <= n; ++k) {
    auto posets = strict_partial_orders(k);
    std::vector<std::size_t> pick(k, 0);
    for (;;) {
      History h;
      for (int i = 0; i < k; ++i) {
        OpId o = static_cast<OpId>(i);
        h.ops.insert(o);
        h.inv[o] = {labels[pick[i]].method, labels[pick[i]].arg};
        h.ret[o] = labels[pick[i]].ret;
      }
      for (auto& hb : posets) {
        h.hb = hb;
        ++report.histories_checked;
        bool by_search = history_in_spec(h, spec, bounds).has_value();
        bool by_enumeration = generative.count(canonical_history_key(h)) > 0;
        if (by_search) ++report.members;
        if (by_search != by_enumeration) report.counterexamples.push_back(h);
      }
      if (k == 0) break;
      std::size_t i = 0;
      while (i < pick.size() && ++pick[i] == labels.size()) pick[i++] = 0;
      if (i == pick.size()) break;
    }
  }
  return report;
}

ConsistencyReport implementation_consistent(const std::vector<History>& histories,
                                            const WeakVisibilitySpec& spec,
                                            const SearchBounds& bounds) {
  ConsistencyReport report;
  for (const History& h : histories) {
    ++report.checked;
    if (!history_in_spec(h, spec, bounds)) {
      report.ok = false;
      report.failing.push_back(h);
    }
  }
  return report;
}

}  // namespace weakvis
