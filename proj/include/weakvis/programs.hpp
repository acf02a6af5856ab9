#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "weakvis/memory.hpp"
#include "weakvis/model.hpp"
#include "weakvis/monitor.hpp"
#include "weakvis/spec.hpp"

namespace weakvis {

/// Shared record of linearized operations with their labels so far.
/// Labels of linearized-but-pending operations carry the return value the
/// operation committed to at its linearization point.
class LinState {
 public:
  struct Record {
    int op_index;
    OpId ext_id;
    OperationLabel label;
    bool readonly;
  };

  void append(int op_index, OpId ext_id, OperationLabel label, bool readonly) {
    all_ |= std::uint32_t{1} << op_index;
    if (!readonly) modifiers_ |= std::uint32_t{1} << op_index;
    seq_.push_back({op_index, ext_id, std::move(label), readonly});
  }

  /// getLin(): every linearized operation, as an op-index mask.
  std::uint32_t all_mask() const { return all_; }
  /// getModLin(): the linearized modifiers (non-read-only labels so far).
  std::uint32_t modifier_mask() const { return modifiers_; }

  std::span<const Record> records() const { return seq_; }
  std::size_t size() const { return seq_.size(); }

  using Mark = std::size_t;
  Mark mark() const { return seq_.size(); }
  void rewind(Mark m) {
    while (seq_.size() > m) {
      const Record& r = seq_.back();
      all_ &= ~(std::uint32_t{1} << r.op_index);
      if (!r.readonly) modifiers_ &= ~(std::uint32_t{1} << r.op_index);
      seq_.pop_back();
    }
  }

 private:
  std::vector<Record> seq_;
  std::uint32_t all_ = 0;
  std::uint32_t modifiers_ = 0;
};

std::vector<OpId> lin_ids(const LinState& lin);
std::vector<OpId> modifier_ids(const LinState& lin);

/// Thread-local state of one active operation: program counter plus the
/// handful of registers the models need. Plain data, snapshotted wholesale
/// by the explorer's undo log.
struct LocalState {
  std::uint8_t pc = 0;
  std::uint8_t method = 0;
  bool done = false;
  std::int32_t key = 0;    // map key / queue push value
  std::int32_t val = 0;    // put value / has target value
  std::int32_t loop = 0;   // has table index / size count
  std::int32_t data = 0;   // pop's read element
  Address node = 0;        // push's fresh node
  Address cur = 0;         // traversal cursor / pop head snapshot
  Address nxt = 0;         // loaded next pointer
  Address tail = 0;        // pop/push tail snapshot
  Value arg;
  Value pending_ret;       // return value committed at the linearization point
};

/// What one atomic step emitted. The explorer turns these into trace
/// actions in the order: vis*, lin, ret.
struct StepEffects {
  std::uint32_t vis_targets = 0;  // op-index mask to make visible
  bool emitted_lin = false;
  Value lin_return;
  bool lin_readonly = false;
  bool emitted_ret = false;
  Value ret_value;
};

struct MethodInfo {
  std::string name;
  bool vis_at_call = false;  // monotonic methods see the modifiers atomically with their call
};

/// An instrumented step machine. Each step() invocation runs one
/// explorer-visible step: a single shared-memory access, or a whole atomic
/// section (access + vis/lin emission), or the final return.
class ObjectProgram {
 public:
  virtual ~ObjectProgram() = default;

  virtual const std::string& name() const = 0;
  virtual const WeakVisibilitySpec& spec() const = 0;
  virtual std::span<const MethodInfo> methods() const = 0;
  virtual void init_memory(TaggedMemory& mem) const = 0;
  virtual LocalState make_call(int method_index, const Value& arg) const = 0;
  virtual void step(LocalState& ls, TaggedMemory& mem, const LinState& lin, int op_index,
                    StepEffects& out) const = 0;

  int method_index(const std::string& name) const;
};

/// The concurrent hash map model: an integer table indexed by key (identity
/// hash), absolute put/get with store/load + vis + lin in one atomic
/// section, and a monotonic has that scans the table, publishing the
/// writers of every cell it reads.
std::shared_ptr<const ObjectProgram> chm_program(int table_size);

/// The lock-free queue model: absolute push/pop around a linked list with
/// head/tail pointers and cas, and a monotonic size that walks the chain
/// picking up the tags of every cell it reads.
std::shared_ptr<const ObjectProgram> msq_program();

struct MutantInfo {
  std::string name;
  std::shared_ptr<const ObjectProgram> program;
  std::vector<ViolationReason> expected;  // any of these counts as detected
};

/// Deliberately broken variants for negative testing:
///   chm-mutant-a  has without per-read visibility
///   chm-mutant-b  has without the call-time visibility
///   chm-mutant-c  put linearizing outside the atomic section of its store
///   msq-mutant-d  size with an off-by-one count
///   msq-mutant-e  size without traversal visibility
std::vector<MutantInfo> mutant_programs(int table_size);

/// Looks up "chm", "msq", or a mutant name. Throws std::invalid_argument.
std::shared_ptr<const ObjectProgram> program_by_name(const std::string& name, int table_size);

std::vector<std::string> program_names();

}  // namespace weakvis
