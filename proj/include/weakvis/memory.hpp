#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "weakvis/model.hpp"

namespace weakvis {

/// Memory address. 0 is reserved as the null pointer; alloc hands out
/// addresses from 1 and never reuses them.
using Address = std::uint32_t;
inline constexpr Address kNullAddress = 0;

struct MemResult {
  std::int32_t value = 0;
  std::uint32_t tags = 0;  // writer operations, as an op-index bitmask
  bool cas_ok = false;
};

class UnallocatedAddressError : public std::out_of_range {
 public:
  explicit UnallocatedAddressError(Address a)
      : std::out_of_range("unallocated address " + std::to_string(a)) {}
};

/// Sequentially consistent memory whose cells carry the set of operations
/// that stored to them. Loads return value and tags; stores and successful
/// cas add the acting operation's tag; failed cas leaves memory untouched.
///
/// Writer sets are kept as bitmasks over the per-run operation indices, which
/// bounds one run to 32 operations (matching the consistency engine).
class TaggedMemory {
 public:
  /// Observer for shadow bookkeeping in tests: (address, writer, value).
  using WriteObserver = std::function<void(Address, int, std::int32_t)>;

  Address alloc(std::int32_t initial) {
    cells_.push_back({initial, 0});
    return static_cast<Address>(cells_.size());
  }

  MemResult load(Address x) const {
    const Cell& c = cell(x);
    return MemResult{c.value, c.tags, false};
  }

  void store(Address x, std::int32_t y, int op_index) {
    Cell& c = cell(x);
    log_write(x, c);
    c.value = y;
    c.tags |= op_bit(op_index);
    if (observer_) observer_(x, op_index, y);
  }

  MemResult cas(Address x, std::int32_t expect, std::int32_t replace, int op_index) {
    Cell& c = cell(x);
    if (c.value != expect) return MemResult{c.value, c.tags, false};
    log_write(x, c);
    c.value = replace;
    c.tags |= op_bit(op_index);
    if (observer_) observer_(x, op_index, replace);
    return MemResult{replace, c.tags, true};
  }

  std::size_t size() const { return cells_.size(); }

  struct Mark {
    std::size_t cells = 0;
    std::size_t writes = 0;
  };
  Mark mark() const { return {cells_.size(), write_log_.size()}; }
  void rewind(const Mark& m) {
    while (write_log_.size() > m.writes) {
      const WriteRecord& w = write_log_.back();
      cells_[w.addr - 1] = w.old_cell;
      write_log_.pop_back();
    }
    cells_.resize(m.cells);
  }

  void set_observer(WriteObserver obs) { observer_ = std::move(obs); }

  /// Cells in address order, for snapshot serialization.
  struct CellView {
    Address addr;
    std::int32_t value;
    std::uint32_t tags;
  };
  std::vector<CellView> snapshot() const {
    std::vector<CellView> out;
    out.reserve(cells_.size());
    for (std::size_t i = 0; i < cells_.size(); ++i)
      out.push_back({static_cast<Address>(i + 1), cells_[i].value, cells_[i].tags});
    return out;
  }

 private:
  struct Cell {
    std::int32_t value;
    std::uint32_t tags;
  };
  struct WriteRecord {
    Address addr;
    Cell old_cell;
  };

  static std::uint32_t op_bit(int op_index) {
    if (op_index < 0 || op_index >= 32)
      throw std::out_of_range("operation index out of tag range");
    return std::uint32_t{1} << op_index;
  }

  Cell& cell(Address x) {
    if (x == kNullAddress || x > cells_.size()) throw UnallocatedAddressError(x);
    return cells_[x - 1];
  }
  const Cell& cell(Address x) const {
    if (x == kNullAddress || x > cells_.size()) throw UnallocatedAddressError(x);
    return cells_[x - 1];
  }

  void log_write(Address x, const Cell& c) { write_log_.push_back({x, c}); }

  std::vector<Cell> cells_;
  std::vector<WriteRecord> write_log_;
  WriteObserver observer_;
};

}  // namespace weakvis
