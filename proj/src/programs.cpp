#include "weakvis/programs.hpp"

#include <algorithm>
#include <bit>

namespace weakvis {

std::vector<OpId> lin_ids(const LinState& lin) {
  std::vector<OpId> out;
  for (const auto& r : lin.records()) out.push_back(r.ext_id);
  return out;
}

std::vector<OpId> modifier_ids(const LinState& lin) {
  std::vector<OpId> out;
  for (const auto& r : lin.records())
    if (!r.readonly) out.push_back(r.ext_id);
  return out;
}

int ObjectProgram::method_index(const std::string& name) const {
  auto ms = methods();
  for (std::size_t i = 0; i < ms.size(); ++i)
    if (ms[i].name == name) return static_cast<int>(i);
  throw UnknownMethodError(name);
}

namespace {

// ---------------------------------------------------------------------------
// Concurrent hash map model
// ---------------------------------------------------------------------------

struct ChmOptions {
  bool per_read_vis = true;
  bool call_vis = true;       // realized via MethodInfo::vis_at_call
  bool detached_put_lin = false;
};

class ChmProgram final : public ObjectProgram {
 public:
  ChmProgram(std::string name, int table_size, ChmOptions opts)
      : name_(std::move(name)),
        table_size_(table_size),
        opts_(opts),
        spec_(make_weak_spec("map")) {
    methods_ = {{"put", false}, {"get", false}, {"has", opts_.call_vis}};
  }

  const std::string& name() const override { return name_; }
  const WeakVisibilitySpec& spec() const override { return spec_; }
  std::span<const MethodInfo> methods() const override { return methods_; }

  void init_memory(TaggedMemory& mem) const override {
    for (int k = 0; k < table_size_; ++k) mem.alloc(0);  // 0 encodes "absent"
  }

  LocalState make_call(int method_index, const Value& arg) const override {
    LocalState ls;
    ls.method = static_cast<std::uint8_t>(method_index);
    ls.arg = arg;
    switch (method_index) {
      case kPut:
        if (!arg.is_pair()) throw std::invalid_argument("put expects a (key,value) pair");
        ls.key = arg.first();
        ls.val = arg.second();
        if (ls.val < 0) throw std::invalid_argument("stored values must be non-negative");
        break;
      case kGet:
        if (!arg.is_int()) throw std::invalid_argument("get expects a key");
        ls.key = arg.as_int();
        break;
      case kHas:
        if (!arg.is_int()) throw std::invalid_argument("has expects a value");
        ls.val = arg.as_int();
        // Cell value 0 encodes absence, so the scan cannot search for it.
        if (ls.val <= 0) throw std::invalid_argument("searched values must be positive");
        break;
      default:
        throw std::invalid_argument("bad method index");
    }
    if ((method_index == kPut || method_index == kGet) &&
        (ls.key < 0 || ls.key >= table_size_))
      throw std::out_of_range("key out of table range");
    return ls;
  }

  void step(LocalState& ls, TaggedMemory& mem, const LinState& lin, int op_index,
            StepEffects& out) const override {
    switch (ls.method) {
      case kPut: put_step(ls, mem, lin, op_index, out); return;
      case kGet: get_step(ls, mem, lin, op_index, out); return;
      case kHas: has_step(ls, mem, lin, op_index, out); return;
    }
  }

 private:
  static constexpr int kPut = 0, kGet = 1, kHas = 2;

  Address table_cell(std::int32_t key) const { return static_cast<Address>(key + 1); }

  void put_step(LocalState& ls, TaggedMemory& mem, const LinState& lin, int op_index,
                StepEffects& out) const {
    switch (ls.pc) {
      case 0: {
        // atomic { b := table[k] == 0; table[k] := v; vis(getLin()); lin() }
        MemResult cell = mem.load(table_cell(ls.key));
        ls.pending_ret = Value::boolean(cell.value == 0);
        mem.store(table_cell(ls.key), ls.val, op_index);
        out.vis_targets = lin.all_mask();
        if (!opts_.detached_put_lin) {
          out.emitted_lin = true;
          out.lin_return = ls.pending_ret;
          out.lin_readonly = false;
          ls.pc = 2;
        } else {
          ls.pc = 1;
        }
        return;
      }
      case 1:  // detached linearization point (mutant only)
        out.emitted_lin = true;
        out.lin_return = ls.pending_ret;
        out.lin_readonly = false;
        ls.pc = 2;
        return;
      case 2:
        out.emitted_ret = true;
        out.ret_value = ls.pending_ret;
        ls.done = true;
        return;
    }
  }

  void get_step(LocalState& ls, TaggedMemory& mem, const LinState& lin, int op_index,
                StepEffects& out) const {
    (void)op_index;
    switch (ls.pc) {
      case 0: {
        // atomic { v := table[k]; vis(getLin()); lin() }
        MemResult cell = mem.load(table_cell(ls.key));
        ls.pending_ret = cell.value == 0 ? Value::falsity() : Value::integer(cell.value);
        out.vis_targets = lin.all_mask();
        out.emitted_lin = true;
        out.lin_return = ls.pending_ret;
        out.lin_readonly = true;
        ls.pc = 1;
        return;
      }
      case 1:
        out.emitted_ret = true;
        out.ret_value = ls.pending_ret;
        ls.done = true;
        return;
    }
  }

  void has_step(LocalState& ls, TaggedMemory& mem, const LinState& lin, int op_index,
                StepEffects& out) const {
    (void)op_index;
    constexpr std::uint8_t kRet = 100;
    if (ls.pc == kRet) {
      out.emitted_ret = true;
      out.ret_value = ls.pending_ret;
      ls.done = true;
      return;
    }
    // atomic { tv, O := table[k]; vis(O ∩ getModLin()); maybe lin() }
    MemResult cell = mem.load(table_cell(ls.loop));
    if (opts_.per_read_vis) out.vis_targets = cell.tags & lin.modifier_mask();
    if (cell.value == ls.val) {
      ls.pending_ret = Value::truth();
      out.emitted_lin = true;
      out.lin_return = ls.pending_ret;
      out.lin_readonly = true;
      ls.pc = kRet;
      return;
    }
    ++ls.loop;
    if (ls.loop >= table_size_) {
      // Loop exit decides the result; linearize in the same step.
      ls.pending_ret = Value::falsity();
      out.emitted_lin = true;
      out.lin_return = ls.pending_ret;
      out.lin_readonly = true;
      ls.pc = kRet;
    }
  }

  std::string name_;
  int table_size_;
  ChmOptions opts_;
  WeakVisibilitySpec spec_;
  std::vector<MethodInfo> methods_;
};

// ---------------------------------------------------------------------------
// Michael-Scott queue model
// ---------------------------------------------------------------------------

struct MsqOptions {
  int size_bias = 0;          // off-by-one mutant
  bool traversal_vis = true;  // per-read visibility in size
};

// Node layout: handle = address of the data cell, handle+1 = next cell.
// head/tail are cells holding node handles. kNullAddress marks "no node".
class MsqProgram final : public ObjectProgram {
 public:
  MsqProgram(std::string name, MsqOptions opts)
      : name_(std::move(name)), opts_(opts), spec_(make_weak_spec("queue")) {
    methods_ = {{"push", false}, {"pop", false}, {"size", true}};
  }

  const std::string& name() const override { return name_; }
  const WeakVisibilitySpec& spec() const override { return spec_; }
  std::span<const MethodInfo> methods() const override { return methods_; }

  void init_memory(TaggedMemory& mem) const override {
    Address dummy_data = mem.alloc(0);
    Address dummy_next = mem.alloc(static_cast<std::int32_t>(kNullAddress));
    (void)dummy_next;
    mem.alloc(static_cast<std::int32_t>(dummy_data));  // head
    mem.alloc(static_cast<std::int32_t>(dummy_data));  // tail
  }

  LocalState make_call(int method_index, const Value& arg) const override {
    LocalState ls;
    ls.method = static_cast<std::uint8_t>(method_index);
    ls.arg = arg;
    if (method_index == kPush) {
      if (!arg.is_int()) throw std::invalid_argument("push expects a value");
      ls.key = arg.as_int();
    } else if (!arg.is_unit()) {
      throw std::invalid_argument("pop/size take no argument");
    }
    return ls;
  }

  void step(LocalState& ls, TaggedMemory& mem, const LinState& lin, int op_index,
            StepEffects& out) const override {
    switch (ls.method) {
      case kPush: push_step(ls, mem, lin, op_index, out); return;
      case kPop: pop_step(ls, mem, lin, op_index, out); return;
      case kSize: size_step(ls, mem, lin, op_index, out); return;
    }
  }

 private:
  static constexpr int kPush = 0, kPop = 1, kSize = 2;
  static constexpr Address kHeadCell = 3, kTailCell = 4;

  static Address next_cell(Address node) { return node + 1; }

  void push_step(LocalState& ls, TaggedMemory& mem, const LinState& lin, int op_index,
                 StepEffects& out) const {
    switch (ls.pc) {
      case 0: {
        // x := new Node(k, null); constructor stores tag the fields
        ls.node = mem.alloc(0);
        mem.store(ls.node, ls.key, op_index);
        Address next = mem.alloc(0);
        mem.store(next, static_cast<std::int32_t>(kNullAddress), op_index);
        ls.pc = 1;
        return;
      }
      case 1:
        ls.tail = static_cast<Address>(mem.load(kTailCell).value);
        ls.pc = 2;
        return;
      case 2:
        ls.nxt = static_cast<Address>(mem.load(next_cell(ls.tail)).value);
        ls.pc = ls.nxt == kNullAddress ? 3 : 4;
        return;
      case 3: {
        // atomic { b := cas(t.next, null, x); if b { vis(getLin()); lin() } }
        MemResult r = mem.cas(next_cell(ls.tail), static_cast<std::int32_t>(kNullAddress),
                              static_cast<std::int32_t>(ls.node), op_index);
        if (r.cas_ok) {
          out.vis_targets = lin.all_mask();
          out.emitted_lin = true;
          out.lin_return = Value::truth();
          out.lin_readonly = false;
          ls.pending_ret = Value::truth();
          ls.pc = 5;
        } else {
          ls.pc = 1;
        }
        return;
      }
      case 4:
        // lagging tail: help advance, then retry
        mem.cas(kTailCell, static_cast<std::int32_t>(ls.tail),
                static_cast<std::int32_t>(ls.nxt), op_index);
        ls.pc = 1;
        return;
      case 5:
        out.emitted_ret = true;
        out.ret_value = ls.pending_ret;
        ls.done = true;
        return;
    }
  }

  void pop_step(LocalState& ls, TaggedMemory& mem, const LinState& lin, int op_index,
                StepEffects& out) const {
    switch (ls.pc) {
      case 0:
        ls.cur = static_cast<Address>(mem.load(kHeadCell).value);
        ls.pc = 1;
        return;
      case 1:
        ls.tail = static_cast<Address>(mem.load(kTailCell).value);
        ls.pc = 2;
        return;
      case 2:
        ls.nxt = static_cast<Address>(mem.load(next_cell(ls.cur)).value);
        ls.pc = ls.cur != ls.tail ? 3 : 0;  // empty view: retry from scratch
        return;
      case 3:
        ls.data = mem.load(ls.nxt).value;
        ls.pc = 4;
        return;
      case 4: {
        // atomic { b := cas(head, h, hn); if b { vis(getLin()); lin() } }
        MemResult r = mem.cas(kHeadCell, static_cast<std::int32_t>(ls.cur),
                              static_cast<std::int32_t>(ls.nxt), op_index);
        if (r.cas_ok) {
          out.vis_targets = lin.all_mask();
          out.emitted_lin = true;
          out.lin_return = Value::integer(ls.data);
          out.lin_readonly = false;
          ls.pending_ret = Value::integer(ls.data);
          ls.pc = 5;
        } else {
          ls.pc = 0;
        }
        return;
      }
      case 5:
        out.emitted_ret = true;
        out.ret_value = ls.pending_ret;
        ls.done = true;
        return;
    }
  }

  void size_step(LocalState& ls, TaggedMemory& mem, const LinState& lin, int op_index,
                 StepEffects& out) const {
    (void)op_index;
    switch (ls.pc) {
      case 0: {
        // atomic { c, O := head; vis(O ∩ getModLin()) }: every shared read
        // of a monotonic method publishes the writers it observed.
        MemResult r = mem.load(kHeadCell);
        if (opts_.traversal_vis) out.vis_targets = r.tags & lin.modifier_mask();
        ls.cur = static_cast<Address>(r.value);
        ls.loop = opts_.size_bias;
        ls.pc = 1;
        return;
      }
      case 1: {
        // atomic { cn, O := c.next; vis(O ∩ getModLin()); maybe lin() }
        MemResult r = mem.load(next_cell(ls.cur));
        if (opts_.traversal_vis) out.vis_targets = r.tags & lin.modifier_mask();
        ls.nxt = static_cast<Address>(r.value);
        if (ls.nxt == kNullAddress) {
          ls.pending_ret = Value::integer(ls.loop);
          out.emitted_lin = true;
          out.lin_return = ls.pending_ret;
          out.lin_readonly = true;
          ls.pc = 2;
        } else {
          ++ls.loop;
          ls.cur = ls.nxt;
        }
        return;
      }
      case 2:
        out.emitted_ret = true;
        out.ret_value = ls.pending_ret;
        ls.done = true;
        return;
    }
  }

  std::string name_;
  MsqOptions opts_;
  WeakVisibilitySpec spec_;
  std::vector<MethodInfo> methods_;
};

}  // namespace

std::shared_ptr<const ObjectProgram> chm_program(int table_size) {
  return std::make_shared<ChmProgram>("chm", table_size, ChmOptions{});
}

std::shared_ptr<const ObjectProgram> msq_program() {
  return std::make_shared<MsqProgram>("msq", MsqOptions{});
}

std::vector<MutantInfo> mutant_programs(int table_size) {
  std::vector<MutantInfo> out;
  {
    ChmOptions o;
    o.per_read_vis = false;
    out.push_back({"chm-mutant-a", std::make_shared<ChmProgram>("chm-mutant-a", table_size, o),
                   {ViolationReason::ReturnNotInSpec, ViolationReason::NotMonotonic}});
  }
  {
    ChmOptions o;
    o.call_vis = false;
    out.push_back({"chm-mutant-b", std::make_shared<ChmProgram>("chm-mutant-b", table_size, o),
                   {ViolationReason::NotMonotonic}});
  }
  {
    ChmOptions o;
    o.detached_put_lin = true;
    out.push_back({"chm-mutant-c", std::make_shared<ChmProgram>("chm-mutant-c", table_size, o),
                   {ViolationReason::NotAbsolute, ViolationReason::ReturnNotInSpec}});
  }
  {
    MsqOptions o;
    o.size_bias = 1;
    out.push_back({"msq-mutant-d", std::make_shared<MsqProgram>("msq-mutant-d", o),
                   {ViolationReason::ReturnNotInSpec}});
  }
  {
    MsqOptions o;
    o.traversal_vis = false;
    out.push_back({"msq-mutant-e", std::make_shared<MsqProgram>("msq-mutant-e", o),
                   {ViolationReason::ReturnNotInSpec, ViolationReason::NotMonotonic}});
  }
  return out;
}

std::shared_ptr<const ObjectProgram> program_by_name(const std::string& name, int table_size) {
  if (name == "chm") return chm_program(table_size);
  if (name == "msq") return msq_program();
  for (auto& m : mutant_programs(table_size))
    if (m.name == name) return m.program;
  throw std::invalid_argument("unknown object model: " + name);
}

std::vector<std::string> program_names() {
  std::vector<std::string> names = {"chm", "msq"};
  for (auto& m : mutant_programs(2)) names.push_back(m.name);
  return names;
}

}  // namespace weakvis
