#include "faultcast/interp.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include "faultcast/error.hpp"
#include "faultcast/text.hpp"

namespace faultcast::fi {

namespace {
std::atomic<uint64_t> g_injection_count{0};
}

uint64_t injection_count() noexcept { return g_injection_count.load(std::memory_order_relaxed); }

Value Value::make_f64(double v) {
  return {ir::OperandKind::F64, std::bit_cast<uint64_t>(v)};
}

double Value::as_f64() const { return std::bit_cast<double>(bits); }

const char* trap_reason_name(TrapReason r) {
  switch (r) {
    case TrapReason::DivByZero: return "division by zero";
    case TrapReason::OutOfRangeAddress: return "out-of-range memory address";
    case TrapReason::NonFiniteFloatToInt: return "non-finite float in integer context";
  }
  return "?";
}

// --- input bindings ------------------------------------------------------

namespace {

Value parse_literal_value(std::string_view t, int line_no) {
  if (t.size() >= 2 && t[0] == '@') {
    uint32_t addr = 0;
    std::string text(t.substr(1));
    char* end = nullptr;
    unsigned long v = std::strtoul(text.c_str(), &end, 10);
    if (end != text.c_str() + text.size() || v > UINT32_MAX)
      throw ParseError("bad pointer literal '" + std::string(t) + "'", line_no);
    addr = static_cast<uint32_t>(v);
    return Value::make_ptr(addr);
  }
  std::string text(t);
  char* end = nullptr;
  if (t.find('.') != std::string_view::npos || t.find('e') != std::string_view::npos ||
      t.find('E') != std::string_view::npos) {
    double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size())
      throw ParseError("bad float literal '" + text + "'", line_no);
    return Value::make_f64(v);
  }
  long long v = std::strtoll(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size() || v < INT32_MIN || v > INT32_MAX)
    throw ParseError("bad integer literal '" + text + "'", line_no);
  return Value::make_i32(static_cast<int32_t>(v));
}

}  // namespace

InputBindings parse_bindings(std::string_view text) {
  InputBindings b;
  int line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    if (size_t h = raw.find('#'); h != std::string_view::npos) raw = raw.substr(0, h);
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'name = literal'", line_no);
    std::string_view lhs = trim(line.substr(0, eq));
    std::string_view rhs = trim(line.substr(eq + 1));
    if (lhs.empty() || rhs.empty()) throw ParseError("expected 'name = literal'", line_no);
    Value v = parse_literal_value(rhs, line_no);
    if (lhs[0] == '@') {
      std::string text_addr(lhs.substr(1));
      char* end = nullptr;
      unsigned long addr = std::strtoul(text_addr.c_str(), &end, 10);
      if (end != text_addr.c_str() + text_addr.size() || addr > UINT32_MAX)
        throw ParseError("bad cell address '" + std::string(lhs) + "'", line_no);
      b.cells[static_cast<uint32_t>(addr)] = v;
    } else {
      b.values[std::string(lhs)] = v;
    }
  }
  return b;
}

std::string serialize_bindings(const InputBindings& b) {
  std::ostringstream out;
  auto literal = [](const Value& v) -> std::string {
    switch (v.kind) {
      case ir::OperandKind::I32: return std::to_string(v.as_i32());
      case ir::OperandKind::F64: return fmt_f64_literal(v.as_f64());
      case ir::OperandKind::Ptr: return "@" + std::to_string(v.as_ptr());
      case ir::OperandKind::LabelRef: break;
    }
    return "0";
  };
  for (const auto& [name, v] : b.values) out << name << " = " << literal(v) << "\n";
  for (const auto& [addr, v] : b.cells) out << "@" << addr << " = " << literal(v) << "\n";
  return out.str();
}

// --- compiled form -------------------------------------------------------

namespace {

struct CompiledOperand {
  enum class Tag { Reg, ImmI32, ImmF64, ImmPtr, Label } tag = Tag::Reg;
  int reg = -1;
  Value imm;
  int block = -1;
  std::string imm_name;  // "#<literal>", for trace records
};

struct CompiledInstr {
  ir::Opcode op;
  int dest = -1;
  std::vector<CompiledOperand> args;
};

struct CompiledBlock {
  std::string label;
  int first = 0;
  int count = 0;
  int scc = -1;
  bool is_header = false;
};

// Iterative Tarjan SCC over block successors. Loop chunking treats a loop
// execution as "control stays within the header's SCC", which makes nested
// annotated headers part of the outer chunk.
std::vector<int> compute_sccs(const std::vector<std::vector<int>>& succ) {
  int n = static_cast<int>(succ.size());
  std::vector<int> index(n, -1), low(n, 0), scc(n, -1), stack;
  std::vector<bool> on_stack(n, false);
  int next_index = 0, next_scc = 0;

  struct Frame {
    int v;
    size_t child;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> frames{{root, 0}};
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.child < succ[f.v].size()) {
        int w = succ[f.v][f.child++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        if (low[f.v] == index[f.v]) {
          int w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            scc[w] = next_scc;
          } while (w != f.v);
          ++next_scc;
        }
        int v = f.v;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
      }
    }
  }
  return scc;
}

std::string imm_name_for(const ir::Operand& op) {
  if (const auto* i = std::get_if<ir::IntImm>(&op)) return "#" + std::to_string(i->value);
  if (const auto* f = std::get_if<ir::FloatImm>(&op)) return "#" + fmt_f64_literal(f->value);
  if (const auto* m = std::get_if<ir::MemImm>(&op)) return "#@" + std::to_string(m->addr);
  return "#?";
}

}  // namespace

struct Engine::Impl {
  std::vector<CompiledInstr> code;
  std::vector<CompiledBlock> blocks;
  std::vector<std::string> reg_names;
  std::vector<std::pair<int, ir::OperandKind>> input_regs;  // reg index, declared kind
  std::vector<std::string> output_names;
  std::map<std::string, int> reg_index;
  std::vector<int> block_of_instr;

  // --- per-run state ---
  std::vector<Value> regs;
  std::vector<Value> mem;
  std::vector<uint32_t> mem_epoch;
  uint32_t epoch = 0;
  uint32_t mem_cells = 0;

  std::vector<Value> outputs;
  uint64_t steps = 0;
  bool trapped = false;
  TrapReason trap_reason = TrapReason::DivByZero;

  // chunking state
  bool chunking = false;
  bool per_iteration = false;
  bool in_loop = false;
  int cur_scc = -1;
  int cur_header = -1;
  bool pending_chunk = true;
  uint64_t next_chunk_id = 0;
  const std::vector<trace::TraceSink*>* sinks = nullptr;

  int reg_of(const std::string& name) {
    auto it = reg_index.find(name);
    if (it != reg_index.end()) return it->second;
    int idx = static_cast<int>(reg_names.size());
    reg_index.emplace(name, idx);
    reg_names.push_back(name);
    return idx;
  }

  void compile(const ir::Program& p);

  // coercions; on failure set trap state and return false
  bool to_i32(const Value& v, int32_t& out) {
    switch (v.kind) {
      case ir::OperandKind::I32:
        out = v.as_i32();
        return true;
      case ir::OperandKind::Ptr:
        out = static_cast<int32_t>(v.as_ptr());
        return true;
      case ir::OperandKind::F64: {
        double d = v.as_f64();
        if (!std::isfinite(d)) {
          trap(TrapReason::NonFiniteFloatToInt);
          return false;
        }
        double t = std::trunc(d);
        double wrapped = std::fmod(t, 4294967296.0);
        if (wrapped < 0) wrapped += 4294967296.0;
        out = static_cast<int32_t>(static_cast<uint32_t>(wrapped));
        return true;
      }
      default:
        out = 0;
        return true;
    }
  }

  bool to_ptr(const Value& v, uint32_t& out) {
    int32_t i;
    if (!to_i32(v, i)) return false;
    out = static_cast<uint32_t>(i);
    return true;
  }

  double to_f64(const Value& v) {
    switch (v.kind) {
      case ir::OperandKind::F64: return v.as_f64();
      case ir::OperandKind::I32: return static_cast<double>(v.as_i32());
      case ir::OperandKind::Ptr: return static_cast<double>(v.as_ptr());
      default: return 0;
    }
  }

  void trap(TrapReason r) {
    trapped = true;
    trap_reason = r;
  }

  Value mem_read(uint32_t addr) const {
    return mem_epoch[addr] == epoch ? mem[addr] : Value::make_i32(0);
  }
  void mem_write(uint32_t addr, const Value& v) {
    mem[addr] = v;
    mem_epoch[addr] = epoch;
  }

  void enter_block(int b) {
    if (!chunking) return;
    const CompiledBlock& blk = blocks[b];
    if (in_loop) {
      if (blk.scc == cur_scc) {
        if (per_iteration && b == cur_header) pending_chunk = true;
      } else if (blk.is_header) {
        pending_chunk = true;
        cur_scc = blk.scc;
        cur_header = b;
      } else {
        in_loop = false;
        pending_chunk = true;
      }
    } else if (blk.is_header) {
      in_loop = true;
      cur_scc = blk.scc;
      cur_header = b;
      pending_chunk = true;
    }
  }

  void emit_record(trace::InstructionRecord&& rec) {
    if (pending_chunk) {
      for (auto* s : *sinks) s->on_chunk_start(next_chunk_id);
      ++next_chunk_id;
      pending_chunk = false;
    }
    for (auto* s : *sinks) s->on_record(rec);
  }

  ExecutionOutcome run(const InputBindings& in, const ExecOptions& opts,
                       const std::vector<trace::TraceSink*>& sink_list,
                       const InjectionPoint* inject);
};

void Engine::Impl::compile(const ir::Program& p) {
  std::map<std::string, int> block_index;
  for (size_t i = 0; i < p.blocks.size(); ++i) block_index[p.blocks[i].label] = static_cast<int>(i);

  std::vector<std::vector<int>> succ(p.blocks.size());
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    const auto& term = p.blocks[i].instructions.back();
    for (const auto& a : term.args)
      if (const auto* l = std::get_if<ir::LabelOperand>(&a))
        succ[i].push_back(block_index.at(l->label));
  }
  std::vector<int> scc = compute_sccs(succ);

  for (size_t i = 0; i < p.blocks.size(); ++i) {
    CompiledBlock cb;
    cb.label = p.blocks[i].label;
    cb.first = static_cast<int>(code.size());
    cb.count = static_cast<int>(p.blocks[i].instructions.size());
    cb.scc = scc[i];
    cb.is_header = p.is_loop_header(cb.label);
    blocks.push_back(cb);
    for (const auto& ins : p.blocks[i].instructions) {
      CompiledInstr ci;
      ci.op = ins.op;
      if (ins.dest) ci.dest = reg_of(*ins.dest);
      for (const auto& a : ins.args) {
        CompiledOperand co;
        if (const auto* r = std::get_if<ir::RegOperand>(&a)) {
          co.tag = CompiledOperand::Tag::Reg;
          co.reg = reg_of(r->name);
        } else if (const auto* iv = std::get_if<ir::IntImm>(&a)) {
          co.tag = CompiledOperand::Tag::ImmI32;
          co.imm = Value::make_i32(iv->value);
          co.imm_name = imm_name_for(a);
        } else if (const auto* fv = std::get_if<ir::FloatImm>(&a)) {
          co.tag = CompiledOperand::Tag::ImmF64;
          co.imm = Value::make_f64(fv->value);
          co.imm_name = imm_name_for(a);
        } else if (const auto* mv = std::get_if<ir::MemImm>(&a)) {
          co.tag = CompiledOperand::Tag::ImmPtr;
          co.imm = Value::make_ptr(mv->addr);
          co.imm_name = imm_name_for(a);
        } else if (const auto* lv = std::get_if<ir::LabelOperand>(&a)) {
          co.tag = CompiledOperand::Tag::Label;
          co.block = block_index.at(lv->label);
        }
        ci.args.push_back(std::move(co));
      }
      block_of_instr.push_back(static_cast<int>(i));
      code.push_back(std::move(ci));
    }
  }

  for (const auto& d : p.inputs) input_regs.emplace_back(reg_of(d.name), d.kind);
  for (const auto& d : p.outputs) output_names.push_back(d.name);
}

namespace {

// Injection target of one operand slot, resolved against live state.
struct SlotTarget {
  enum class Kind { RegIn, CellIn, ImmIn, RegOut, CellOut } kind;
  int reg = -1;
  uint32_t addr = 0;
  int arg = -1;
  int width = 32;
};

uint64_t width_mask(int width) {
  return width >= 64 ? ~uint64_t{0} : ((uint64_t{1} << width) - 1);
}

}  // namespace

ExecutionOutcome Engine::Impl::run(const InputBindings& in, const ExecOptions& opts,
                                   const std::vector<trace::TraceSink*>& sink_list,
                                   const InjectionPoint* inject) {
  // bind inputs
  regs.assign(reg_names.size(), Value::make_i32(0));
  {
    size_t bound = 0;
    for (const auto& [reg, kind] : input_regs) {
      auto it = in.values.find(reg_names[reg]);
      if (it == in.values.end())
        throw UsageError("unbound input '" + reg_names[reg] + "'");
      if (it->second.kind != kind)
        throw UsageError("input '" + reg_names[reg] + "' expects " +
                         std::string(ir::kind_name(kind)));
      regs[reg] = it->second;
      ++bound;
    }
    if (bound != in.values.size())
      for (const auto& [name, v] : in.values) {
        (void)v;
        bool known = false;
        for (const auto& [reg, kind] : input_regs)
          if (reg_names[reg] == name) known = true;
        if (!known) throw UsageError("binding for undeclared input '" + name + "'");
      }
  }

  if (mem_cells != opts.memory_cells || mem.empty()) {
    mem_cells = opts.memory_cells;
    mem.assign(mem_cells, Value::make_i32(0));
    mem_epoch.assign(mem_cells, 0);
    epoch = 0;
  }
  ++epoch;
  for (const auto& [addr, v] : in.cells) {
    if (addr >= mem_cells) throw UsageError("cell binding @" + std::to_string(addr) + " out of range");
    mem_write(addr, v);
  }

  outputs.clear();
  steps = 0;
  trapped = false;
  sinks = &sink_list;
  chunking = !sink_list.empty();
  per_iteration = opts.chunk_per_iteration;
  in_loop = false;
  cur_scc = -1;
  cur_header = -1;
  pending_chunk = true;
  next_chunk_id = 0;

  if (chunking)
    for (auto* s : sink_list) s->on_outputs(output_names);

  const bool want_inject = inject != nullptr;
  bool inject_pending = want_inject;
  if (want_inject) g_injection_count.fetch_add(1, std::memory_order_relaxed);

  int pc = blocks[0].first;
  int pc_end = blocks[0].first + blocks[0].count;
  enter_block(0);

  bool halted = false;
  while (!halted && !trapped && steps < opts.step_budget) {
    const CompiledInstr& ins = code[pc];

    const bool inject_here = inject_pending && steps == inject->dyn_index;
    int inject_in_slot = -1, inject_out_slot = -1;
    if (inject_here) {
      if (ins.op == ir::Opcode::Output || ins.op == ir::Opcode::Halt)
        throw UsageError("injection point targets a non-injectable instruction");
      inject_pending = false;
      // Count this instruction's operand slots (inputs then output) without
      // executing it; matches the golden trace's record layout.
      int n_in = 0;
      bool has_out = ins.dest >= 0 || ins.op == ir::Opcode::Store;
      for (const auto& a : ins.args)
        if (a.tag != CompiledOperand::Tag::Label) ++n_in;
      if (ins.op == ir::Opcode::Load) ++n_in;  // the memory cell read
      int n_slots = n_in + (has_out ? 1 : 0);
      if (inject->operand_slot < 0 || inject->operand_slot >= n_slots)
        throw UsageError("injection operand slot out of range");
      if (inject->operand_slot < n_in)
        inject_in_slot = inject->operand_slot;
      else
        inject_out_slot = inject->operand_slot;
    }

    // Immediate overrides for input-slot flips on immediates (transient).
    Value imm_override;
    int imm_override_arg = -1;

    // Apply an input flip before the operand is consumed.
    auto flip_input = [&](int slot_of_cell_if_load) -> bool {
      // Enumerate input slots in record order, flip the chosen one.
      int slot = 0;
      for (size_t a = 0; a < ins.args.size(); ++a) {
        const auto& arg = ins.args[a];
        if (arg.tag == CompiledOperand::Tag::Label) continue;
        if (slot == inject_in_slot) {
          uint64_t bit = uint64_t{1} << inject->bit_index;
          if (arg.tag == CompiledOperand::Tag::Reg) {
            Value& v = regs[arg.reg];
            if (inject->bit_index >= v.width())
              throw UsageError("injection bit index out of range");
            v.bits = (v.bits ^ bit) & width_mask(v.width());
          } else {
            Value v = arg.imm;
            if (inject->bit_index >= v.width())
              throw UsageError("injection bit index out of range");
            v.bits = (v.bits ^ bit) & width_mask(v.width());
            imm_override = v;
            imm_override_arg = static_cast<int>(a);
          }
          return true;
        }
        ++slot;
      }
      // Remaining input slot is the implicit memory cell of a load.
      if (ins.op == ir::Opcode::Load && slot == inject_in_slot) {
        (void)slot_of_cell_if_load;
        uint32_t addr;
        Value pv = ins.args[0].tag == CompiledOperand::Tag::Reg ? regs[ins.args[0].reg]
                                                                : ins.args[0].imm;
        if (!to_ptr(pv, addr)) return false;
        if (addr >= mem_cells) {
          trap(TrapReason::OutOfRangeAddress);
          return false;
        }
        Value cell = mem_read(addr);
        if (inject->bit_index >= cell.width())
          throw UsageError("injection bit index out of range");
        cell.bits = (cell.bits ^ (uint64_t{1} << inject->bit_index)) & width_mask(cell.width());
        mem_write(addr, cell);
        return true;
      }
      return true;
    };
    if (inject_in_slot >= 0) {
      if (!flip_input(0)) break;  // flip path trapped
    }

    auto arg_value = [&](size_t idx) -> Value {
      const auto& arg = ins.args[idx];
      if (static_cast<int>(idx) == imm_override_arg) return imm_override;
      return arg.tag == CompiledOperand::Tag::Reg ? regs[arg.reg] : arg.imm;
    };
    auto arg_name = [&](size_t idx) -> std::string {
      const auto& arg = ins.args[idx];
      return arg.tag == CompiledOperand::Tag::Reg ? "%" + reg_names[arg.reg] : arg.imm_name;
    };

    trace::InstructionRecord rec;
    const bool tracing = chunking;
    if (tracing) {
      rec.seq = steps;
      rec.op = ins.op;
    }
    auto record_in = [&](const std::string& name, const Value& v) {
      if (!tracing) return;
      rec.operands.push_back({name, v.kind, v.width(), v.bits & width_mask(v.width()),
                              trace::Role::Input});
    };
    auto record_out = [&](const std::string& name, const Value& v) {
      if (!tracing) return;
      rec.operands.push_back({name, v.kind, v.width(), v.bits & width_mask(v.width()),
                              trace::Role::Output});
    };

    // Produced output target, for post-execution flips.
    int out_reg = -1;
    int64_t out_cell = -1;

    int next_block = -1;
    switch (ins.op) {
      case ir::Opcode::Br: {
        next_block = ins.args[0].block;
        break;
      }
      case ir::Opcode::BrCond: {
        int32_t c;
        Value cv = arg_value(0);
        if (!to_i32(cv, c)) break;
        record_in(arg_name(0), Value::make_i32(c));
        next_block = c != 0 ? ins.args[1].block : ins.args[2].block;
        break;
      }
      case ir::Opcode::Select: {
        int32_t c;
        Value cv = arg_value(0);
        if (!to_i32(cv, c)) break;
        Value a = arg_value(1), b = arg_value(2);
        record_in(arg_name(0), Value::make_i32(c));
        record_in(arg_name(1), a);
        record_in(arg_name(2), b);
        Value r = c != 0 ? a : b;
        regs[ins.dest] = r;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], r);
        break;
      }
      case ir::Opcode::Phi:
      case ir::Opcode::Call: {
        // phi merges a value, call models an opaque routine; both pass the
        // first operand through unchanged.
        Value r = arg_value(0);
        for (size_t a = 0; a < ins.args.size(); ++a) record_in(arg_name(a), arg_value(a));
        regs[ins.dest] = r;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], r);
        break;
      }
      case ir::Opcode::Add:
      case ir::Opcode::Sub:
      case ir::Opcode::Mul:
      case ir::Opcode::Sdiv:
      case ir::Opcode::Srem: {
        int32_t a, b;
        if (!to_i32(arg_value(0), a)) break;
        if (!to_i32(arg_value(1), b)) break;
        record_in(arg_name(0), Value::make_i32(a));
        record_in(arg_name(1), Value::make_i32(b));
        uint32_t ua = static_cast<uint32_t>(a), ub = static_cast<uint32_t>(b);
        int32_t r = 0;
        switch (ins.op) {
          case ir::Opcode::Add: r = static_cast<int32_t>(ua + ub); break;
          case ir::Opcode::Sub: r = static_cast<int32_t>(ua - ub); break;
          case ir::Opcode::Mul: r = static_cast<int32_t>(ua * ub); break;
          case ir::Opcode::Sdiv:
          case ir::Opcode::Srem: {
            if (b == 0) {
              trap(TrapReason::DivByZero);
              break;
            }
            // INT32_MIN / -1 wraps rather than introducing a fourth trap kind.
            if (a == INT32_MIN && b == -1) {
              r = ins.op == ir::Opcode::Sdiv ? INT32_MIN : 0;
            } else {
              r = ins.op == ir::Opcode::Sdiv ? a / b : a % b;
            }
            break;
          }
          default: break;
        }
        if (trapped) break;
        Value rv = Value::make_i32(r);
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::Fadd:
      case ir::Opcode::Fsub:
      case ir::Opcode::Fmul:
      case ir::Opcode::Fdiv: {
        double a = to_f64(arg_value(0)), b = to_f64(arg_value(1));
        record_in(arg_name(0), Value::make_f64(a));
        record_in(arg_name(1), Value::make_f64(b));
        double r = 0;
        switch (ins.op) {
          case ir::Opcode::Fadd: r = a + b; break;
          case ir::Opcode::Fsub: r = a - b; break;
          case ir::Opcode::Fmul: r = a * b; break;
          case ir::Opcode::Fdiv: r = a / b; break;
          default: break;
        }
        Value rv = Value::make_f64(r);
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::Load: {
        uint32_t addr;
        if (!to_ptr(arg_value(0), addr)) break;
        record_in(arg_name(0), Value::make_ptr(addr));
        if (addr >= mem_cells) {
          trap(TrapReason::OutOfRangeAddress);
          break;
        }
        Value cell = mem_read(addr);
        record_in("@" + hex32(addr), cell);
        regs[ins.dest] = cell;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], cell);
        break;
      }
      case ir::Opcode::Store: {
        Value v = arg_value(0);
        uint32_t addr;
        if (!to_ptr(arg_value(1), addr)) break;
        record_in(arg_name(0), v);
        record_in(arg_name(1), Value::make_ptr(addr));
        if (addr >= mem_cells) {
          trap(TrapReason::OutOfRangeAddress);
          break;
        }
        mem_write(addr, v);
        out_cell = addr;
        record_out("@" + hex32(addr), v);
        break;
      }
      case ir::Opcode::Getelementptr: {
        uint32_t p;
        int32_t i;
        if (!to_ptr(arg_value(0), p)) break;
        if (!to_i32(arg_value(1), i)) break;
        record_in(arg_name(0), Value::make_ptr(p));
        record_in(arg_name(1), Value::make_i32(i));
        Value rv = Value::make_ptr(p + static_cast<uint32_t>(i));
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::Trunc: {
        // float to integer; the trap path for corrupted non-finite floats
        double a = to_f64(arg_value(0));
        record_in(arg_name(0), Value::make_f64(a));
        int32_t r;
        if (!to_i32(Value::make_f64(a), r)) break;
        if (tracing) {
          rec.aux.srcw = 64;
          rec.aux.dstw = 32;
        }
        Value rv = Value::make_i32(r);
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::Zext:
      case ir::Opcode::Sext: {
        int32_t a;
        if (!to_i32(arg_value(0), a)) break;
        record_in(arg_name(0), Value::make_i32(a));
        double r = ins.op == ir::Opcode::Zext
                       ? static_cast<double>(static_cast<uint32_t>(a))
                       : static_cast<double>(a);
        if (tracing) {
          rec.aux.srcw = 32;
          rec.aux.dstw = 64;
        }
        Value rv = Value::make_f64(r);
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::Fptrunc: {
        double a = to_f64(arg_value(0));
        record_in(arg_name(0), Value::make_f64(a));
        double r = static_cast<double>(static_cast<float>(a));
        if (tracing) {
          rec.aux.srcw = 64;
          rec.aux.dstw = 32;
        }
        Value rv = Value::make_f64(r);
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::Fpext: {
        double a = to_f64(arg_value(0));
        record_in(arg_name(0), Value::make_f64(a));
        if (tracing) {
          rec.aux.srcw = 64;
          rec.aux.dstw = 64;
        }
        Value rv = Value::make_f64(a);
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::Bitcast: {
        // reinterpret between the 32-bit kinds: ptr becomes i32, anything
        // else becomes ptr
        Value a = arg_value(0);
        Value src, rv;
        if (a.kind == ir::OperandKind::Ptr) {
          src = a;
          rv = Value::make_i32(static_cast<int32_t>(a.as_ptr()));
        } else {
          int32_t i;
          if (!to_i32(a, i)) break;
          src = Value::make_i32(i);
          rv = Value::make_ptr(static_cast<uint32_t>(i));
        }
        record_in(arg_name(0), src);
        if (tracing) {
          rec.aux.srcw = 32;
          rec.aux.dstw = 32;
        }
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::Shl:
      case ir::Opcode::Lshr:
      case ir::Opcode::Ashr: {
        int32_t a, s;
        if (!to_i32(arg_value(0), a)) break;
        if (!to_i32(arg_value(1), s)) break;
        record_in(arg_name(0), Value::make_i32(a));
        record_in(arg_name(1), Value::make_i32(s));
        uint32_t ua = static_cast<uint32_t>(a);
        uint32_t amount = static_cast<uint32_t>(s);
        uint32_t eff = amount > 32 ? 32 : amount;
        int32_t r;
        if (eff >= 32) {
          r = ins.op == ir::Opcode::Ashr ? (a < 0 ? -1 : 0) : 0;
        } else {
          switch (ins.op) {
            case ir::Opcode::Shl: r = static_cast<int32_t>(ua << eff); break;
            case ir::Opcode::Lshr: r = static_cast<int32_t>(ua >> eff); break;
            default: r = a >> eff; break;  // C++20 arithmetic shift
          }
        }
        if (tracing) rec.aux.shamt = eff;
        Value rv = Value::make_i32(r);
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::Icmp: {
        int32_t a, b;
        if (!to_i32(arg_value(0), a)) break;
        if (!to_i32(arg_value(1), b)) break;
        record_in(arg_name(0), Value::make_i32(a));
        record_in(arg_name(1), Value::make_i32(b));
        Value rv = Value::make_i32(a < b ? 1 : 0);
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::Fcmp: {
        double a = to_f64(arg_value(0)), b = to_f64(arg_value(1));
        record_in(arg_name(0), Value::make_f64(a));
        record_in(arg_name(1), Value::make_f64(b));
        Value rv = Value::make_i32(a < b ? 1 : 0);  // ordered; NaN compares false
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::And:
      case ir::Opcode::Or:
      case ir::Opcode::Xor: {
        int32_t a, b;
        if (!to_i32(arg_value(0), a)) break;
        if (!to_i32(arg_value(1), b)) break;
        record_in(arg_name(0), Value::make_i32(a));
        record_in(arg_name(1), Value::make_i32(b));
        uint32_t ua = static_cast<uint32_t>(a), ub = static_cast<uint32_t>(b);
        uint32_t r = ins.op == ir::Opcode::And ? (ua & ub)
                     : ins.op == ir::Opcode::Or ? (ua | ub)
                                                : (ua ^ ub);
        Value rv = Value::make_i32(static_cast<int32_t>(r));
        regs[ins.dest] = rv;
        out_reg = ins.dest;
        record_out("%" + reg_names[ins.dest], rv);
        break;
      }
      case ir::Opcode::Output: {
        Value v = arg_value(0);
        record_in(arg_name(0), v);
        outputs.push_back(v);
        break;
      }
      case ir::Opcode::Halt: {
        halted = true;
        break;
      }
    }

    if (trapped) break;

    // Post-execution output flip.
    if (inject_out_slot >= 0) {
      uint64_t bit = uint64_t{1} << inject->bit_index;
      if (out_reg >= 0) {
        Value& v = regs[out_reg];
        if (inject->bit_index >= v.width()) throw UsageError("injection bit index out of range");
        v.bits = (v.bits ^ bit) & width_mask(v.width());
      } else if (out_cell >= 0) {
        Value v = mem_read(static_cast<uint32_t>(out_cell));
        if (inject->bit_index >= v.width()) throw UsageError("injection bit index out of range");
        v.bits = (v.bits ^ bit) & width_mask(v.width());
        mem_write(static_cast<uint32_t>(out_cell), v);
      }
    }

    if (tracing) emit_record(std::move(rec));
    ++steps;

    if (halted) break;
    if (next_block >= 0) {
      enter_block(next_block);
      pc = blocks[next_block].first;
      pc_end = pc + blocks[next_block].count;
    } else {
      ++pc;
      if (pc == pc_end) break;  // unreachable for validated programs
    }
  }

  ExecutionOutcome out;
  out.steps = steps;
  if (halted) {
    out.status = ExecStatus::Completed;
    out.outputs = outputs;
  } else if (trapped) {
    out.status = ExecStatus::Trapped;
    out.trap = trap_reason;
  } else {
    out.status = ExecStatus::Hung;
  }
  sinks = nullptr;
  return out;
}

Engine::Engine(const ir::Program& p) : impl_(std::make_unique<Impl>()) {
  auto report = ir::validate_program(p);
  if (!report.ok()) throw UsageError("invalid program: " + report.violations.front());
  impl_->compile(p);
}

Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

ExecutionOutcome Engine::run(const InputBindings& in, const ExecOptions& opts,
                             const std::vector<trace::TraceSink*>& sinks,
                             const InjectionPoint* inject) {
  return impl_->run(in, opts, sinks, inject);
}

ExecutionOutcome execute(const ir::Program& p, const InputBindings& in, const ExecOptions& opts,
                         const std::vector<trace::TraceSink*>& sinks) {
  Engine engine(p);
  return engine.run(in, opts, sinks);
}

}  // namespace faultcast::fi
