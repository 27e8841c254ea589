#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace faultcast::ir {

enum class Opcode {
  // control flow
  Br,
  BrCond,
  Select,
  Phi,
  Call,
  // integer arithmetic
  Add,
  Sub,
  Mul,
  Sdiv,
  Srem,
  // float arithmetic
  Fadd,
  Fsub,
  Fmul,
  Fdiv,
  // memory
  Load,
  Store,
  Getelementptr,
  // conversions
  Trunc,
  Zext,
  Sext,
  Fptrunc,
  Fpext,
  Bitcast,
  // shifts
  Shl,
  Lshr,
  Ashr,
  // comparisons and bitwise logic
  Icmp,
  Fcmp,
  And,
  Or,
  Xor,
  // program boundary
  Output,
  Halt,
};

constexpr int kOpcodeCount = static_cast<int>(Opcode::Halt) + 1;

/// Instruction group used for feature aggregation. Every opcode belongs to
/// exactly one tag; the pattern tags (Condition, Shift, Truncation) take
/// precedence over the coarse groups for the opcodes they name.
enum class GroupTag {
  ControlFlow,
  FloatArith,
  IntArith,
  Memory,
  Condition,
  Shift,
  Truncation,
};

constexpr int kGroupTagCount = 7;

GroupTag opcode_group(Opcode op);

const char* opcode_name(Opcode op);
std::optional<Opcode> opcode_from_name(std::string_view name);
const char* group_tag_name(GroupTag tag);

enum class OperandKind { I32, F64, Ptr, LabelRef };

/// Injectable width in bits; label references carry none.
int bit_width(OperandKind kind);
const char* kind_name(OperandKind kind);
std::optional<OperandKind> kind_from_name(std::string_view name);

// --- program data model ------------------------------------------------

struct RegOperand {
  std::string name;
  bool operator==(const RegOperand&) const = default;
};
struct IntImm {
  int32_t value = 0;
  bool operator==(const IntImm&) const = default;
};
struct FloatImm {
  double value = 0;
  bool operator==(const FloatImm&) const = default;
};
/// Pointer literal naming a memory address ("@12").
struct MemImm {
  uint32_t addr = 0;
  bool operator==(const MemImm&) const = default;
};
struct LabelOperand {
  std::string label;
  bool operator==(const LabelOperand&) const = default;
};

using Operand = std::variant<RegOperand, IntImm, FloatImm, MemImm, LabelOperand>;

struct Instruction {
  Opcode op = Opcode::Halt;
  std::optional<std::string> dest;  // register written, if any
  std::vector<Operand> args;
  int line = 0;  // source line, for diagnostics
  bool operator==(const Instruction& o) const {
    return op == o.op && dest == o.dest && args == o.args;
  }
};

struct Block {
  std::string label;
  std::vector<Instruction> instructions;
  bool operator==(const Block&) const = default;
};

struct IoDecl {
  std::string name;
  OperandKind kind = OperandKind::I32;
  bool operator==(const IoDecl&) const = default;
};

struct Program {
  std::vector<IoDecl> inputs;
  std::vector<IoDecl> outputs;
  std::vector<std::string> loop_headers;  // labels, declaration order
  std::vector<Block> blocks;              // blocks[0] is the entry block

  const Block* find_block(std::string_view label) const;
  bool is_loop_header(std::string_view label) const;
  bool operator==(const Program&) const = default;
};

/// Parses program text. Throws ParseError (with line/column) on syntax
/// errors, undefined labels, and duplicate block labels.
Program parse_program(std::string_view text);

/// Canonical text form; parse_program(serialize_program(p)) == p.
std::string serialize_program(const Program& p);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Structural checks beyond syntax: branch targets resolve, every register
/// is defined before use on all paths, every block ends in one terminator,
/// at least one output is declared and each declared output is emitted on
/// every path that reaches halt.
ValidationReport validate_program(const Program& p);

// Per-opcode shape used by the parser, interpreter, and tracer.
struct OpcodeShape {
  int min_args = 0;
  int max_args = 0;
  bool has_dest = false;
  bool is_terminator = false;
};
OpcodeShape opcode_shape(Opcode op);

}  // namespace faultcast::ir
