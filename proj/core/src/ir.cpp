#include "faultcast/ir.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "faultcast/error.hpp"
#include "faultcast/text.hpp"

namespace faultcast::ir {

namespace {

struct OpcodeInfo {
  Opcode op;
  const char* name;
  GroupTag tag;
  OpcodeShape shape;
};

// min/max args, has_dest, is_terminator
constexpr OpcodeInfo kOpcodes[] = {
    {Opcode::Br, "br", GroupTag::ControlFlow, {1, 1, false, true}},
    {Opcode::BrCond, "br_cond", GroupTag::ControlFlow, {3, 3, false, true}},
    {Opcode::Select, "select", GroupTag::ControlFlow, {3, 3, true, false}},
    {Opcode::Phi, "phi", GroupTag::ControlFlow, {1, 1, true, false}},
    {Opcode::Call, "call", GroupTag::ControlFlow, {1, 3, true, false}},
    {Opcode::Add, "add", GroupTag::IntArith, {2, 2, true, false}},
    {Opcode::Sub, "sub", GroupTag::IntArith, {2, 2, true, false}},
    {Opcode::Mul, "mul", GroupTag::IntArith, {2, 2, true, false}},
    {Opcode::Sdiv, "sdiv", GroupTag::IntArith, {2, 2, true, false}},
    {Opcode::Srem, "srem", GroupTag::IntArith, {2, 2, true, false}},
    {Opcode::Fadd, "fadd", GroupTag::FloatArith, {2, 2, true, false}},
    {Opcode::Fsub, "fsub", GroupTag::FloatArith, {2, 2, true, false}},
    {Opcode::Fmul, "fmul", GroupTag::FloatArith, {2, 2, true, false}},
    {Opcode::Fdiv, "fdiv", GroupTag::FloatArith, {2, 2, true, false}},
    {Opcode::Load, "load", GroupTag::Memory, {1, 1, true, false}},
    {Opcode::Store, "store", GroupTag::Memory, {2, 2, false, false}},
    {Opcode::Getelementptr, "getelementptr", GroupTag::Memory, {2, 2, true, false}},
    {Opcode::Trunc, "trunc", GroupTag::Truncation, {1, 1, true, false}},
    {Opcode::Zext, "zext", GroupTag::Truncation, {1, 1, true, false}},
    {Opcode::Sext, "sext", GroupTag::Truncation, {1, 1, true, false}},
    {Opcode::Fptrunc, "fptrunc", GroupTag::Truncation, {1, 1, true, false}},
    {Opcode::Fpext, "fpext", GroupTag::Truncation, {1, 1, true, false}},
    {Opcode::Bitcast, "bitcast", GroupTag::Truncation, {1, 1, true, false}},
    {Opcode::Shl, "shl", GroupTag::Shift, {2, 2, true, false}},
    {Opcode::Lshr, "lshr", GroupTag::Shift, {2, 2, true, false}},
    {Opcode::Ashr, "ashr", GroupTag::Shift, {2, 2, true, false}},
    {Opcode::Icmp, "icmp", GroupTag::Condition, {2, 2, true, false}},
    {Opcode::Fcmp, "fcmp", GroupTag::Condition, {2, 2, true, false}},
    {Opcode::And, "and", GroupTag::Condition, {2, 2, true, false}},
    {Opcode::Or, "or", GroupTag::Condition, {2, 2, true, false}},
    {Opcode::Xor, "xor", GroupTag::Condition, {2, 2, true, false}},
    {Opcode::Output, "output", GroupTag::ControlFlow, {1, 1, false, false}},
    {Opcode::Halt, "halt", GroupTag::ControlFlow, {0, 0, false, true}},
};

const OpcodeInfo& info(Opcode op) { return kOpcodes[static_cast<int>(op)]; }

}  // namespace

GroupTag opcode_group(Opcode op) { return info(op).tag; }
const char* opcode_name(Opcode op) { return info(op).name; }
OpcodeShape opcode_shape(Opcode op) { return info(op).shape; }

std::optional<Opcode> opcode_from_name(std::string_view name) {
  for (const auto& oi : kOpcodes)
    if (name == oi.name) return oi.op;
  return std::nullopt;
}

const char* group_tag_name(GroupTag tag) {
  switch (tag) {
    case GroupTag::ControlFlow: return "cfi";
    case GroupTag::FloatArith: return "fpi";
    case GroupTag::IntArith: return "ii";
    case GroupTag::Memory: return "mi";
    case GroupTag::Condition: return "condition";
    case GroupTag::Shift: return "shift";
    case GroupTag::Truncation: return "truncation";
  }
  return "?";
}

int bit_width(OperandKind kind) {
  switch (kind) {
    case OperandKind::I32: return 32;
    case OperandKind::F64: return 64;
    case OperandKind::Ptr: return 32;
    case OperandKind::LabelRef: return 0;
  }
  return 0;
}

const char* kind_name(OperandKind kind) {
  switch (kind) {
    case OperandKind::I32: return "i32";
    case OperandKind::F64: return "f64";
    case OperandKind::Ptr: return "ptr";
    case OperandKind::LabelRef: return "label";
  }
  return "?";
}

std::optional<OperandKind> kind_from_name(std::string_view name) {
  if (name == "i32") return OperandKind::I32;
  if (name == "f64") return OperandKind::F64;
  if (name == "ptr") return OperandKind::Ptr;
  if (name == "label") return OperandKind::LabelRef;
  return std::nullopt;
}

const Block* Program::find_block(std::string_view label) const {
  for (const auto& b : blocks)
    if (b.label == label) return &b;
  return nullptr;
}

bool Program::is_loop_header(std::string_view label) const {
  return std::find(loop_headers.begin(), loop_headers.end(), label) != loop_headers.end();
}

// --- parsing -------------------------------------------------------------

namespace {

struct Token {
  std::string_view text;
  int col;  // 1-based
};

bool is_ident(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

// Commas act as token separators; the canonical form uses ", " between
// operands but the parser does not require it.
std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == ' ' || c == '\t' || c == ',' || c == '\r') {
      ++i;
      continue;
    }
    size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != ',' &&
           line[i] != '\r')
      ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

Operand parse_operand(const Token& tok, int line_no) {
  std::string_view t = tok.text;
  if (t.size() >= 2 && t[0] == '%') {
    std::string_view name = t.substr(1);
    if (!is_ident(name)) throw ParseError("bad register name '" + std::string(t) + "'", line_no, tok.col);
    return RegOperand{std::string(name)};
  }
  if (t.size() >= 2 && t[0] == '$') {
    std::string_view label = t.substr(1);
    if (!is_ident(label)) throw ParseError("bad label '" + std::string(t) + "'", line_no, tok.col);
    return LabelOperand{std::string(label)};
  }
  if (t.size() >= 2 && t[0] == '@') {
    uint32_t addr = 0;
    auto [ptr, ec] = std::from_chars(t.data() + 1, t.data() + t.size(), addr);
    if (ec != std::errc() || ptr != t.data() + t.size())
      throw ParseError("bad memory literal '" + std::string(t) + "'", line_no, tok.col);
    return MemImm{addr};
  }
  bool looks_float = t.find('.') != std::string_view::npos ||
                     t.find('e') != std::string_view::npos ||
                     t.find('E') != std::string_view::npos;
  std::string text(t);
  char* end = nullptr;
  if (looks_float) {
    double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size())
      throw ParseError("bad float literal '" + text + "'", line_no, tok.col);
    return FloatImm{v};
  }
  long long v = std::strtoll(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size() || v < INT32_MIN || v > INT32_MAX)
    throw ParseError("bad integer literal '" + text + "'", line_no, tok.col);
  return IntImm{static_cast<int32_t>(v)};
}

Instruction parse_instruction(const std::vector<Token>& toks, int line_no) {
  Instruction ins;
  ins.line = line_no;
  size_t i = 0;

  if (toks[0].text.size() >= 1 && toks[0].text[0] == '%') {
    // "%dest = op args"
    std::string_view name = toks[0].text.substr(1);
    if (!is_ident(name)) throw ParseError("bad register name '" + std::string(toks[0].text) + "'", line_no, toks[0].col);
    if (toks.size() < 3 || toks[1].text != "=")
      throw ParseError("expected '=' after destination register", line_no,
                       toks.size() > 1 ? toks[1].col : toks[0].col);
    ins.dest = std::string(name);
    i = 2;
  }

  const Token& op_tok = toks[i];
  auto op = opcode_from_name(op_tok.text);
  if (!op) throw ParseError("unknown opcode '" + std::string(op_tok.text) + "'", line_no, op_tok.col);
  ins.op = *op;
  const OpcodeShape shape = opcode_shape(*op);
  if (shape.has_dest && !ins.dest)
    throw ParseError(std::string(opcode_name(*op)) + " requires a destination register", line_no, op_tok.col);
  if (!shape.has_dest && ins.dest)
    throw ParseError(std::string(opcode_name(*op)) + " does not produce a value", line_no, toks[0].col);
  ++i;

  for (; i < toks.size(); ++i) ins.args.push_back(parse_operand(toks[i], line_no));

  int argc = static_cast<int>(ins.args.size());
  if (argc < shape.min_args || argc > shape.max_args)
    throw ParseError(std::string(opcode_name(*op)) + ": expected " +
                         (shape.min_args == shape.max_args
                              ? std::to_string(shape.min_args)
                              : std::to_string(shape.min_args) + ".." + std::to_string(shape.max_args)) +
                         " operands, got " + std::to_string(argc),
                     line_no, op_tok.col);

  // Label operands are legal only where a branch expects them.
  for (size_t a = 0; a < ins.args.size(); ++a) {
    bool is_label = std::holds_alternative<LabelOperand>(ins.args[a]);
    bool want_label = (ins.op == Opcode::Br && a == 0) ||
                      (ins.op == Opcode::BrCond && (a == 1 || a == 2));
    if (is_label != want_label)
      throw ParseError(is_label ? "unexpected label operand" : "expected label operand",
                       line_no, op_tok.col);
  }
  return ins;
}

}  // namespace

Program parse_program(std::string_view text) {
  Program p;
  std::set<std::string> block_labels;
  std::set<std::string> input_names;
  // label uses to resolve once all blocks are known: (label, line, col)
  std::vector<std::tuple<std::string, int, int>> label_uses;

  int line_no = 0;
  size_t pos = 0;
  bool in_blocks = false;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view raw =
        text.substr(pos, (eol == std::string_view::npos ? text.size() : eol) - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    if (size_t sc = raw.find(';'); sc != std::string_view::npos) raw = raw.substr(0, sc);
    std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line[0] == '.') {
      if (in_blocks) throw ParseError("declaration after first block", line_no);
      auto toks = tokenize(line);
      std::string_view kw = toks[0].text;
      if (kw == ".input" || kw == ".output") {
        if (toks.size() != 3) throw ParseError(std::string(kw) + " expects a name and a kind", line_no);
        if (!is_ident(toks[1].text)) throw ParseError("bad name '" + std::string(toks[1].text) + "'", line_no, toks[1].col);
        auto kind = kind_from_name(toks[2].text);
        if (!kind || *kind == OperandKind::LabelRef)
          throw ParseError("bad kind '" + std::string(toks[2].text) + "'", line_no, toks[2].col);
        IoDecl decl{std::string(toks[1].text), *kind};
        if (kw == ".input") {
          if (!input_names.insert(decl.name).second)
            throw ParseError("duplicate input '" + decl.name + "'", line_no, toks[1].col);
          p.inputs.push_back(decl);
        } else {
          for (const auto& d : p.outputs)
            if (d.name == decl.name)
              throw ParseError("duplicate output '" + decl.name + "'", line_no, toks[1].col);
          p.outputs.push_back(decl);
        }
      } else if (kw == ".loop") {
        if (toks.size() != 2 || !is_ident(toks[1].text))
          throw ParseError(".loop expects a label", line_no);
        std::string label(toks[1].text);
        label_uses.emplace_back(label, line_no, toks[1].col);
        p.loop_headers.push_back(label);
      } else {
        throw ParseError("unknown declaration '" + std::string(kw) + "'", line_no);
      }
      continue;
    }

    if (line.back() == ':') {
      std::string_view label = line.substr(0, line.size() - 1);
      if (!is_ident(label)) throw ParseError("bad block label '" + std::string(line) + "'", line_no);
      if (!block_labels.insert(std::string(label)).second)
        throw ParseError("duplicate block label '" + std::string(label) + "'", line_no);
      p.blocks.push_back(Block{std::string(label), {}});
      in_blocks = true;
      continue;
    }

    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (!in_blocks) throw ParseError("instruction outside of a block", line_no);
    Instruction ins = parse_instruction(toks, line_no);
    for (const auto& a : ins.args)
      if (const auto* l = std::get_if<LabelOperand>(&a))
        label_uses.emplace_back(l->label, line_no, 0);
    p.blocks.back().instructions.push_back(std::move(ins));
  }

  if (p.blocks.empty()) throw ParseError("program has no blocks", line_no);
  for (const auto& [label, ln, col] : label_uses)
    if (!block_labels.count(label))
      throw ParseError("undefined label '" + label + "'", ln, col);
  return p;
}

// --- serialization -------------------------------------------------------

namespace {

std::string operand_text(const Operand& op) {
  struct V {
    std::string operator()(const RegOperand& r) const { return "%" + r.name; }
    std::string operator()(const IntImm& i) const { return std::to_string(i.value); }
    std::string operator()(const FloatImm& f) const { return fmt_f64_literal(f.value); }
    std::string operator()(const MemImm& m) const { return "@" + std::to_string(m.addr); }
    std::string operator()(const LabelOperand& l) const { return "$" + l.label; }
  };
  return std::visit(V{}, op);
}

}  // namespace

std::string serialize_program(const Program& p) {
  std::ostringstream out;
  for (const auto& d : p.inputs) out << ".input " << d.name << " " << kind_name(d.kind) << "\n";
  for (const auto& d : p.outputs) out << ".output " << d.name << " " << kind_name(d.kind) << "\n";
  for (const auto& l : p.loop_headers) out << ".loop " << l << "\n";
  for (const auto& b : p.blocks) {
    out << b.label << ":\n";
    for (const auto& ins : b.instructions) {
      out << "  ";
      if (ins.dest) out << "%" << *ins.dest << " = ";
      out << opcode_name(ins.op);
      for (size_t i = 0; i < ins.args.size(); ++i)
        out << (i == 0 ? " " : ", ") << operand_text(ins.args[i]);
      out << "\n";
    }
  }
  return out.str();
}

// --- validation ----------------------------------------------------------

namespace {

std::vector<int> successor_indices(const Block& b,
                                   const std::map<std::string, int>& index_of) {
  std::vector<int> succ;
  if (b.instructions.empty()) return succ;
  const Instruction& t = b.instructions.back();
  for (const auto& a : t.args)
    if (const auto* l = std::get_if<LabelOperand>(&a)) {
      auto it = index_of.find(l->label);
      if (it != index_of.end()) succ.push_back(it->second);
    }
  return succ;
}

}  // namespace

ValidationReport validate_program(const Program& p) {
  ValidationReport report;
  auto add = [&report](std::string v) { report.violations.push_back(std::move(v)); };

  if (p.blocks.empty()) {
    add("program has no blocks");
    return report;
  }
  if (p.outputs.empty()) add("no declared outputs");

  std::map<std::string, int> index_of;
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    auto [it, fresh] = index_of.emplace(p.blocks[i].label, static_cast<int>(i));
    if (!fresh) add("duplicate block label: " + p.blocks[i].label);
  }
  for (const auto& l : p.loop_headers)
    if (!index_of.count(l)) add("undefined label: " + l);

  // Terminator discipline: exactly one, in last position.
  for (const auto& b : p.blocks) {
    if (b.instructions.empty() || !opcode_shape(b.instructions.back().op).is_terminator)
      add("block '" + b.label + "' does not end with a terminator");
    for (size_t i = 0; i + 1 < b.instructions.size(); ++i)
      if (opcode_shape(b.instructions[i].op).is_terminator)
        add("terminator in the middle of block '" + b.label + "'");
    for (const auto& ins : b.instructions)
      for (const auto& a : ins.args)
        if (const auto* l = std::get_if<LabelOperand>(&a))
          if (!index_of.count(l->label)) add("undefined label: " + l->label);
  }

  const int n = static_cast<int>(p.blocks.size());
  std::vector<std::vector<int>> succ(n);
  for (int i = 0; i < n; ++i) succ[i] = successor_indices(p.blocks[i], index_of);

  // Definite-assignment: must-defined IN[b] = intersection of OUT over
  // predecessors; entry holds exactly the declared inputs (definedness only
  // grows along a path, so back edges into entry cannot shrink it). OUT is
  // seeded optimistically and the fixed point only removes names.
  {
    std::set<std::string> universe;
    for (const auto& d : p.inputs) universe.insert(d.name);
    for (const auto& b : p.blocks)
      for (const auto& ins : b.instructions)
        if (ins.dest) universe.insert(*ins.dest);

    std::vector<std::vector<int>> preds(n);
    for (int i = 0; i < n; ++i)
      for (int s : succ[i]) preds[s].push_back(i);

    auto block_out = [&p](std::set<std::string> defined, int bi) {
      for (const auto& ins : p.blocks[bi].instructions)
        if (ins.dest) defined.insert(*ins.dest);
      return defined;
    };

    std::vector<std::set<std::string>> in(n, universe), out(n, universe);
    in[0] = {};
    for (const auto& d : p.inputs) in[0].insert(d.name);
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = 0; i < n; ++i) {
        if (i != 0 && !preds[i].empty()) {
          std::set<std::string> merged = out[preds[i][0]];
          for (size_t k = 1; k < preds[i].size(); ++k) {
            std::set<std::string> inter;
            std::set_intersection(merged.begin(), merged.end(), out[preds[i][k]].begin(),
                                  out[preds[i][k]].end(), std::inserter(inter, inter.begin()));
            merged = std::move(inter);
          }
          if (merged != in[i]) {
            in[i] = std::move(merged);
            changed = true;
          }
        }
        auto next_out = block_out(in[i], i);
        if (next_out != out[i]) {
          out[i] = std::move(next_out);
          changed = true;
        }
      }
    }
    std::set<std::string> reported;
    for (int i = 0; i < n; ++i) {
      std::set<std::string> defined = in[i];
      for (const auto& ins : p.blocks[i].instructions) {
        for (const auto& a : ins.args)
          if (const auto* r = std::get_if<RegOperand>(&a))
            if (!defined.count(r->name) && reported.insert(r->name).second)
              add("use before def: %" + r->name + " in block '" + p.blocks[i].label + "'");
        if (ins.dest) defined.insert(*ins.dest);
      }
    }
  }

  // Every declared output must be emitted on each path that reaches halt.
  for (const auto& decl : p.outputs) {
    auto emits = [&decl](const Block& b) {
      for (const auto& ins : b.instructions)
        if (ins.op == Opcode::Output)
          if (const auto* r = std::get_if<RegOperand>(&ins.args[0]))
            if (r->name == decl.name) return true;
      return false;
    };
    std::vector<bool> block_emits(n), halts(n), can_miss(n, false);
    for (int i = 0; i < n; ++i) {
      block_emits[i] = emits(p.blocks[i]);
      halts[i] = !p.blocks[i].instructions.empty() &&
                 p.blocks[i].instructions.back().op == Opcode::Halt;
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = n - 1; i >= 0; --i) {
        if (block_emits[i] || can_miss[i]) continue;
        bool miss = halts[i];
        for (int s : succ[i]) miss = miss || can_miss[s];
        if (miss) {
          can_miss[i] = true;
          changed = true;
        }
      }
    }
    if (can_miss[0]) {
      // Shortest offending path, for the report.
      std::vector<int> prev(n, -1);
      std::deque<int> q{0};
      std::vector<bool> seen(n, false);
      seen[0] = true;
      int end = -1;
      while (!q.empty()) {
        int cur = q.front();
        q.pop_front();
        if (halts[cur] && !block_emits[cur]) {
          end = cur;
          break;
        }
        for (int s : succ[cur])
          if (!seen[s] && can_miss[s]) {
            seen[s] = true;
            prev[s] = cur;
            q.push_back(s);
          }
      }
      std::string path;
      for (int cur = end; cur != -1; cur = prev[cur])
        path = p.blocks[cur].label + (path.empty() ? "" : " -> " + path);
      add("output %" + decl.name + " not emitted on path: " + path);
    }
  }

  return report;
}

}  // namespace faultcast::ir
