#include "faultcast/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>

#include "faultcast/error.hpp"
#include "faultcast/text.hpp"

namespace faultcast::trace {

void TraceTextWriter::on_outputs(const std::vector<std::string>& names) {
  out_ << "#OUTPUTS";
  for (const auto& n : names) out_ << " " << n;
  out_ << "\n";
}

void TraceTextWriter::on_chunk_start(uint64_t chunk_id) {
  out_ << "#CHUNK " << chunk_id << "\n";
}

void TraceTextWriter::on_record(const InstructionRecord& rec) {
  out_ << format_record_line(rec) << "\n";
}

std::string format_record_line(const InstructionRecord& rec) {
  std::string line = std::to_string(rec.seq);
  line += '\t';
  line += ir::opcode_name(rec.op);
  for (const auto& op : rec.operands) {
    line += '\t';
    line += (op.role == Role::Input) ? "in:" : "out:";
    line += op.name;
    line += ':';
    line += ir::kind_name(op.kind);
    line += ':';
    line += std::to_string(op.width);
    line += ':';
    line += (op.width > 32) ? hex64(op.bits) : hex32(static_cast<uint32_t>(op.bits));
  }
  if (rec.aux.shamt) line += "\taux=shamt=" + std::to_string(*rec.aux.shamt);
  if (rec.aux.srcw) line += "\taux=srcw=" + std::to_string(*rec.aux.srcw);
  if (rec.aux.dstw) line += "\taux=dstw=" + std::to_string(*rec.aux.dstw);
  return line;
}

TraceReader::TraceReader(std::istream& in) : in_(in) {
  std::string line;
  if (!read_line(line)) throw ParseError("empty trace", line_no_);
  if (!starts_with(line, "#OUTPUTS"))
    throw ParseError("expected #OUTPUTS header", line_no_);
  for (auto tok : split_ws(std::string_view(line).substr(8)))
    outputs_.emplace_back(tok);
}

bool TraceReader::read_line(std::string& out) {
  while (std::getline(in_, out)) {
    ++line_no_;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    if (!out.empty()) return true;
  }
  return false;
}

InstructionRecord TraceReader::parse_record(std::string_view line) const {
  auto fields = split(line, '\t');
  if (fields.size() < 2) throw ParseError("malformed record", line_no_);

  InstructionRecord rec;
  {
    auto f = fields[0];
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), rec.seq);
    if (ec != std::errc() || p != f.data() + f.size())
      throw ParseError("bad sequence number '" + std::string(f) + "'", line_no_);
  }
  auto op = ir::opcode_from_name(fields[1]);
  if (!op) throw ParseError("bad opcode '" + std::string(fields[1]) + "'", line_no_);
  rec.op = *op;

  for (size_t i = 2; i < fields.size(); ++i) {
    std::string_view f = fields[i];
    if (starts_with(f, "aux=")) {
      auto kv = split(f.substr(4), '=');
      if (kv.size() != 2) throw ParseError("malformed aux field", line_no_);
      uint32_t v = 0;
      auto [p, ec] = std::from_chars(kv[1].data(), kv[1].data() + kv[1].size(), v);
      if (ec != std::errc() || p != kv[1].data() + kv[1].size())
        throw ParseError("bad aux value", line_no_);
      if (kv[0] == "shamt")
        rec.aux.shamt = v;
      else if (kv[0] == "srcw")
        rec.aux.srcw = v;
      else if (kv[0] == "dstw")
        rec.aux.dstw = v;
      else
        throw ParseError("unknown aux key '" + std::string(kv[0]) + "'", line_no_);
      continue;
    }
    auto parts = split(f, ':');
    if (parts.size() != 5) throw ParseError("malformed operand field", line_no_);
    OperandRecord op_rec;
    if (parts[0] == "in")
      op_rec.role = Role::Input;
    else if (parts[0] == "out")
      op_rec.role = Role::Output;
    else
      throw ParseError("bad operand role '" + std::string(parts[0]) + "'", line_no_);
    op_rec.name = std::string(parts[1]);
    if (op_rec.name.empty()) throw ParseError("empty operand name", line_no_);
    auto kind = ir::kind_from_name(parts[2]);
    if (!kind || *kind == ir::OperandKind::LabelRef)
      throw ParseError("bad operand kind '" + std::string(parts[2]) + "'", line_no_);
    op_rec.kind = *kind;
    {
      int w = 0;
      auto [p, ec] = std::from_chars(parts[3].data(), parts[3].data() + parts[3].size(), w);
      if (ec != std::errc() || p != parts[3].data() + parts[3].size())
        throw ParseError("bad operand width", line_no_);
      op_rec.width = w;
    }
    if (op_rec.width != ir::bit_width(op_rec.kind))
      throw ParseError("width " + std::to_string(op_rec.width) + " does not match kind " +
                           std::string(ir::kind_name(op_rec.kind)),
                       line_no_);
    {
      std::string_view h = parts[4];
      size_t expect = static_cast<size_t>(op_rec.width) / 4;
      if (h.size() != expect) throw ParseError("bad value width in hex field", line_no_);
      uint64_t bits = 0;
      auto [p, ec] = std::from_chars(h.data(), h.data() + h.size(), bits, 16);
      if (ec != std::errc() || p != h.data() + h.size())
        throw ParseError("bad hex value", line_no_);
      op_rec.bits = bits;
    }
    // Inputs precede the single output.
    if (!rec.operands.empty() && rec.operands.back().role == Role::Output)
      throw ParseError("operand after output operand", line_no_);
    rec.operands.push_back(std::move(op_rec));
  }
  return rec;
}

std::optional<Chunk> TraceReader::next_chunk() {
  if (at_end_ && !pending_chunk_) {
    if (!saw_record_) throw ParseError("empty trace", line_no_);
    return std::nullopt;
  }

  Chunk chunk;
  bool have_chunk = false;
  if (pending_chunk_) {
    chunk.id = *pending_chunk_;
    pending_chunk_.reset();
    have_chunk = true;
  }

  std::string line;
  while (read_line(line)) {
    if (starts_with(line, "#CHUNK")) {
      uint64_t id = 0;
      auto rest = trim(std::string_view(line).substr(6));
      auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), id);
      if (ec != std::errc() || p != rest.data() + rest.size())
        throw ParseError("bad chunk id", line_no_);
      if (last_chunk_id_ && id != *last_chunk_id_ + 1)
        throw ParseError("chunk ids not consecutive", line_no_);
      if (!last_chunk_id_ && id != 0) throw ParseError("first chunk id must be 0", line_no_);
      last_chunk_id_ = id;
      if (have_chunk) {
        if (chunk.records.empty()) throw ParseError("empty chunk", line_no_);
        pending_chunk_ = id;
        return chunk;
      }
      chunk.id = id;
      have_chunk = true;
      continue;
    }
    if (!have_chunk) throw ParseError("record outside chunk", line_no_);
    InstructionRecord rec = parse_record(line);
    if (last_seq_ && rec.seq <= *last_seq_)
      throw ParseError("non-monotone seq " + std::to_string(rec.seq), line_no_);
    last_seq_ = rec.seq;
    saw_record_ = true;
    chunk.records.push_back(std::move(rec));
  }

  at_end_ = true;
  if (!have_chunk) {
    if (!saw_record_) throw ParseError("empty trace", line_no_);
    return std::nullopt;
  }
  if (chunk.records.empty()) throw ParseError("empty chunk", line_no_);
  return chunk;
}

Trace parse_trace(std::istream& in) {
  TraceReader reader(in);
  Trace t;
  t.outputs = reader.outputs();
  while (auto c = reader.next_chunk()) t.chunks.push_back(std::move(*c));
  return t;
}

Trace parse_trace_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_trace(in);
}

std::string serialize_trace(const Trace& t) {
  std::ostringstream out;
  TraceTextWriter w(out);
  w.on_outputs(t.outputs);
  for (const auto& c : t.chunks) {
    w.on_chunk_start(c.id);
    for (const auto& r : c.records) w.on_record(r);
  }
  return out.str();
}

std::vector<Chunk> split_chunks(const std::vector<InstructionRecord>& records,
                                const std::vector<size_t>& delimiters) {
  std::vector<size_t> cuts = delimiters;
  cuts.push_back(0);
  cuts.push_back(records.size());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Chunk> out;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    size_t b = cuts[i], e = cuts[i + 1];
    if (b >= records.size() || e > records.size() || b == e) continue;
    Chunk c;
    c.id = out.size();
    c.records.assign(records.begin() + static_cast<ptrdiff_t>(b),
                     records.begin() + static_cast<ptrdiff_t>(e));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace faultcast::trace
