#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "faultcast/ir.hpp"

namespace faultcast::trace {

enum class Role { Input, Output };

/// One operand of a dynamic instruction. `name` identifies a register
/// ("%acc"), a memory cell ("@0000feed", 32-bit address in hex), or an
/// instruction immediate ("#5"); immediates are injectable but are not
/// locations, so the location analyses skip them. `bits` is the raw value
/// pattern in the low `width` bits.
struct OperandRecord {
  std::string name;
  ir::OperandKind kind = ir::OperandKind::I32;
  int width = 32;
  uint64_t bits = 0;
  Role role = Role::Input;

  bool is_location() const { return !name.empty() && name[0] != '#'; }
  bool operator==(const OperandRecord&) const = default;
};

/// Opcode-specific payload: dynamic shift amount for shifts, logical source
/// and destination widths for conversions.
struct Aux {
  std::optional<uint32_t> shamt;
  std::optional<uint32_t> srcw;
  std::optional<uint32_t> dstw;
  bool operator==(const Aux&) const = default;
};

struct InstructionRecord {
  uint64_t seq = 0;  // 0-based dynamic index, global across the trace
  ir::Opcode op = ir::Opcode::Halt;
  std::vector<OperandRecord> operands;  // inputs first, then at most one output
  Aux aux;

  const OperandRecord* output() const {
    return !operands.empty() && operands.back().role == Role::Output ? &operands.back()
                                                                     : nullptr;
  }
  bool operator==(const InstructionRecord&) const = default;
};

struct Chunk {
  uint64_t id = 0;
  std::vector<InstructionRecord> records;
  bool operator==(const Chunk&) const = default;
};

struct Trace {
  std::vector<std::string> outputs;  // declared program outputs, live at exit
  std::vector<Chunk> chunks;

  uint64_t record_count() const {
    uint64_t n = 0;
    for (const auto& c : chunks) n += c.records.size();
    return n;
  }
  bool operator==(const Trace&) const = default;
};

/// Receives a trace as it is produced. Chunks arrive as a start marker
/// followed by records; exactly the granularity the text format uses.
class TraceSink {
public:
  virtual ~TraceSink() = default;
  virtual void on_outputs(const std::vector<std::string>& names) = 0;
  virtual void on_chunk_start(uint64_t chunk_id) = 0;
  virtual void on_record(const InstructionRecord& rec) = 0;
};

/// Builds an in-memory Trace.
class TraceBuilder : public TraceSink {
public:
  void on_outputs(const std::vector<std::string>& names) override { trace_.outputs = names; }
  void on_chunk_start(uint64_t chunk_id) override { trace_.chunks.push_back(Chunk{chunk_id, {}}); }
  void on_record(const InstructionRecord& rec) override { trace_.chunks.back().records.push_back(rec); }
  Trace take() { return std::move(trace_); }
  const Trace& trace() const { return trace_; }

private:
  Trace trace_;
};

/// Writes the text format line by line; never buffers records.
class TraceTextWriter : public TraceSink {
public:
  explicit TraceTextWriter(std::ostream& out) : out_(out) {}
  void on_outputs(const std::vector<std::string>& names) override;
  void on_chunk_start(uint64_t chunk_id) override;
  void on_record(const InstructionRecord& rec) override;

private:
  std::ostream& out_;
};

std::string format_record_line(const InstructionRecord& rec);

/// Pull parser over the text format. Holds one chunk at a time, so memory
/// stays bounded by the largest chunk regardless of trace length. Errors
/// carry the 1-based line number.
class TraceReader {
public:
  explicit TraceReader(std::istream& in);

  const std::vector<std::string>& outputs() const { return outputs_; }
  /// Next chunk, or nullopt at end of stream.
  std::optional<Chunk> next_chunk();

private:
  std::istream& in_;
  std::vector<std::string> outputs_;
  int line_no_ = 0;
  bool saw_record_ = false;
  bool at_end_ = false;
  std::optional<uint64_t> pending_chunk_;
  std::optional<uint64_t> last_seq_;
  std::optional<uint64_t> last_chunk_id_;

  bool read_line(std::string& out);
  InstructionRecord parse_record(std::string_view line) const;
};

/// Materializes a whole trace; error "empty trace" if it has no records.
Trace parse_trace(std::istream& in);
Trace parse_trace_text(std::string_view text);

/// Serializes a Trace through TraceTextWriter.
std::string serialize_trace(const Trace& t);

/// Splits records at the given positions (indices where a new chunk starts).
/// Boundary or duplicate positions that would create empty chunks are merged
/// away; chunk ids are renumbered consecutively from 0.
std::vector<Chunk> split_chunks(const std::vector<InstructionRecord>& records,
                                const std::vector<size_t>& delimiters);

}  // namespace faultcast::trace
