#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "faultcast/ir.hpp"
#include "faultcast/trace.hpp"

namespace faultcast::fi {

/// Runtime value: a kind plus the raw bit pattern in the low bits.
struct Value {
  ir::OperandKind kind = ir::OperandKind::I32;
  uint64_t bits = 0;

  static Value make_i32(int32_t v) {
    return {ir::OperandKind::I32, static_cast<uint32_t>(v)};
  }
  static Value make_f64(double v);
  static Value make_ptr(uint32_t v) { return {ir::OperandKind::Ptr, v}; }

  int32_t as_i32() const { return static_cast<int32_t>(static_cast<uint32_t>(bits)); }
  double as_f64() const;
  uint32_t as_ptr() const { return static_cast<uint32_t>(bits); }
  int width() const { return ir::bit_width(kind); }

  bool operator==(const Value&) const = default;
};

/// Input bindings: values for declared inputs plus optional initial memory
/// cell contents. Text form is one "name = literal" or "@addr = literal"
/// per line; '#' starts a comment.
struct InputBindings {
  std::map<std::string, Value> values;
  std::map<uint32_t, Value> cells;
  bool operator==(const InputBindings&) const = default;
};

InputBindings parse_bindings(std::string_view text);
std::string serialize_bindings(const InputBindings& b);

enum class ExecStatus { Completed, Trapped, Hung };

enum class TrapReason { DivByZero, OutOfRangeAddress, NonFiniteFloatToInt };
const char* trap_reason_name(TrapReason r);

struct ExecutionOutcome {
  ExecStatus status = ExecStatus::Completed;
  std::optional<TrapReason> trap;
  /// Values emitted by `output`; cleared unless status == Completed.
  std::vector<Value> outputs;
  /// Completed dynamic instructions.
  uint64_t steps = 0;

  bool completed() const { return status == ExecStatus::Completed; }
};

struct ExecOptions {
  uint64_t step_budget = 1'000'000;
  uint32_t memory_cells = 65536;
  /// Default chunking opens one chunk per loop execution (all iterations
  /// together). This flag opens a fresh chunk on every header re-entry.
  bool chunk_per_iteration = false;
};

/// Where a single bit flip lands: the dyn_index'th dynamic instruction of
/// the faulty execution, one of its injectable operands, one bit. Input
/// operands are flipped before the instruction consumes them, the output
/// after it is produced. Flips to registers and memory cells persist in
/// that storage; flips to instruction immediates affect only the one
/// dynamic instance, since later instances re-read the encoding.
struct InjectionPoint {
  uint64_t dyn_index = 0;
  int operand_slot = 0;
  int bit_index = 0;
  bool operator==(const InjectionPoint&) const = default;
};

/// A validated program compiled for execution. Reusable across runs; a
/// fault-injection campaign compiles once and runs many times.
class Engine {
public:
  /// Throws UsageError if validate_program rejects p.
  explicit Engine(const ir::Program& p);
  ~Engine();
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;

  /// Deterministic: identical arguments give identical outcomes and traces.
  /// Throws UsageError on unbound or mistyped inputs. `sinks` receive the
  /// trace as it is produced; `inject` applies one bit flip mid-run.
  ExecutionOutcome run(const InputBindings& in, const ExecOptions& opts,
                       const std::vector<trace::TraceSink*>& sinks = {},
                       const InjectionPoint* inject = nullptr);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience over Engine.
ExecutionOutcome execute(const ir::Program& p, const InputBindings& in,
                         const ExecOptions& opts = {},
                         const std::vector<trace::TraceSink*>& sinks = {});

/// Process-wide count of runs executed with an injection point. Lets callers
/// assert that a prediction path performed zero injections.
uint64_t injection_count() noexcept;

}  // namespace faultcast::fi
