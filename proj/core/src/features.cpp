#include "faultcast/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace faultcast::features {

namespace {

int32_t as_i32(uint64_t bits) { return static_cast<int32_t>(static_cast<uint32_t>(bits)); }
double as_f64(uint64_t bits) { return std::bit_cast<double>(bits); }

bool per_bit_applies(ir::Opcode op) {
  switch (op) {
    case ir::Opcode::Icmp:
    case ir::Opcode::Fcmp:
    case ir::Opcode::And:
    case ir::Opcode::Or:
    case ir::Opcode::Xor:
    case ir::Opcode::BrCond:
    case ir::Opcode::Select:
      return true;
    default:
      return false;
  }
}

/// Result signature of one condition-like instance, recomputed from operand
/// bit patterns alone. The signature is what downstream execution could
/// observe: the comparison/logic value, the branch decision, or the selected
/// bits.
uint64_t reevaluate(ir::Opcode op, const std::vector<uint64_t>& in) {
  switch (op) {
    case ir::Opcode::Icmp: return as_i32(in[0]) < as_i32(in[1]) ? 1 : 0;
    case ir::Opcode::Fcmp: return as_f64(in[0]) < as_f64(in[1]) ? 1 : 0;
    case ir::Opcode::And: return (in[0] & in[1]) & 0xffffffffull;
    case ir::Opcode::Or: return (in[0] | in[1]) & 0xffffffffull;
    case ir::Opcode::Xor: return (in[0] ^ in[1]) & 0xffffffffull;
    case ir::Opcode::BrCond: return as_i32(in[0]) != 0 ? 1 : 0;
    case ir::Opcode::Select: return as_i32(in[0]) != 0 ? in[1] : in[2];
    default: return 0;
  }
}

size_t expected_inputs(ir::Opcode op) {
  switch (op) {
    case ir::Opcode::BrCond: return 1;
    case ir::Opcode::Select: return 3;
    default: return 2;
  }
}

int per_bit_tolerable_inputs(const trace::InstructionRecord& rec) {
  std::vector<uint64_t> in;
  std::vector<int> widths;
  for (const auto& o : rec.operands)
    if (o.role == trace::Role::Input) {
      in.push_back(o.bits);
      widths.push_back(o.width);
    }
  if (in.size() != expected_inputs(rec.op)) return 0;
  uint64_t baseline = reevaluate(rec.op, in);
  int tolerable = 0;
  for (size_t slot = 0; slot < in.size(); ++slot) {
    for (int bit = 0; bit < widths[slot]; ++bit) {
      std::vector<uint64_t> flipped = in;
      flipped[slot] ^= uint64_t{1} << bit;
      if (reevaluate(rec.op, flipped) == baseline) ++tolerable;
    }
  }
  return tolerable;
}

}  // namespace

double resilience_weight(const trace::InstructionRecord& rec) {
  int total = 0;
  for (const auto& o : rec.operands) total += o.width;
  if (total == 0) return 0.0;

  const trace::OperandRecord* out = rec.output();
  int out_bits = out ? out->width : 0;
  int tolerable = 0;
  switch (ir::opcode_group(rec.op)) {
    case ir::GroupTag::FloatArith:
    case ir::GroupTag::IntArith:
    case ir::GroupTag::Memory:
      tolerable = out_bits;
      break;
    case ir::GroupTag::Shift:
      tolerable = static_cast<int>(rec.aux.shamt.value_or(0)) + out_bits;
      break;
    case ir::GroupTag::Truncation: {
      int srcw = static_cast<int>(rec.aux.srcw.value_or(0));
      int dstw = static_cast<int>(rec.aux.dstw.value_or(0));
      tolerable = std::abs(srcw - dstw) + out_bits;
      break;
    }
    case ir::GroupTag::Condition:
      tolerable = per_bit_tolerable_inputs(rec) + out_bits;
      break;
    case ir::GroupTag::ControlFlow:
      if (!per_bit_applies(rec.op)) return 0.0;
      tolerable = per_bit_tolerable_inputs(rec) + out_bits;
      break;
  }
  if (tolerable > total) tolerable = total;
  return static_cast<double>(tolerable) / static_cast<double>(total);
}

std::array<double, 7> group_features(const trace::Chunk& chunk) {
  std::array<double, 7> sums{};
  for (const auto& rec : chunk.records)
    sums[static_cast<int>(ir::opcode_group(rec.op))] += resilience_weight(rec);
  if (!chunk.records.empty())
    for (auto& s : sums) s /= static_cast<double>(chunk.records.size());
  return sums;
}

namespace {

/// Carryable write/read state for overwrite detection. An instance's inputs
/// are read before its output is written.
struct OverwriteScan {
  std::unordered_map<std::string, bool> last_write_unread;

  uint64_t count_chunk(const trace::Chunk& chunk) {
    uint64_t hits = 0;
    for (const auto& rec : chunk.records) {
      for (const auto& o : rec.operands) {
        if (!o.is_location()) continue;
        if (o.role == trace::Role::Input) {
          last_write_unread[o.name] = false;
        } else {
          auto [it, fresh] = last_write_unread.try_emplace(o.name, true);
          if (!fresh) {
            if (it->second) ++hits;
            it->second = true;
          }
        }
      }
    }
    return hits;
  }
};

}  // namespace

double overwrite_feature(const trace::Chunk& chunk) {
  if (chunk.records.empty()) return 0.0;
  OverwriteScan scan;
  return static_cast<double>(scan.count_chunk(chunk)) /
         static_cast<double>(chunk.records.size());
}

DeadLocationResult dead_location_rates(const trace::Trace& t) {
  size_t m = t.chunks.size();
  DeadLocationResult res;
  res.per_chunk.resize(m, 0.0);
  if (m == 0) return res;

  std::unordered_set<std::string> outputs;
  for (const auto& name : t.outputs) outputs.insert("%" + name);

  std::vector<std::set<std::string>> per_chunk_locs(m);
  for (size_t c = 0; c < m; ++c)
    for (const auto& rec : t.chunks[c].records)
      for (const auto& o : rec.operands)
        if (o.is_location()) per_chunk_locs[c].insert(o.name);

  // Suffix union: alive_after[c] holds every location named in chunks > c.
  std::unordered_set<std::string> alive;
  std::vector<double> dlr(m, 0.0);
  for (size_t c = m; c-- > 0;) {
    const auto& locs = per_chunk_locs[c];
    if (!locs.empty()) {
      size_t dead = 0;
      for (const auto& loc : locs)
        if (!alive.count(loc) && !outputs.count(loc)) ++dead;
      dlr[c] = static_cast<double>(dead) / static_cast<double>(locs.size());
    }
    alive.insert(locs.begin(), locs.end());
  }
  res.per_chunk = std::move(dlr);
  double sum = 0.0;
  for (double v : res.per_chunk) sum += v;
  res.average = sum / static_cast<double>(m);
  return res;
}

namespace {

bool is_addition(ir::Opcode op) { return op == ir::Opcode::Add || op == ir::Opcode::Fadd; }

}  // namespace

DataDependencyGraph build_addition_graph(const trace::Chunk& chunk) {
  DataDependencyGraph g;
  std::unordered_map<std::string, size_t> latest_def;
  for (const auto& rec : chunk.records) {
    if (!is_addition(rec.op)) continue;
    for (const auto& o : rec.operands) {
      if (!o.is_location()) continue;
      if (o.role == trace::Role::Input) {
        size_t use = g.nodes.size();
        g.nodes.push_back({o.name, rec.seq, false});
        if (auto it = latest_def.find(o.name); it != latest_def.end())
          g.edges.emplace_back(use, it->second);
      } else {
        size_t def = g.nodes.size();
        g.nodes.push_back({o.name, rec.seq, true});
        latest_def[o.name] = def;
      }
    }
  }
  return g;
}

RepeatedAdditionResult repeated_addition_count(const trace::Chunk& chunk) {
  DataDependencyGraph g = build_addition_graph(chunk);

  // A def is a self addition when its location already occurred as a use at
  // or before this point; walking nodes in order makes "at or before" the
  // set of uses seen so far (an instance's own sources precede its def).
  std::unordered_set<std::string> uses_seen;
  std::unordered_map<std::string, std::pair<uint64_t, uint64_t>> runs;  // loc -> run, instances
  RepeatedAdditionResult res;
  for (const auto& node : g.nodes) {
    if (!node.is_def) {
      uses_seen.insert(node.location);
      continue;
    }
    auto& [run, instances] = runs[node.location];
    if (uses_seen.count(node.location)) {
      ++res.self_additions;
      ++run;
      if (run == kSelfRunLength) ++instances;
    } else {
      run = 0;
    }
  }
  for (const auto& [loc, counts] : runs) res.instances += counts.second;
  if (!chunk.records.empty())
    res.rate = static_cast<double>(res.instances) / static_cast<double>(chunk.records.size());
  return res;
}

std::vector<FoundationVector> foundation_vectors(const trace::Trace& t) {
  std::vector<FoundationVector> out;
  out.reserve(t.chunks.size());
  DeadLocationResult dlr = dead_location_rates(t);
  OverwriteScan overwrite;
  for (size_t c = 0; c < t.chunks.size(); ++c) {
    const trace::Chunk& chunk = t.chunks[c];
    FoundationVector v;
    auto groups = group_features(chunk);
    v.cfi = groups[0];
    v.fpi = groups[1];
    v.ii = groups[2];
    v.mi = groups[3];
    v.condition = groups[4];
    v.shift = groups[5];
    v.truncation = groups[6];
    uint64_t hits = overwrite.count_chunk(chunk);
    v.do_ = chunk.records.empty()
                ? 0.0
                : static_cast<double>(hits) / static_cast<double>(chunk.records.size());
    v.dlr = dlr.per_chunk[c];
    v.ra = repeated_addition_count(chunk).rate;
    out.push_back(v);
  }
  return out;
}

std::array<double, kBigramDims> bigram_mean(const std::vector<FoundationVector>& chunks) {
  std::array<double, kBigramDims> mean{};
  if (chunks.empty()) return mean;
  if (chunks.size() == 1) {
    auto v = chunks[0].values();
    for (int i = 0; i < kFoundationDims; ++i) mean[i] = mean[i + kFoundationDims] = v[i];
    return mean;
  }
  size_t pairs = chunks.size() - 1;
  for (size_t c = 0; c + 1 < chunks.size(); ++c) {
    auto a = chunks[c].values(), b = chunks[c + 1].values();
    for (int i = 0; i < kFoundationDims; ++i) {
      mean[i] += a[i];
      mean[i + kFoundationDims] += b[i];
    }
  }
  for (auto& v : mean) v /= static_cast<double>(pairs);
  return mean;
}

std::array<double, kFeatureDims> assemble_from_chunk_vectors(
    const std::vector<FoundationVector>& chunks) {
  std::array<double, kFeatureDims> f{};
  if (chunks.empty()) return f;
  for (const auto& c : chunks) {
    auto v = c.values();
    for (int i = 0; i < kFoundationDims; ++i) f[i] += v[i];
  }
  for (int i = 0; i < kFoundationDims; ++i) f[i] /= static_cast<double>(chunks.size());
  auto bigrams = bigram_mean(chunks);
  for (int i = 0; i < kBigramDims; ++i) f[kFoundationDims + i] = bigrams[i];
  return f;
}

std::array<double, kFeatureDims> assemble_feature_vector(const trace::Trace& t) {
  return assemble_from_chunk_vectors(foundation_vectors(t));
}

}  // namespace faultcast::features
