// Foundation feature extraction: weighted instruction-group densities,
// overwrite/dead-location/repeated-addition pattern densities, and the
// order-sensitive bigram aggregate.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "faultcast/trace.hpp"

namespace faultcast::features {

constexpr int kFoundationDims = 10;
constexpr int kBigramDims = 20;
constexpr int kFeatureDims = 30;

/// Per-chunk foundation vector. Fixed dimension order:
/// [CFI, FPI, II, MI, Condition, Shift, Truncation, DO, DLR, RA].
struct FoundationVector {
  double cfi = 0.0;
  double fpi = 0.0;
  double ii = 0.0;
  double mi = 0.0;
  double condition = 0.0;
  double shift = 0.0;
  double truncation = 0.0;
  double do_ = 0.0;
  double dlr = 0.0;
  double ra = 0.0;

  std::array<double, kFoundationDims> values() const {
    return {cfi, fpi, ii, mi, condition, shift, truncation, do_, dlr, ra};
  }
};

/// Fraction of the instance's operand bits whose single-bit corruption the
/// instruction tolerates. Output-operand bits are overwritten by the result
/// and always tolerate errors; shifted-out and truncated-away input bits
/// tolerate errors; condition-like instructions (icmp, fcmp, and, or, xor,
/// br_cond, select) additionally tolerate any input bit whose flip leaves
/// this instance's result unchanged, found by per-bit re-evaluation.
/// br, phi, call, output and halt carry no tolerable-bit claim: weight 0.
double resilience_weight(const trace::InstructionRecord& rec);

/// Weighted instance counts per group tag (GroupTag order), each divided by
/// the chunk's total instance count.
std::array<double, 7> group_features(const trace::Chunk& chunk);

/// Instances whose output location was already written and not read since,
/// divided by instance count. The chunk is scanned as a whole trace; for a
/// chunk inside a trace, foundation_vectors carries write state across
/// chunk boundaries instead.
double overwrite_feature(const trace::Chunk& chunk);

struct DeadLocationResult {
  std::vector<double> per_chunk;
  double average = 0.0;
};

/// Per chunk: the fraction of its distinct locations that are named in no
/// later chunk and are not program outputs. One location set per chunk is
/// prebuilt and later chunks are answered from a suffix union, never by
/// rescanning records.
DeadLocationResult dead_location_rates(const trace::Trace& t);

/// Dependency graph over one chunk's addition instances. Nodes are operand
/// occurrences of locations, in dynamic order with an instance's uses before
/// its def; edges link each use to the latest prior def of the same
/// location, so every edge points backward in time.
struct DataDependencyGraph {
  struct Node {
    std::string location;
    uint64_t seq;
    bool is_def;
  };
  std::vector<Node> nodes;
  std::vector<std::pair<size_t, size_t>> edges;  // use index -> def index
};

DataDependencyGraph build_addition_graph(const trace::Chunk& chunk);

struct RepeatedAdditionResult {
  uint64_t self_additions = 0;
  uint64_t instances = 0;
  double rate = 0.0;
};

/// A self addition is an addition whose output location already occurs as a
/// source of an addition at the same or an earlier point of the chunk; a
/// repeated-addition instance is a maximal run of at least kSelfRunLength
/// consecutive self additions on one output location. rate divides the
/// instance count by the chunk's instance count.
constexpr int kSelfRunLength = 2;
RepeatedAdditionResult repeated_addition_count(const trace::Chunk& chunk);

/// Foundation vectors for every chunk; overwrite state carries across
/// chunks and each chunk gets its own dead-location rate.
std::vector<FoundationVector> foundation_vectors(const trace::Trace& t);

/// Mean of all consecutive-pair concatenations; a single chunk pairs with
/// itself.
std::array<double, kBigramDims> bigram_mean(const std::vector<FoundationVector>& chunks);

/// F30 = [mean of foundation vectors, bigram mean].
std::array<double, kFeatureDims> assemble_from_chunk_vectors(
    const std::vector<FoundationVector>& chunks);

std::array<double, kFeatureDims> assemble_feature_vector(const trace::Trace& t);

}  // namespace faultcast::features
