// Seed-pinned generator of mini-IR kernels used to build training and
// held-out corpora: arithmetic chains, reductions, stencils, branching,
// shifting, and conversion-heavy kernels with randomized knobs.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace faultcast::corpus {

struct GeneratedKernel {
  std::string id;
  std::string program;  // mini-IR source
  std::string inputs;   // binding lines
};

constexpr int kFamilyCount = 6;
const char* family_name(int family);

/// Kernel `index` of the corpus seeded by `seed`; the family rotates with
/// the index so any contiguous range is family-balanced. Every generated
/// program parses, validates, and halts on its generated inputs.
GeneratedKernel generate_kernel(uint64_t seed, uint64_t index);

std::vector<GeneratedKernel> generate_corpus(uint64_t seed, uint64_t count,
                                             uint64_t first_index = 0);

/// Manifest text for kernels laid out as programs/<id>.ir and
/// inputs/<id>.in relative to the manifest file.
std::string corpus_manifest(const std::vector<GeneratedKernel>& kernels, uint64_t campaign_n,
                            double tolerance, uint64_t seed);

}  // namespace faultcast::corpus
