// Fault-injection campaigns: sample single-bit flips over a golden trace,
// classify each faulty run, and aggregate manifestation rates.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "faultcast/interp.hpp"
#include "faultcast/rng.hpp"
#include "faultcast/trace.hpp"

namespace faultcast::fi {

enum class Manifestation { Success, Sdc, Interruption };

/// Aggregated campaign counts. The three counts partition n exactly; the
/// derived rates satisfy (success() + interruption()) + sdc() == 1.0 in
/// double arithmetic, which is why sdc() is defined as the complement.
struct ManifestationRates {
  uint64_t n = 0;
  uint64_t success_count = 0;
  uint64_t sdc_count = 0;
  uint64_t interruption_count = 0;

  void add(Manifestation m) {
    ++n;
    switch (m) {
      case Manifestation::Success: ++success_count; break;
      case Manifestation::Sdc: ++sdc_count; break;
      case Manifestation::Interruption: ++interruption_count; break;
    }
  }
  void merge(const ManifestationRates& o) {
    n += o.n;
    success_count += o.success_count;
    sdc_count += o.sdc_count;
    interruption_count += o.interruption_count;
  }
  double success() const { return n ? static_cast<double>(success_count) / n : 0.0; }
  double interruption() const { return n ? static_cast<double>(interruption_count) / n : 0.0; }
  double sdc() const { return n ? 1.0 - (success() + interruption()) : 0.0; }
};

/// Output acceptance check for faulty runs. Integer and pointer outputs must
/// match exactly; floats must be within rel_tol relative error, and a NaN is
/// accepted only bit-identical. accept_all treats any completed run's
/// outputs as correct.
struct Verifier {
  double rel_tol = 0.0;
  bool accept_all = false;

  bool matches(const std::vector<Value>& got, const std::vector<Value>& want) const;
};

Manifestation classify(const ExecutionOutcome& faulty, const std::vector<Value>& golden_outputs,
                       const Verifier& v);

/// Injectable fault sites of one golden run: per dynamic instruction, the
/// operand widths in record order. Instructions with no operands and
/// output/halt are excluded.
class SiteCatalog : public trace::TraceSink {
public:
  struct Site {
    uint64_t dyn_index;
    std::vector<uint8_t> widths;
  };

  void on_outputs(const std::vector<std::string>&) override {}
  void on_chunk_start(uint64_t) override {}
  void on_record(const trace::InstructionRecord& rec) override;

  static SiteCatalog from_trace(const trace::Trace& t);

  const std::vector<Site>& sites() const { return sites_; }
  bool empty() const { return sites_.empty(); }

private:
  std::vector<Site> sites_;
};

/// Draw one fault site: a uniform injectable instruction, then a uniform
/// operand slot, then a uniform bit of that operand.
InjectionPoint sample_injection(const SiteCatalog& catalog, SplitMix64& rng);

struct CampaignConfig {
  uint64_t runs = 3000;
  uint64_t seed = 1;
  ExecOptions golden_opts;
  /// Faulty-run step budget as a multiple of the golden run's step count.
  double faulty_budget_factor = 100.0;
  int jobs = 1;
};

struct CampaignResult {
  ManifestationRates rates;
  ExecutionOutcome golden;
  uint64_t site_count = 0;
};

/// Run the golden execution (forwarding its trace to `golden_sinks`), then
/// `runs` independent single-flip executions with per-run RNG streams
/// derived from (seed, run index). Deterministic for fixed inputs and seed,
/// independent of jobs. Throws DataError if the golden run does not
/// complete, or if the program exposes no injectable site.
CampaignResult run_campaign(const ir::Program& p, const InputBindings& in, const Verifier& v,
                            const CampaignConfig& cfg,
                            const std::vector<trace::TraceSink*>& golden_sinks = {});

/// Exact expectation of the sampled campaign: every (instruction, slot, bit)
/// site once, weighted 1/(sites * slots * width). Rates are probabilities,
/// not counts; sdc is the complement of the other two so the classes sum to
/// exactly 1.
struct ExhaustiveRates {
  double success = 0.0;
  double sdc = 0.0;
  double interruption = 0.0;
  uint64_t runs = 0;
};

ExhaustiveRates exhaustive_rates(const ir::Program& p, const InputBindings& in, const Verifier& v,
                                 const CampaignConfig& cfg);

/// Sample size for estimating a proportion at the given two-sided confidence
/// and margin of error, worst case p=0.5; finite population correction is
/// applied when a population size is given. Rounds up.
uint64_t required_sample_size(double confidence, double margin,
                              std::optional<uint64_t> population = std::nullopt);

}  // namespace faultcast::fi
