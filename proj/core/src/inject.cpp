#include "faultcast/inject.hpp"

#include <cmath>

#include "faultcast/error.hpp"
#include "faultcast/parallel.hpp"
#include "faultcast/stats.hpp"

namespace faultcast::fi {

bool Verifier::matches(const std::vector<Value>& got, const std::vector<Value>& want) const {
  if (accept_all) return true;
  if (got.size() != want.size()) return false;
  for (size_t i = 0; i < got.size(); ++i) {
    if (got[i].kind != want[i].kind) return false;
    if (got[i].bits == want[i].bits) continue;
    if (got[i].kind != ir::OperandKind::F64) return false;
    double p = got[i].as_f64(), g = want[i].as_f64();
    if (std::isnan(p) || std::isnan(g)) return false;
    if (!(std::fabs(p - g) <= rel_tol * std::fabs(g))) return false;
  }
  return true;
}

Manifestation classify(const ExecutionOutcome& faulty, const std::vector<Value>& golden_outputs,
                       const Verifier& v) {
  if (!faulty.completed()) return Manifestation::Interruption;
  return v.matches(faulty.outputs, golden_outputs) ? Manifestation::Success : Manifestation::Sdc;
}

void SiteCatalog::on_record(const trace::InstructionRecord& rec) {
  if (rec.op == ir::Opcode::Output || rec.op == ir::Opcode::Halt) return;
  if (rec.operands.empty()) return;
  Site s;
  s.dyn_index = rec.seq;
  s.widths.reserve(rec.operands.size());
  for (const auto& op : rec.operands) s.widths.push_back(static_cast<uint8_t>(op.width));
  sites_.push_back(std::move(s));
}

SiteCatalog SiteCatalog::from_trace(const trace::Trace& t) {
  SiteCatalog c;
  for (const auto& chunk : t.chunks)
    for (const auto& rec : chunk.records) c.on_record(rec);
  return c;
}

InjectionPoint sample_injection(const SiteCatalog& catalog, SplitMix64& rng) {
  const auto& sites = catalog.sites();
  if (sites.empty()) throw DataError("no injectable fault site");
  const SiteCatalog::Site& s = sites[rng.below(sites.size())];
  uint64_t slot = rng.below(s.widths.size());
  int bit = static_cast<int>(rng.below(s.widths[slot]));
  return {s.dyn_index, static_cast<int>(slot), bit};
}

namespace {

ExecOptions faulty_options(const CampaignConfig& cfg, uint64_t golden_steps) {
  ExecOptions o = cfg.golden_opts;
  double budget = cfg.faulty_budget_factor * static_cast<double>(golden_steps);
  o.step_budget = budget < 1.0 ? 1 : static_cast<uint64_t>(budget);
  return o;
}

}  // namespace

CampaignResult run_campaign(const ir::Program& p, const InputBindings& in, const Verifier& v,
                            const CampaignConfig& cfg,
                            const std::vector<trace::TraceSink*>& golden_sinks) {
  Engine golden_engine(p);
  SiteCatalog catalog;
  std::vector<trace::TraceSink*> sinks = golden_sinks;
  sinks.push_back(&catalog);
  ExecutionOutcome golden = golden_engine.run(in, cfg.golden_opts, sinks);
  if (!golden.completed())
    throw DataError(golden.status == ExecStatus::Trapped
                        ? std::string("golden run trapped: ") + trap_reason_name(*golden.trap)
                        : "golden run exceeded its step budget");
  if (catalog.empty()) throw DataError("no injectable fault site");

  ExecOptions fopts = faulty_options(cfg, golden.steps);
  std::vector<ManifestationRates> partial(static_cast<size_t>(std::max(cfg.jobs, 1)));
  parallel_for(cfg.runs, cfg.jobs, [&](size_t job, uint64_t begin, uint64_t end) {
    Engine engine(p);
    ManifestationRates& local = partial[job];
    for (uint64_t r = begin; r < end; ++r) {
      SplitMix64 rng(SplitMix64::derive(cfg.seed, r));
      InjectionPoint pt = sample_injection(catalog, rng);
      ExecutionOutcome out = engine.run(in, fopts, {}, &pt);
      local.add(classify(out, golden.outputs, v));
    }
  });

  CampaignResult res;
  for (const auto& part : partial) res.rates.merge(part);
  res.golden = std::move(golden);
  res.site_count = catalog.sites().size();
  return res;
}

ExhaustiveRates exhaustive_rates(const ir::Program& p, const InputBindings& in, const Verifier& v,
                                 const CampaignConfig& cfg) {
  Engine engine(p);
  SiteCatalog catalog;
  ExecutionOutcome golden = engine.run(in, cfg.golden_opts, {&catalog});
  if (!golden.completed()) throw DataError("golden run did not complete");
  if (catalog.empty()) throw DataError("no injectable fault site");

  ExecOptions fopts = faulty_options(cfg, golden.steps);
  ExhaustiveRates res;
  const auto& sites = catalog.sites();
  double per_site = 1.0 / static_cast<double>(sites.size());
  for (const auto& s : sites) {
    double per_slot = per_site / static_cast<double>(s.widths.size());
    for (size_t slot = 0; slot < s.widths.size(); ++slot) {
      double w = per_slot / static_cast<double>(s.widths[slot]);
      for (int bit = 0; bit < s.widths[slot]; ++bit) {
        InjectionPoint pt{s.dyn_index, static_cast<int>(slot), bit};
        ExecutionOutcome out = engine.run(in, fopts, {}, &pt);
        switch (classify(out, golden.outputs, v)) {
          case Manifestation::Success: res.success += w; break;
          case Manifestation::Sdc: break;
          case Manifestation::Interruption: res.interruption += w; break;
        }
        ++res.runs;
      }
    }
  }
  // Same complement representation as ManifestationRates: the accumulated
  // weights carry round-off, the complement keeps the class sum at exactly 1.
  res.sdc = 1.0 - (res.success + res.interruption);
  return res;
}

uint64_t required_sample_size(double confidence, double margin,
                              std::optional<uint64_t> population) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw UsageError("confidence must be in (0, 1)");
  if (!(margin > 0.0)) throw UsageError("margin of error must be positive");
  double z = inverse_normal_cdf(1.0 - (1.0 - confidence) / 2.0);
  double n0 = std::ceil(z * z * 0.25 / (margin * margin));
  if (!population) return static_cast<uint64_t>(n0);
  double pop = static_cast<double>(*population);
  double n = n0 / (1.0 + (n0 - 1.0) / pop);
  return static_cast<uint64_t>(std::ceil(n));
}

}  // namespace faultcast::fi
