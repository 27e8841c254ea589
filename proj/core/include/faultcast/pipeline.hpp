// End-to-end orchestration: a manifest of programs is labeled by fault
// injection campaigns, traces become feature vectors, models are trained
// and evaluated. Each stage persists its outputs under an output directory
// and later stages consume the earlier files.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "faultcast/dataset.hpp"
#include "faultcast/interp.hpp"
#include "faultcast/ir.hpp"
#include "faultcast/models.hpp"
#include "faultcast/trace.hpp"

namespace faultcast::pipeline {

/// One campaign target. Paths are resolved against the manifest's
/// directory at parse time.
struct ManifestEntry {
  std::string id;
  std::string program_path;
  std::string inputs_path;
  double tolerance = 1e-6;
  bool accept_all = false;  // tolerance=inf
  uint64_t n = 3000;
  std::optional<uint64_t> seed;  // unset: derived from the global seed and row
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

/// Line format: `entry id=<id> program=<path> inputs=<path> [tolerance=<t>]
/// [n=<runs>] [seed=<s>]`, one entry per line, '#' comments. tolerance=inf
/// accepts any completed output.
Manifest parse_manifest(std::string_view text, const std::string& base_dir);
Manifest load_manifest(const std::string& path);
std::string serialize_manifest(const Manifest& m);

/// Outcome of labeling one entry. Counts are exact; rates derive from them
/// with sdc as the complement so the three sum to 1.
struct LabelRecord {
  std::string id;
  bool usable = false;
  std::string error;  // set when not usable
  uint64_t n = 0;
  uint64_t success_count = 0;
  uint64_t sdc_count = 0;
  uint64_t interruption_count = 0;
  uint64_t golden_steps = 0;
  uint64_t site_count = 0;
  uint64_t config_hash = 0;

  double success() const { return n ? double(success_count) / double(n) : 0.0; }
  double interruption() const { return n ? double(interruption_count) / double(n) : 0.0; }
  double sdc() const { return n ? 1.0 - (success() + interruption()) : 0.0; }
};

std::string serialize_label_record(const LabelRecord& rec);
LabelRecord parse_label_record(std::string_view text);

struct LabelOptions {
  uint64_t global_seed = 1;
  int jobs = 1;
  uint64_t golden_budget = 1'000'000;
  double faulty_budget_factor = 100.0;
  bool force = false;  // relabel even when a cached record matches
};

struct LabelSummary {
  size_t labeled = 0;
  size_t reused = 0;
  size_t failed = 0;
  std::vector<LabelRecord> records;  // manifest order, failures included
};

/// Runs the campaigns, writing traces/<id>.trace, labels/<id>.lbl, and
/// labels.csv under out_dir. A cached record whose configuration hash
/// matches is reused instead of rerun. Entries whose golden run fails are
/// recorded unusable and skipped; throws DataError only when no entry is
/// usable.
LabelSummary run_label(const Manifest& m, const std::string& out_dir, const LabelOptions& opt);

/// Assembles dataset.csv under out_dir from the traces and label records
/// of the manifest's usable entries. Throws DataError when none exist.
learn::Dataset run_features(const Manifest& m, const std::string& out_dir);

struct TrainConfig {
  learn::ModelKind kind = learn::ModelKind::Gbrt;
  int k_cv = 10;
  int bag_members = 10;
  uint64_t seed = 1;
};

struct TrainOutcome {
  learn::TrainedPredictor predictor;
  learn::Target target = learn::Target::Success;
  int chosen_k = 0;
  std::vector<int> selected;
  learn::ModelSpec chosen_spec;
  double cv_mean = 0.0;
  double cv_variance = 0.0;
  size_t grid_points = 0;
  std::string report_json;  // CV score, chosen k, chosen grid point
};

/// Whiten, rank, sweep top-k, grid-search the model family, then bag the
/// final ensemble. Requires at least 10 rows.
TrainOutcome run_train(const learn::Dataset& d, learn::Target target, const TrainConfig& cfg);

struct PredictedRates {
  double success = 0.0;
  double interruption = 0.0;
  double sdc = 0.0;  // max(0, 1 - success - interruption)
};

PredictedRates predict_rates(const learn::TrainedPredictor& success_model,
                             const learn::TrainedPredictor& interruption_model,
                             std::span<const double> features);
PredictedRates predict_rates(const learn::TrainedPredictor& success_model,
                             const learn::TrainedPredictor& interruption_model,
                             const trace::Trace& t);

/// Fault-free reference execution that records the trace a prediction
/// consumes. Throws DataError if the run traps or exhausts the budget.
trace::Trace golden_trace(const ir::Program& p, const fi::InputBindings& in,
                          uint64_t step_budget = 1'000'000);

/// Per-program comparison of predicted and observed rates. Accuracy is
/// 1 - |pred - obs| / obs, unbounded below; an observed rate of zero has
/// no defined accuracy and is excluded from averages.
struct ReportRow {
  std::string id;
  double obs_sr = 0.0, pred_sr = 0.0;
  double obs_sdcr = 0.0, pred_sdcr = 0.0;
  double obs_ir = 0.0, pred_ir = 0.0;
  std::optional<double> acc_sr, acc_sdcr, acc_ir;
};

struct AccuracyAverage {
  double mean = 0.0;
  double variance = 0.0;  // population variance over the counted rows
  size_t counted = 0;     // rows with defined accuracy
};

struct EvaluationReport {
  std::vector<ReportRow> rows;
  AccuracyAverage avg_sr, avg_sdcr, avg_ir;
};

EvaluationReport evaluate(const learn::Dataset& d, const learn::TrainedPredictor& success_model,
                          const learn::TrainedPredictor& interruption_model);

/// Machine form: header plus one row per program, "na" for undefined
/// accuracies.
std::string serialize_report_csv(const EvaluationReport& r);
/// Human form: aligned table with per-class average rows.
std::string format_report_table(const EvaluationReport& r);

}  // namespace faultcast::pipeline
