#include "faultcast/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "faultcast/cv.hpp"
#include "faultcast/error.hpp"
#include "faultcast/features.hpp"
#include "faultcast/inject.hpp"
#include "faultcast/parallel.hpp"
#include "faultcast/rng.hpp"
#include "faultcast/select.hpp"
#include "faultcast/text.hpp"
#include "faultcast/whiten.hpp"

namespace fs = std::filesystem;

namespace faultcast::pipeline {
namespace {

uint64_t parse_u64(const std::string& s, const char* what, int line = 0) {
  char* end = nullptr;
  errno = 0;
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size() || s.empty())
    throw ParseError(std::string("bad ") + what + " '" + s + "'", line);
  return v;
}

double parse_f64(const std::string& s, const char* what, int line = 0) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty())
    throw ParseError(std::string("bad ") + what + " '" + s + "'", line);
  return v;
}

std::string resolve(const std::string& base_dir, const std::string& rel) {
  fs::path p(rel);
  if (p.is_absolute() || base_dir.empty()) return rel;
  return (fs::path(base_dir) / p).string();
}

}  // namespace

Manifest parse_manifest(std::string_view text, const std::string& base_dir) {
  Manifest m;
  size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto toks = split_ws(line);
    if (toks[0] != "entry")
      throw ParseError("manifest: expected 'entry'", int(line_no));
    ManifestEntry e;
    bool saw_program = false, saw_inputs = false;
    for (size_t i = 1; i < toks.size(); ++i) {
      std::string tok(toks[i]);
      auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw ParseError("manifest: expected key=value, got '" + tok + "'", int(line_no));
      std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "id") {
        e.id = val;
      } else if (key == "program") {
        e.program_path = resolve(base_dir, val);
        saw_program = true;
      } else if (key == "inputs") {
        e.inputs_path = resolve(base_dir, val);
        saw_inputs = true;
      } else if (key == "tolerance") {
        if (val == "inf") {
          e.accept_all = true;
          e.tolerance = 0.0;
        } else {
          e.tolerance = parse_f64(val, "tolerance", int(line_no));
          if (e.tolerance < 0.0) throw ParseError("manifest: negative tolerance", int(line_no));
        }
      } else if (key == "n") {
        e.n = parse_u64(val, "n", int(line_no));
        if (e.n == 0) throw ParseError("manifest: n must be positive", int(line_no));
      } else if (key == "seed") {
        e.seed = parse_u64(val, "seed", int(line_no));
      } else {
        throw ParseError("manifest: unknown key '" + key + "'", int(line_no));
      }
    }
    if (e.id.empty() || !saw_program || !saw_inputs)
      throw ParseError("manifest: id, program, and inputs are required", int(line_no));
    for (const auto& prev : m.entries)
      if (prev.id == e.id) throw ParseError("manifest: duplicate id '" + e.id + "'", int(line_no));
    m.entries.push_back(std::move(e));
  }
  return m;
}

Manifest load_manifest(const std::string& path) {
  return parse_manifest(read_file(path), fs::path(path).parent_path().string());
}

std::string serialize_manifest(const Manifest& m) {
  std::string out;
  for (const auto& e : m.entries) {
    out += "entry id=" + e.id + " program=" + e.program_path + " inputs=" + e.inputs_path;
    out += " tolerance=" + (e.accept_all ? std::string("inf") : fmt_g9(e.tolerance));
    out += " n=" + std::to_string(e.n);
    if (e.seed) out += " seed=" + std::to_string(*e.seed);
    out += "\n";
  }
  return out;
}

std::string serialize_label_record(const LabelRecord& rec) {
  std::string out;
  out += "id=" + rec.id + "\n";
  out += "hash=" + hex64(rec.config_hash) + "\n";
  out += "usable=" + std::string(rec.usable ? "1" : "0") + "\n";
  if (!rec.usable) out += "error=" + rec.error + "\n";
  out += "n=" + std::to_string(rec.n) + "\n";
  out += "success_count=" + std::to_string(rec.success_count) + "\n";
  out += "sdc_count=" + std::to_string(rec.sdc_count) + "\n";
  out += "interruption_count=" + std::to_string(rec.interruption_count) + "\n";
  out += "golden_steps=" + std::to_string(rec.golden_steps) + "\n";
  out += "sites=" + std::to_string(rec.site_count) + "\n";
  return out;
}

LabelRecord parse_label_record(std::string_view text) {
  LabelRecord rec;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line(trim(raw));
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("label record: expected key=value", line_no);
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "id")
      rec.id = val;
    else if (key == "hash")
      rec.config_hash = std::strtoull(val.c_str(), nullptr, 16);
    else if (key == "usable")
      rec.usable = val == "1";
    else if (key == "error")
      rec.error = val;
    else if (key == "n")
      rec.n = parse_u64(val, "n", line_no);
    else if (key == "success_count")
      rec.success_count = parse_u64(val, "success_count", line_no);
    else if (key == "sdc_count")
      rec.sdc_count = parse_u64(val, "sdc_count", line_no);
    else if (key == "interruption_count")
      rec.interruption_count = parse_u64(val, "interruption_count", line_no);
    else if (key == "golden_steps")
      rec.golden_steps = parse_u64(val, "golden_steps", line_no);
    else if (key == "sites")
      rec.site_count = parse_u64(val, "sites", line_no);
    // Unknown keys are ignored so the format can grow.
  }
  if (rec.id.empty()) throw ParseError("label record: missing id", 0);
  return rec;
}

namespace {

uint64_t label_config_hash(const std::string& program_text, const std::string& inputs_text,
                           const ManifestEntry& e, uint64_t entry_seed, const LabelOptions& opt) {
  std::string material = program_text;
  material += '\0';
  material += inputs_text;
  material += '\0';
  material += e.accept_all ? "inf" : fmt_g9(e.tolerance);
  material += '|' + std::to_string(e.n);
  material += '|' + std::to_string(entry_seed);
  material += '|' + std::to_string(opt.golden_budget);
  material += '|' + fmt_g9(opt.faulty_budget_factor);
  return fnv1a64(material);
}

std::string labels_csv(const std::vector<LabelRecord>& records) {
  std::string out = "id,success,sdc,interruption,n\n";
  for (const auto& r : records) {
    if (!r.usable) continue;
    out += r.id + ',' + fmt_g9(r.success()) + ',' + fmt_g9(r.sdc()) + ',' +
           fmt_g9(r.interruption()) + ',' + std::to_string(r.n) + '\n';
  }
  return out;
}

}  // namespace

LabelSummary run_label(const Manifest& m, const std::string& out_dir, const LabelOptions& opt) {
  if (m.entries.empty()) throw DataError("manifest has no entries");
  fs::create_directories(fs::path(out_dir) / "traces");
  fs::create_directories(fs::path(out_dir) / "labels");

  LabelSummary summary;
  summary.records.resize(m.entries.size());
  enum class EntryOutcome : uint8_t { Labeled, Reused, Failed };
  std::vector<EntryOutcome> outcomes(m.entries.size(), EntryOutcome::Failed);

  auto process = [&](size_t row, int campaign_jobs) {
    const auto& e = m.entries[row];
    uint64_t entry_seed = e.seed ? *e.seed : SplitMix64::derive(opt.global_seed, row).next();
    fs::path lbl_path = fs::path(out_dir) / "labels" / (e.id + ".lbl");
    fs::path trace_path = fs::path(out_dir) / "traces" / (e.id + ".trace");

    LabelRecord rec;
    rec.id = e.id;
    try {
      std::string program_text = read_file(e.program_path);
      std::string inputs_text = read_file(e.inputs_path);
      rec.config_hash = label_config_hash(program_text, inputs_text, e, entry_seed, opt);

      if (!opt.force && fs::exists(lbl_path)) {
        LabelRecord cached = parse_label_record(read_file(lbl_path));
        if (cached.config_hash == rec.config_hash && cached.id == e.id &&
            (!cached.usable || fs::exists(trace_path))) {
          summary.records[row] = cached;
          outcomes[row] = cached.usable ? EntryOutcome::Reused : EntryOutcome::Failed;
          return;
        }
      }

      ir::Program p = ir::parse_program(program_text);
      fi::InputBindings in = fi::parse_bindings(inputs_text);
      fi::Verifier v;
      v.rel_tol = e.tolerance;
      v.accept_all = e.accept_all;
      fi::CampaignConfig cfg;
      cfg.runs = e.n;
      cfg.seed = entry_seed;
      cfg.golden_opts.step_budget = opt.golden_budget;
      cfg.faulty_budget_factor = opt.faulty_budget_factor;
      cfg.jobs = campaign_jobs;

      std::ostringstream trace_text;
      trace::TraceTextWriter writer(trace_text);
      fi::CampaignResult result = fi::run_campaign(p, in, v, cfg, {&writer});

      rec.usable = true;
      rec.n = result.rates.n;
      rec.success_count = result.rates.success_count;
      rec.sdc_count = result.rates.sdc_count;
      rec.interruption_count = result.rates.interruption_count;
      rec.golden_steps = result.golden.steps;
      rec.site_count = result.site_count;
      write_file_atomic(trace_path, trace_text.str());
      outcomes[row] = EntryOutcome::Labeled;
    } catch (const std::exception& ex) {
      rec.usable = false;
      rec.error = ex.what();
      outcomes[row] = EntryOutcome::Failed;
    }
    write_file_atomic(lbl_path, serialize_label_record(rec));
    summary.records[row] = std::move(rec);
  };

  // A lone entry parallelizes inside its campaign; several entries
  // parallelize across entries instead, one campaign per worker.
  if (m.entries.size() == 1) {
    process(0, opt.jobs);
  } else {
    parallel_for(m.entries.size(), opt.jobs, [&](int, size_t begin, size_t end) {
      for (size_t row = begin; row < end; ++row) process(row, 1);
    });
  }
  for (EntryOutcome o : outcomes) {
    if (o == EntryOutcome::Labeled) ++summary.labeled;
    if (o == EntryOutcome::Reused) ++summary.reused;
    if (o == EntryOutcome::Failed) ++summary.failed;
  }

  bool any_usable = std::any_of(summary.records.begin(), summary.records.end(),
                                [](const LabelRecord& r) { return r.usable; });
  if (!any_usable) {
    const std::string& why = summary.records.front().error;
    throw DataError("no manifest entry produced labels (first error: " + why + ")");
  }
  write_file_atomic(fs::path(out_dir) / "labels.csv", labels_csv(summary.records));
  return summary;
}

learn::Dataset run_features(const Manifest& m, const std::string& out_dir) {
  learn::Dataset d;
  d.x = learn::Matrix(0, features::kFeatureDims);
  for (const auto& e : m.entries) {
    fs::path lbl_path = fs::path(out_dir) / "labels" / (e.id + ".lbl");
    fs::path trace_path = fs::path(out_dir) / "traces" / (e.id + ".trace");
    if (!fs::exists(lbl_path)) {
      if (fs::exists(trace_path))
        throw DataError("trace '" + e.id + "' has no label record; rerun labeling");
      throw DataError("entry '" + e.id + "' has not been labeled");
    }
    LabelRecord rec = parse_label_record(read_file(lbl_path));
    if (!rec.usable) continue;
    if (!fs::exists(trace_path)) throw DataError("missing trace for '" + e.id + "'");
    trace::Trace t = trace::parse_trace_text(read_file(trace_path));
    auto x = features::assemble_feature_vector(t);
    d.ids.push_back(e.id);
    d.x.data.insert(d.x.data.end(), x.begin(), x.end());
    ++d.x.rows;
    d.success.push_back(rec.success());
    d.interruption.push_back(rec.interruption());
  }
  if (d.ids.empty()) throw DataError("no labeled traces under '" + out_dir + "'");
  write_file_atomic(fs::path(out_dir) / "dataset.csv", learn::serialize_dataset_csv(d));
  return d;
}

TrainOutcome run_train(const learn::Dataset& d, learn::Target target, const TrainConfig& cfg) {
  if (d.size() < 10)
    throw UsageError("training needs at least 10 rows, got " + std::to_string(d.size()));
  if (d.x.cols == 0) throw UsageError("training dataset has no feature columns");

  const std::vector<double>& y = learn::target_of(d, target);
  learn::Whitener whitener = learn::whiten_fit(d.x);
  learn::Matrix wx = whitener.apply(d.x);

  learn::FeatureRanking ranking = learn::rank_features(wx, y);
  learn::ModelSpec sweep_spec = learn::ModelSpec::defaults(cfg.kind);
  learn::TopKResult sweep =
      learn::top_k_sweep(wx, y, sweep_spec, ranking, cfg.k_cv, cfg.seed);

  learn::Matrix xs = wx.gather_cols(sweep.selected);
  learn::GridSearchResult grid =
      learn::grid_search(cfg.kind, learn::default_grid(cfg.kind), xs, y, cfg.k_cv, cfg.seed);
  learn::CvResult final_cv = learn::kfold_cv(xs, y, grid.best, cfg.k_cv, cfg.seed);

  TrainOutcome out;
  out.target = target;
  out.chosen_k = sweep.best_k;
  out.selected = sweep.selected;
  out.chosen_spec = grid.best;
  out.cv_mean = final_cv.mean;
  out.cv_variance = final_cv.variance;
  out.grid_points = grid.evaluated;
  out.predictor.whitener = std::move(whitener);
  out.predictor.selected = sweep.selected;
  out.predictor.spec = grid.best;
  out.predictor.ensemble = learn::ensemble_fit(grid.best, xs, y, cfg.bag_members, cfg.seed);

  nlohmann::json rep;
  rep["target"] = learn::target_name(target);
  rep["rows"] = d.size();
  rep["k_cv"] = cfg.k_cv;
  rep["seed"] = cfg.seed;
  rep["model_kind"] = learn::model_kind_name(cfg.kind);
  rep["chosen_k"] = sweep.best_k;
  rep["selected_components"] = sweep.selected;
  rep["sweep_curve"] = sweep.curve;
  rep["grid_points_evaluated"] = grid.evaluated;
  rep["chosen_params"] = grid.best.params;
  rep["cv_mean_accuracy"] = final_cv.mean;
  rep["cv_accuracy_variance"] = final_cv.variance;
  rep["bag_members"] = cfg.bag_members;
  out.report_json = rep.dump(2);
  out.report_json += '\n';
  return out;
}

PredictedRates predict_rates(const learn::TrainedPredictor& success_model,
                             const learn::TrainedPredictor& interruption_model,
                             std::span<const double> features) {
  PredictedRates r;
  r.success = success_model.predict(features);
  r.interruption = interruption_model.predict(features);
  r.sdc = std::max(0.0, 1.0 - r.success - r.interruption);
  return r;
}

PredictedRates predict_rates(const learn::TrainedPredictor& success_model,
                             const learn::TrainedPredictor& interruption_model,
                             const trace::Trace& t) {
  auto x = features::assemble_feature_vector(t);
  return predict_rates(success_model, interruption_model, std::span<const double>(x));
}

trace::Trace golden_trace(const ir::Program& p, const fi::InputBindings& in,
                          uint64_t step_budget) {
  trace::TraceBuilder builder;
  fi::ExecOptions opts;
  opts.step_budget = step_budget;
  fi::ExecutionOutcome outcome = fi::execute(p, in, opts, {&builder});
  if (!outcome.completed())
    throw DataError(outcome.status == fi::ExecStatus::Trapped
                        ? std::string("reference run trapped: ") +
                              fi::trap_reason_name(*outcome.trap)
                        : "reference run exhausted its step budget");
  return builder.take();
}

namespace {

AccuracyAverage accuracy_average(const std::vector<double>& values) {
  AccuracyAverage avg;
  avg.counted = values.size();
  if (values.empty()) return avg;
  double sum = 0;
  for (double v : values) sum += v;
  avg.mean = sum / double(values.size());
  double sq = 0;
  for (double v : values) sq += (v - avg.mean) * (v - avg.mean);
  avg.variance = sq / double(values.size());
  return avg;
}

}  // namespace

EvaluationReport evaluate(const learn::Dataset& d, const learn::TrainedPredictor& success_model,
                          const learn::TrainedPredictor& interruption_model) {
  if (d.size() == 0) throw UsageError("evaluation dataset is empty");
  EvaluationReport rep;
  std::vector<double> acc_sr, acc_sdcr, acc_ir;
  for (size_t i = 0; i < d.size(); ++i) {
    ReportRow row;
    row.id = d.ids[i];
    PredictedRates pred = predict_rates(success_model, interruption_model, d.x.row(i));
    row.obs_sr = d.success[i];
    row.obs_ir = d.interruption[i];
    row.obs_sdcr = std::max(0.0, 1.0 - (row.obs_sr + row.obs_ir));
    row.pred_sr = pred.success;
    row.pred_ir = pred.interruption;
    row.pred_sdcr = pred.sdc;
    row.acc_sr = learn::prediction_accuracy(row.pred_sr, row.obs_sr);
    row.acc_sdcr = learn::prediction_accuracy(row.pred_sdcr, row.obs_sdcr);
    row.acc_ir = learn::prediction_accuracy(row.pred_ir, row.obs_ir);
    if (row.acc_sr) acc_sr.push_back(*row.acc_sr);
    if (row.acc_sdcr) acc_sdcr.push_back(*row.acc_sdcr);
    if (row.acc_ir) acc_ir.push_back(*row.acc_ir);
    rep.rows.push_back(std::move(row));
  }
  rep.avg_sr = accuracy_average(acc_sr);
  rep.avg_sdcr = accuracy_average(acc_sdcr);
  rep.avg_ir = accuracy_average(acc_ir);
  return rep;
}

namespace {

std::string acc_cell(const std::optional<double>& acc) { return acc ? fmt_g9(*acc) : "na"; }

}  // namespace

std::string serialize_report_csv(const EvaluationReport& r) {
  std::string out = "id,obs_sr,pred_sr,acc_sr,obs_sdcr,pred_sdcr,acc_sdcr,obs_ir,pred_ir,acc_ir\n";
  for (const auto& row : r.rows) {
    out += row.id + ',' + fmt_g9(row.obs_sr) + ',' + fmt_g9(row.pred_sr) + ',' +
           acc_cell(row.acc_sr) + ',' + fmt_g9(row.obs_sdcr) + ',' + fmt_g9(row.pred_sdcr) + ',' +
           acc_cell(row.acc_sdcr) + ',' + fmt_g9(row.obs_ir) + ',' + fmt_g9(row.pred_ir) + ',' +
           acc_cell(row.acc_ir) + '\n';
  }
  return out;
}

std::string format_report_table(const EvaluationReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %8s %8s %8s  %8s %8s %8s  %8s %8s %8s\n", "id", "obs_sr",
                "pred_sr", "acc_sr", "obs_sdcr", "pre_sdcr", "acc_sdcr", "obs_ir", "pred_ir",
                "acc_ir");
  out += buf;
  auto acc_txt = [](const std::optional<double>& a) {
    char cell[32];
    if (a)
      std::snprintf(cell, sizeof cell, "%8.4f", *a);
    else
      std::snprintf(cell, sizeof cell, "%8s", "na");
    return std::string(cell);
  };
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%-24s %8.4f %8.4f %s  %8.4f %8.4f %s  %8.4f %8.4f %s\n",
                  row.id.c_str(), row.obs_sr, row.pred_sr, acc_txt(row.acc_sr).c_str(),
                  row.obs_sdcr, row.pred_sdcr, acc_txt(row.acc_sdcr).c_str(), row.obs_ir,
                  row.pred_ir, acc_txt(row.acc_ir).c_str());
    out += buf;
  }
  auto avg_txt = [](const char* label, const AccuracyAverage& a) {
    char cell[96];
    std::snprintf(cell, sizeof cell, "  %-5s %.4f (%.4f) over %zu rows\n", label, a.mean,
                  a.variance, a.counted);
    return std::string(cell);
  };
  out += "average accuracy, mean (variance), rows without defined accuracy excluded:\n";
  out += avg_txt("sr", r.avg_sr);
  out += avg_txt("sdcr", r.avg_sdcr);
  out += avg_txt("ir", r.avg_ir);
  return out;
}

}  // namespace faultcast::pipeline
