// Command-line front end. Verbs: label, features, train, predict, evaluate,
// fi run, gen corpus. Global flags --seed/--jobs/--out-dir apply everywhere
// and may also come from a key=value config file via --config.
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "faultcast/corpus.hpp"
#include "faultcast/dataset.hpp"
#include "faultcast/error.hpp"
#include "faultcast/inject.hpp"
#include "faultcast/interp.hpp"
#include "faultcast/ir.hpp"
#include "faultcast/models.hpp"
#include "faultcast/pipeline.hpp"
#include "faultcast/text.hpp"
#include "faultcast/trace.hpp"

namespace fs = std::filesystem;
using namespace faultcast;

namespace {

struct GlobalOpts {
  uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir = "out";
};

// "inf" disables verification; anything else is a relative tolerance.
void apply_tolerance(const std::string& text, double& tolerance, bool& accept_all) {
  if (text == "inf") {
    accept_all = true;
    tolerance = 0.0;
    return;
  }
  char* end = nullptr;
  tolerance = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || text.empty() || tolerance < 0.0)
    throw UsageError("bad tolerance '" + text + "'");
  accept_all = false;
}

learn::TrainedPredictor load_predictor(const std::string& path) {
  return learn::parse_predictor(read_file(path));
}

void add_label_cmd(CLI::App& app, const GlobalOpts& g) {
  auto* cmd = app.add_subcommand("label", "Run fault injection campaigns over a manifest");
  cmd->fallthrough();
  auto manifest_path = std::make_shared<std::string>();
  auto force = std::make_shared<bool>(false);
  auto golden_budget = std::make_shared<uint64_t>(1'000'000);
  auto budget_factor = std::make_shared<double>(100.0);
  cmd->add_option("--manifest", *manifest_path, "Corpus manifest file")->required();
  cmd->add_flag("--force", *force, "Relabel even when cached results match");
  cmd->add_option("--golden-budget", *golden_budget, "Step budget for the fault-free run");
  cmd->add_option("--budget-factor", *budget_factor,
                  "Faulty-run budget as a multiple of golden steps");
  cmd->callback([&g, manifest_path, force, golden_budget, budget_factor] {
    pipeline::Manifest m = pipeline::load_manifest(*manifest_path);
    pipeline::LabelOptions opt;
    opt.global_seed = g.seed;
    opt.jobs = g.jobs;
    opt.golden_budget = *golden_budget;
    opt.faulty_budget_factor = *budget_factor;
    opt.force = *force;
    pipeline::LabelSummary s = pipeline::run_label(m, g.out_dir, opt);
    for (const auto& r : s.records) {
      if (r.usable)
        std::printf("%-24s success=%s sdc=%s interruption=%s n=%llu\n", r.id.c_str(),
                    fmt_g9(r.success()).c_str(), fmt_g9(r.sdc()).c_str(),
                    fmt_g9(r.interruption()).c_str(), (unsigned long long)r.n);
      else
        std::printf("%-24s unusable: %s\n", r.id.c_str(), r.error.c_str());
    }
    std::printf("labeled %zu, reused %zu, failed %zu -> %s/labels.csv\n", s.labeled, s.reused,
                s.failed, g.out_dir.c_str());
  });
}

void add_features_cmd(CLI::App& app, const GlobalOpts& g) {
  auto* cmd = app.add_subcommand("features", "Extract feature vectors from recorded traces");
  cmd->fallthrough();
  auto manifest_path = std::make_shared<std::string>();
  cmd->add_option("--manifest", *manifest_path, "Corpus manifest file")->required();
  cmd->callback([&g, manifest_path] {
    pipeline::Manifest m = pipeline::load_manifest(*manifest_path);
    learn::Dataset d = pipeline::run_features(m, g.out_dir);
    std::printf("dataset: %zu rows x %zu features -> %s/dataset.csv\n", d.size(), d.x.cols,
                g.out_dir.c_str());
  });
}

void add_train_cmd(CLI::App& app, const GlobalOpts& g) {
  auto* cmd = app.add_subcommand("train", "Train a rate predictor from a labeled dataset");
  cmd->fallthrough();
  auto dataset_path = std::make_shared<std::string>();
  auto target_name = std::make_shared<std::string>();
  auto model_name = std::make_shared<std::string>("gbrt");
  auto k_cv = std::make_shared<int>(10);
  auto bag = std::make_shared<int>(10);
  auto out_path = std::make_shared<std::string>();
  cmd->add_option("--dataset", *dataset_path, "Dataset CSV (default <out-dir>/dataset.csv)");
  cmd->add_option("--target", *target_name, "success or interruption")
      ->required()
      ->check(CLI::IsMember({"success", "interruption"}));
  cmd->add_option("--model", *model_name, "ridge, knn, tree, forest, or gbrt");
  cmd->add_option("--k-cv", *k_cv, "Cross-validation folds")->check(CLI::Range(2, 1000));
  cmd->add_option("--bag", *bag, "Bagged ensemble size")->check(CLI::Range(1, 1000));
  cmd->add_option("--out", *out_path, "Model file (default <out-dir>/model_<target>.model)");
  cmd->callback([&g, dataset_path, target_name, model_name, k_cv, bag, out_path] {
    std::string dpath =
        dataset_path->empty() ? (fs::path(g.out_dir) / "dataset.csv").string() : *dataset_path;
    learn::Dataset d = learn::parse_dataset_csv(read_file(dpath));
    learn::Target target = *target_name == "success" ? learn::Target::Success
                                                     : learn::Target::Interruption;
    pipeline::TrainConfig cfg;
    cfg.kind = learn::model_kind_from_name(*model_name);
    cfg.k_cv = *k_cv;
    cfg.bag_members = *bag;
    cfg.seed = g.seed;
    pipeline::TrainOutcome out = pipeline::run_train(d, target, cfg);
    std::string mpath = out_path->empty()
                            ? (fs::path(g.out_dir) / ("model_" + *target_name + ".model")).string()
                            : *out_path;
    fs::create_directories(fs::path(mpath).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(mpath).parent_path());
    std::string rpath = fs::path(mpath).replace_extension(".report.json").string();
    write_file_atomic(mpath, learn::serialize_predictor(out.predictor));
    write_file_atomic(rpath, out.report_json);
    std::printf("model: %s (report: %s)\n", mpath.c_str(), rpath.c_str());
    std::printf("chosen k=%d, cv mean accuracy %s (variance %s), %zu grid points\n", out.chosen_k,
                fmt_g9(out.cv_mean).c_str(), fmt_g9(out.cv_variance).c_str(), out.grid_points);
  });
}

void add_predict_cmd(CLI::App& app, const GlobalOpts& g) {
  auto* cmd = app.add_subcommand("predict", "Predict rates for a trace or program");
  cmd->fallthrough();
  auto model_sr = std::make_shared<std::string>();
  auto model_ir = std::make_shared<std::string>();
  auto trace_path = std::make_shared<std::string>();
  auto program_path = std::make_shared<std::string>();
  auto inputs_path = std::make_shared<std::string>();
  auto budget = std::make_shared<uint64_t>(1'000'000);
  cmd->add_option("--model-sr", *model_sr, "Success-rate model file")->required();
  cmd->add_option("--model-ir", *model_ir, "Interruption-rate model file")->required();
  auto* topt = cmd->add_option("--trace", *trace_path, "Recorded trace file");
  auto* popt = cmd->add_option("--program", *program_path, "Program to trace (no injection)");
  auto* iopt = cmd->add_option("--inputs", *inputs_path, "Input bindings for --program");
  topt->excludes(popt);
  popt->needs(iopt);
  cmd->add_option("--budget", *budget, "Step budget when tracing --program");
  cmd->callback([&g, model_sr, model_ir, trace_path, program_path, inputs_path, budget] {
    (void)g;
    if (trace_path->empty() && program_path->empty())
      throw UsageError("predict needs --trace or --program");
    learn::TrainedPredictor sr = load_predictor(*model_sr);
    learn::TrainedPredictor ir = load_predictor(*model_ir);
    if (sr.whitener.input_dims() != ir.whitener.input_dims())
      throw UsageError("models disagree on feature width: " +
                       std::to_string(sr.whitener.input_dims()) + " vs " +
                       std::to_string(ir.whitener.input_dims()));
    trace::Trace t;
    if (!trace_path->empty()) {
      t = trace::parse_trace_text(read_file(*trace_path));
    } else {
      ir::Program p = ir::parse_program(read_file(*program_path));
      fi::InputBindings in = fi::parse_bindings(read_file(*inputs_path));
      t = pipeline::golden_trace(p, in, *budget);
    }
    pipeline::PredictedRates r = pipeline::predict_rates(sr, ir, t);
    std::printf("pred_sr=%s pred_sdcr=%s pred_ir=%s\n", fmt_g9(r.success).c_str(),
                fmt_g9(r.sdc).c_str(), fmt_g9(r.interruption).c_str());
  });
}

void add_evaluate_cmd(CLI::App& app, const GlobalOpts& g) {
  auto* cmd = app.add_subcommand("evaluate", "Compare predictions against held-out labels");
  cmd->fallthrough();
  auto dataset_path = std::make_shared<std::string>();
  auto model_sr = std::make_shared<std::string>();
  auto model_ir = std::make_shared<std::string>();
  auto report_path = std::make_shared<std::string>();
  cmd->add_option("--dataset", *dataset_path, "Held-out dataset CSV")->required();
  cmd->add_option("--model-sr", *model_sr, "Success-rate model file")->required();
  cmd->add_option("--model-ir", *model_ir, "Interruption-rate model file")->required();
  cmd->add_option("--report", *report_path, "Report CSV (default <out-dir>/report.csv)");
  cmd->callback([&g, dataset_path, model_sr, model_ir, report_path] {
    learn::Dataset d = learn::parse_dataset_csv(read_file(*dataset_path));
    learn::TrainedPredictor sr = load_predictor(*model_sr);
    learn::TrainedPredictor ir = load_predictor(*model_ir);
    pipeline::EvaluationReport rep = pipeline::evaluate(d, sr, ir);
    std::string rpath =
        report_path->empty() ? (fs::path(g.out_dir) / "report.csv").string() : *report_path;
    fs::create_directories(fs::path(rpath).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(rpath).parent_path());
    write_file_atomic(rpath, pipeline::serialize_report_csv(rep));
    std::fputs(pipeline::format_report_table(rep).c_str(), stdout);
    std::printf("report -> %s\n", rpath.c_str());
  });
}

void add_fi_cmd(CLI::App& app, const GlobalOpts& g) {
  auto* fi_cmd = app.add_subcommand("fi", "Fault-injection harness");
  fi_cmd->fallthrough();
  fi_cmd->require_subcommand(1);
  auto* run = fi_cmd->add_subcommand("run", "Run a single-bit flip campaign on one program");
  run->fallthrough();
  auto program_path = std::make_shared<std::string>();
  auto inputs_path = std::make_shared<std::string>();
  auto n = std::make_shared<uint64_t>(3000);
  auto budget = std::make_shared<uint64_t>(1'000'000);
  auto budget_factor = std::make_shared<double>(100.0);
  auto tolerance = std::make_shared<std::string>("1e-6");
  auto exhaustive = std::make_shared<bool>(false);
  run->add_option("--program", *program_path, "Program file")->required();
  run->add_option("--inputs", *inputs_path, "Input bindings file")->required();
  run->add_option("--n", *n, "Number of injection runs");
  run->add_option("--budget", *budget, "Golden-run step budget");
  run->add_option("--budget-factor", *budget_factor,
                  "Faulty-run budget as a multiple of golden steps");
  run->add_option("--tolerance", *tolerance, "Relative output tolerance, or 'inf'");
  run->add_flag("--exhaustive", *exhaustive, "Enumerate every site instead of sampling");
  run->callback([&g, program_path, inputs_path, n, budget, budget_factor, tolerance, exhaustive] {
    ir::Program p = ir::parse_program(read_file(*program_path));
    fi::InputBindings in = fi::parse_bindings(read_file(*inputs_path));
    fi::Verifier v;
    apply_tolerance(*tolerance, v.rel_tol, v.accept_all);
    fi::CampaignConfig cfg;
    cfg.runs = *n;
    cfg.seed = g.seed;
    cfg.jobs = g.jobs;
    cfg.golden_opts.step_budget = *budget;
    cfg.faulty_budget_factor = *budget_factor;
    if (*exhaustive) {
      fi::ExhaustiveRates r = fi::exhaustive_rates(p, in, v, cfg);
      std::printf("runs=%llu success=%s sdc=%s interruption=%s\n", (unsigned long long)r.runs,
                  fmt_g9(r.success).c_str(), fmt_g9(r.sdc).c_str(),
                  fmt_g9(r.interruption).c_str());
      return;
    }
    fi::CampaignResult r = fi::run_campaign(p, in, v, cfg);
    std::printf("n=%llu success=%s sdc=%s interruption=%s golden_steps=%llu sites=%llu\n",
                (unsigned long long)r.rates.n, fmt_g9(r.rates.success()).c_str(),
                fmt_g9(r.rates.sdc()).c_str(), fmt_g9(r.rates.interruption()).c_str(),
                (unsigned long long)r.golden.steps, (unsigned long long)r.site_count);
  });
}

void add_gen_cmd(CLI::App& app, const GlobalOpts& g) {
  auto* gen = app.add_subcommand("gen", "Generators");
  gen->fallthrough();
  gen->require_subcommand(1);
  auto* corpus_cmd = gen->add_subcommand("corpus", "Generate a seed-pinned kernel corpus");
  corpus_cmd->fallthrough();
  auto count = std::make_shared<uint64_t>(100);
  auto campaign_n = std::make_shared<uint64_t>(3000);
  auto tolerance = std::make_shared<double>(1e-6);
  auto first_index = std::make_shared<uint64_t>(0);
  corpus_cmd->add_option("--count", *count, "Number of kernels")->check(CLI::PositiveNumber);
  corpus_cmd->add_option("--campaign-n", *campaign_n, "Injection runs per kernel in the manifest");
  corpus_cmd->add_option("--tolerance", *tolerance, "Verification tolerance in the manifest");
  corpus_cmd->add_option("--first-index", *first_index,
                         "Start generating at this kernel index (disjoint corpora)");
  corpus_cmd->callback([&g, count, campaign_n, tolerance, first_index] {
    auto kernels = corpus::generate_corpus(g.seed, *count, *first_index);
    fs::create_directories(fs::path(g.out_dir) / "programs");
    fs::create_directories(fs::path(g.out_dir) / "inputs");
    for (const auto& k : kernels) {
      write_file_atomic(fs::path(g.out_dir) / "programs" / (k.id + ".ir"), k.program);
      write_file_atomic(fs::path(g.out_dir) / "inputs" / (k.id + ".in"), k.inputs);
    }
    write_file_atomic(fs::path(g.out_dir) / "manifest.txt",
                      corpus::corpus_manifest(kernels, *campaign_n, *tolerance, g.seed));
    std::printf("generated %zu kernels -> %s/manifest.txt\n", kernels.size(), g.out_dir.c_str());
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predicts program resilience to single-bit transient faults from dynamic "
               "instruction traces, with a fault-injection harness for ground truth"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "0.1.0");
  app.set_config("--config", "", "Key=value config file; keys match long flag names");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Root RNG seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1, 4096))
      ->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();

  add_label_cmd(app, g);
  add_features_cmd(app, g);
  add_train_cmd(app, g);
  add_predict_cmd(app, g);
  add_evaluate_cmd(app, g);
  add_fi_cmd(app, g);
  add_gen_cmd(app, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
  return 0;
}
