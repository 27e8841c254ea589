#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

#include "faultcast/corpus.hpp"
#include "faultcast/error.hpp"
#include "faultcast/features.hpp"
#include "faultcast/pipeline.hpp"
#include "faultcast/text.hpp"
#include "oracles.hpp"

using namespace faultcast;
using namespace faultcast::pipeline;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;

  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() /
           ("faultcast_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }

  std::string str() const { return path.string(); }
};

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Writes a small generated corpus under dir and returns its parsed manifest.
Manifest small_corpus(const fs::path& dir, uint64_t seed, uint64_t count, uint64_t n) {
  auto kernels = corpus::generate_corpus(seed, count);
  for (const auto& k : kernels) {
    write_text(dir / "programs" / (k.id + ".ir"), k.program);
    write_text(dir / "inputs" / (k.id + ".in"), k.inputs);
  }
  write_text(dir / "manifest.txt", corpus::corpus_manifest(kernels, n, 1e-6, seed));
  return load_manifest((dir / "manifest.txt").string());
}

learn::TrainedPredictor const_predictor(double value, size_t dims) {
  learn::TrainedPredictor p;
  p.whitener = learn::Whitener::identity(dims);
  p.selected = {0};
  p.spec = learn::ModelSpec::defaults(learn::ModelKind::Ridge);
  learn::Model m;
  m.kind = learn::ModelKind::Ridge;
  m.state = learn::RidgeModel{{0.0}, {0.0}, value};
  p.ensemble = {m};
  return p;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("label records roundtrip through their text form") {
  LabelRecord rec;
  rec.id = "stencil_002";
  rec.usable = true;
  rec.n = 385;
  rec.success_count = 200;
  rec.sdc_count = 85;
  rec.interruption_count = 100;
  rec.golden_steps = 1234;
  rec.site_count = 77;
  rec.config_hash = 0xdeadbeefcafe1234ull;

  LabelRecord back = parse_label_record(serialize_label_record(rec));
  CHECK(back.id == rec.id);
  CHECK(back.usable == rec.usable);
  CHECK(back.n == rec.n);
  CHECK(back.success_count == rec.success_count);
  CHECK(back.sdc_count == rec.sdc_count);
  CHECK(back.interruption_count == rec.interruption_count);
  CHECK(back.golden_steps == rec.golden_steps);
  CHECK(back.site_count == rec.site_count);
  CHECK(back.config_hash == rec.config_hash);
  CHECK(back.success() == doctest::Approx(200.0 / 385.0).epsilon(1e-12));

  LabelRecord failed;
  failed.id = "x";
  failed.usable = false;
  failed.error = "golden run trapped";
  LabelRecord fb = parse_label_record(serialize_label_record(failed));
  CHECK_FALSE(fb.usable);
  CHECK(fb.error == "golden run trapped");

  CHECK_THROWS_AS(parse_label_record("usable=1\n"), ParseError);
  CHECK_THROWS_AS(parse_label_record("id=x\nnot a pair\n"), ParseError);
}

TEST_CASE("manifest parsing enforces its line grammar") {
  std::string good =
      "# comment\n"
      "entry id=a program=p/a.ir inputs=i/a.in tolerance=1e-05 n=100 seed=7\n"
      "entry id=b program=p/b.ir inputs=i/b.in tolerance=inf\n";
  Manifest m = parse_manifest(good, "/base");
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].program_path == "/base/p/a.ir");
  CHECK(m.entries[0].tolerance == 1e-5);
  CHECK(m.entries[0].n == 100);
  CHECK(m.entries[0].seed == 7);
  CHECK(m.entries[1].accept_all);
  CHECK_FALSE(m.entries[1].seed.has_value());
  CHECK(m.entries[1].n == 3000);  // default

  // serialize and reparse is a fixed point
  Manifest again = parse_manifest(serialize_manifest(m), "");
  CHECK(serialize_manifest(again) == serialize_manifest(m));

  CHECK_THROWS_AS(parse_manifest("notentry id=a\n", ""), ParseError);
  CHECK_THROWS_AS(parse_manifest("entry id=a program=p inputs=i bogus=1\n", ""), ParseError);
  CHECK_THROWS_AS(parse_manifest("entry id=a program=p\n", ""), ParseError);
  CHECK_THROWS_AS(parse_manifest("entry id=a program=p inputs=i n=0\n", ""), ParseError);
  CHECK_THROWS_AS(parse_manifest("entry id=a program=p inputs=i tolerance=-1\n", ""),
                  ParseError);
  CHECK_THROWS_AS(
      parse_manifest("entry id=a program=p inputs=i\nentry id=a program=q inputs=j\n", ""),
      ParseError);
}

TEST_CASE("labeling a corpus writes traces, records, and the csv") {
  TempDir dir("label");
  Manifest m = small_corpus(dir.path, 3, 12, 60);
  fs::path out = dir.path / "out";

  LabelOptions opt;
  LabelSummary s = run_label(m, out.string(), opt);
  CHECK(s.labeled == 12);
  CHECK(s.reused == 0);
  CHECK(s.failed == 0);
  REQUIRE(s.records.size() == 12);
  for (const auto& rec : s.records) {
    CAPTURE(rec.id);
    CHECK(rec.usable);
    CHECK(rec.n == 60);
    CHECK(rec.success_count + rec.sdc_count + rec.interruption_count == 60);
    CHECK(rec.site_count > 0);
    CHECK(fs::exists(out / "traces" / (rec.id + ".trace")));
    CHECK(fs::exists(out / "labels" / (rec.id + ".lbl")));
  }
  std::string csv = read_file((out / "labels.csv").string());
  CHECK(csv.substr(0, csv.find('\n')) == "id,success,sdc,interruption,n");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);

  // a second run reuses every cached record
  LabelSummary s2 = run_label(m, out.string(), opt);
  CHECK(s2.labeled == 0);
  CHECK(s2.reused == 12);
  for (size_t i = 0; i < 12; ++i) {
    CHECK(s2.records[i].success_count == s.records[i].success_count);
    CHECK(s2.records[i].config_hash == s.records[i].config_hash);
  }

  // force relabels and reproduces the same counts
  opt.force = true;
  LabelSummary s3 = run_label(m, out.string(), opt);
  CHECK(s3.labeled == 12);
  for (size_t i = 0; i < 12; ++i)
    CHECK(s3.records[i].success_count == s.records[i].success_count);

  // identical corpora labeled in two directories give identical csv bytes
  TempDir dir_b("label_b");
  Manifest mb = small_corpus(dir_b.path, 3, 12, 60);
  fs::path out_b = dir_b.path / "out";
  run_label(mb, out_b.string(), LabelOptions{});
  CHECK(read_file((out_b / "labels.csv").string()) ==
        read_file((out / "labels.csv").string()));

  // changing a knob invalidates only the affected entry
  opt.force = false;
  Manifest changed = m;
  changed.entries[0].tolerance = 1e-3;
  LabelSummary s4 = run_label(changed, out.string(), opt);
  CHECK(s4.labeled == 1);
  CHECK(s4.reused == 11);
}

TEST_CASE("a broken entry is recorded and the rest proceed") {
  TempDir dir("broken");
  auto kernels = corpus::generate_corpus(5, 2);
  for (const auto& k : kernels) {
    write_text(dir.path / "programs" / (k.id + ".ir"), k.program);
    write_text(dir.path / "inputs" / (k.id + ".in"), k.inputs);
  }
  write_text(dir.path / "programs" / "bad.ir", "entry:\n  %x = frobnicate 1, 2\n");
  write_text(dir.path / "inputs" / "bad.in", "");
  std::string text = corpus::corpus_manifest(kernels, 40, 1e-6, 5);
  text += "entry id=bad program=programs/bad.ir inputs=inputs/bad.in n=40\n";
  write_text(dir.path / "manifest.txt", text);

  Manifest m = load_manifest((dir.path / "manifest.txt").string());
  LabelSummary s = run_label(m, (dir.path / "out").string(), LabelOptions{});
  CHECK(s.labeled == 2);
  CHECK(s.failed == 1);
  CHECK_FALSE(s.records[2].usable);
  CHECK_FALSE(s.records[2].error.empty());
  CHECK(fs::exists(dir.path / "out" / "labels" / "bad.lbl"));
  CHECK_FALSE(fs::exists(dir.path / "out" / "traces" / "bad.trace"));

  // labels.csv lists only usable entries
  std::string csv = read_file((dir.path / "out" / "labels.csv").string());
  CHECK(csv.find("bad,") == std::string::npos);

  // when nothing is usable the stage throws
  Manifest all_bad;
  all_bad.entries.push_back(m.entries[2]);
  CHECK_THROWS_AS(run_label(all_bad, (dir.path / "out2").string(), LabelOptions{}), DataError);
}

TEST_CASE("feature assembly consumes labels and traces") {
  TempDir dir("feat");
  Manifest m = small_corpus(dir.path, 7, 12, 50);
  fs::path out = dir.path / "out";
  run_label(m, out.string(), LabelOptions{});

  learn::Dataset d = run_features(m, out.string());
  CHECK(d.size() == 12);
  CHECK(d.x.cols == 30);
  for (size_t i = 0; i < d.size(); ++i) {
    CHECK(d.ids[i] == m.entries[i].id);
    CHECK(d.success[i] >= 0.0);
    CHECK(d.success[i] <= 1.0);
  }
  CHECK(fs::exists(out / "dataset.csv"));
  learn::Dataset back = learn::parse_dataset_csv(read_file((out / "dataset.csv").string()));
  CHECK(back.size() == 12);

  // an unlabeled output directory names the first missing entry
  try {
    run_features(m, (dir.path / "fresh").string());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(m.entries[0].id) != std::string::npos);
  }
}

TEST_CASE("training wires selection, search, and bagging together") {
  TempDir dir("train");
  Manifest m = small_corpus(dir.path, 11, 12, 50);
  fs::path out = dir.path / "out";
  run_label(m, out.string(), LabelOptions{});
  learn::Dataset d = run_features(m, out.string());

  TrainConfig cfg;
  cfg.kind = learn::ModelKind::Ridge;
  cfg.k_cv = 3;
  cfg.bag_members = 3;
  cfg.seed = 2;
  TrainOutcome outcome = run_train(d, learn::Target::Success, cfg);
  CHECK(outcome.chosen_k >= 2);
  CHECK(outcome.chosen_k <= 30);
  CHECK(outcome.selected.size() == static_cast<size_t>(outcome.chosen_k));
  CHECK(outcome.predictor.ensemble.size() == 3);
  CHECK(outcome.grid_points > 0);
  CHECK(std::isfinite(outcome.cv_mean));

  auto rep = nlohmann::json::parse(outcome.report_json);
  CHECK(rep["target"] == "success");
  CHECK(rep["rows"] == 12);
  CHECK(rep["chosen_k"] == outcome.chosen_k);
  CHECK(rep["grid_points_evaluated"] == outcome.grid_points);
  CHECK(rep["cv_mean_accuracy"] == outcome.cv_mean);

  // the trained artifact predicts in range and survives persistence
  auto pred = outcome.predictor.predict(d.x.row(0));
  CHECK(pred >= 0.0);
  CHECK(pred <= 1.0);
  auto clone = learn::parse_predictor(learn::serialize_predictor(outcome.predictor));
  CHECK(clone.predict(d.x.row(0)) == pred);

  learn::Dataset tiny;
  tiny.ids = {"a"};
  tiny.x = learn::Matrix(1, 2);
  tiny.success = {0.5};
  tiny.interruption = {0.1};
  CHECK_THROWS_AS(run_train(tiny, learn::Target::Success, cfg), UsageError);
}

TEST_CASE("rate prediction composes the two models") {
  auto sr = const_predictor(0.4, 1);
  auto ir = const_predictor(0.25, 1);
  std::array<double, 1> x{0.0};
  PredictedRates r = predict_rates(sr, ir, x);
  CHECK(r.success == 0.4);
  CHECK(r.interruption == 0.25);
  CHECK(r.sdc == doctest::Approx(0.35).epsilon(1e-12));

  // over-unity predictions floor the complement at zero
  PredictedRates hot = predict_rates(const_predictor(0.9, 1), const_predictor(0.9, 1), x);
  CHECK(hot.sdc == 0.0);

  // the trace overload equals the feature overload on the same trace
  ir::Program p = ir::parse_program(testsupport::read_fixture("euclid.ir"));
  fi::InputBindings in = fi::parse_bindings(testsupport::read_fixture("euclid.in"));
  trace::Trace t = golden_trace(p, in);
  auto f = features::assemble_feature_vector(t);
  auto sr30 = const_predictor(0.6, 30);
  auto ir30 = const_predictor(0.1, 30);
  PredictedRates via_trace = predict_rates(sr30, ir30, t);
  PredictedRates via_features = predict_rates(sr30, ir30, std::span<const double>(f));
  CHECK(via_trace.success == via_features.success);
  CHECK(via_trace.interruption == via_features.interruption);
  CHECK(via_trace.sdc == via_features.sdc);
}

TEST_CASE("golden traces require a clean completed run") {
  ir::Program p = ir::parse_program(testsupport::read_fixture("euclid.ir"));
  fi::InputBindings in = fi::parse_bindings(testsupport::read_fixture("euclid.in"));
  trace::Trace t = golden_trace(p, in);
  REQUIRE(t.chunks.size() == 3);
  size_t records = 0;
  for (const auto& c : t.chunks) records += c.records.size();
  CHECK(records == 26);

  // a trapping program is an error, not a trace
  ir::Program trap = ir::parse_program(
      ".output out i32\nentry:\n  %out = sdiv 1, 0\n  output %out\n  halt\n");
  try {
    golden_trace(trap, {});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("trapped") != std::string::npos);
  }

  // so is exhausting the budget
  CHECK_THROWS_AS(golden_trace(p, in, 5), DataError);
}

TEST_CASE("evaluation reports rows, averages, and undefined cells") {
  learn::Dataset d;
  d.ids = {"r0", "r1", "r2"};
  d.x = learn::Matrix(3, 1);
  d.success = {0.5, 0.8, 0.0};
  d.interruption = {0.25, 0.0, 0.5};

  auto sr = const_predictor(0.4, 1);
  auto ir = const_predictor(0.25, 1);
  EvaluationReport rep = evaluate(d, sr, ir);
  REQUIRE(rep.rows.size() == 3);

  CHECK(rep.rows[0].acc_sr.value() == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(rep.rows[0].acc_ir.value() == 1.0);
  CHECK(rep.rows[0].acc_sdcr.value() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(rep.rows[1].acc_sr.value() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(rep.rows[1].acc_ir.has_value());  // observed zero
  CHECK_FALSE(rep.rows[2].acc_sr.has_value());
  CHECK(rep.rows[2].acc_ir.value() == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(rep.avg_sr.counted == 2);
  CHECK(rep.avg_sr.mean == doctest::Approx(0.65).epsilon(1e-12));
  CHECK(rep.avg_ir.counted == 2);
  CHECK(rep.avg_ir.mean == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(rep.avg_sdcr.counted == 3);
  CHECK(rep.avg_sdcr.mean == doctest::Approx(1.55 / 3.0).epsilon(1e-12));

  std::string csv = serialize_report_csv(rep);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "id,obs_sr,pred_sr,acc_sr,obs_sdcr,pred_sdcr,acc_sdcr,obs_ir,pred_ir,acc_ir");
  CHECK(csv.find(",na\n") != std::string::npos);   // r1's undefined acc_ir
  CHECK(csv.find("r2,0,") != std::string::npos);   // r2's zero observed sr then "na"
  CHECK(csv.find("r2,0,0.4,na,") != std::string::npos);

  std::string table = format_report_table(rep);
  CHECK(table.find("average accuracy") != std::string::npos);
  CHECK(table.find("na") != std::string::npos);
  CHECK(table.find("r1") != std::string::npos);

  CHECK_THROWS_AS(evaluate(learn::Dataset{}, sr, ir), UsageError);
}

}  // TEST_SUITE
