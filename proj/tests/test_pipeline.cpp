#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "capstate/pipeline/commands.hpp"
#include "model_fixtures.hpp"

using namespace capstate;
using namespace capstate::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  auto p = fs::temp_directory_path() / ("capstate_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ingest::RawRecording recording(double duration_s, Condition c = Condition::C1,
                               double ecg_hz = 512.0) {
  ingest::SyntheticSpec s;
  s.subject_id = "s01";
  s.condition = c;
  s.duration_s = duration_s;
  s.heart_rate_profile = {{0.0, 800.0}};
  s.ibi_jitter_ms = 10.0;
  s.rsa_amplitude_ms = 30.0;
  for (ingest::ScrEventSpec e : {ingest::ScrEventSpec{20.0, 0.3}, {70.0, 0.2}, {130.0, 0.4}})
    if (e.onset_s < duration_s - 10.0) s.scr_events.push_back(e);
  s.noise_sd = 0.005;
  s.ecg_noise_sd = 0.02;
  s.ecg_rate_hz = ecg_hz;
  return ingest::generate_synthetic_recording(s).first;
}

PipelineConfig tiny_pipeline(const fs::path &root) {
  PipelineConfig c;
  c.data_root = root / "data";
  c.output_root = root / "out";
  c.arch = fixtures::tiny_arch(model::Backbone::LSTMAttention);
  c.train.max_epochs = 3;
  c.train.batch_size = 16;
  return c;
}

} // namespace

// ---- featurize ----

TEST(Featurize, WindowsAlignedAndLabeled) {
  const auto rec = recording(180.0, Condition::C2);
  const auto w = featurize_recording(rec);
  ASSERT_FALSE(w.empty());
  // 120 samples at 2 Hz, step 30: starts 15 s apart on the half-second grid.
  for (std::size_t k = 0; k < w.size(); ++k) {
    EXPECT_EQ(w[k].x_ibi.size(), ingest::kWindowSamples);
    EXPECT_EQ(w[k].x_eda.size(), ingest::kWindowSamples);
    EXPECT_DOUBLE_EQ(w[k].window_start_s * 2.0, std::round(w[k].window_start_s * 2.0));
    if (k) EXPECT_NEAR(w[k].window_start_s - w[k - 1].window_start_s, 15.0, 1e-9);
    EXPECT_EQ(w[k].labels, ingest::assign_labels(Condition::C2));
    EXPECT_EQ(w[k].labels.mask, 0);
    EXPECT_LE(w[k].window_start_s + 59.5, 180.0);
  }
  // The common span loses the first beat and the filter edges, but no more
  // than one step is left unused at the end.
  EXPECT_GE(w.size(), 8u);
  EXPECT_LE(w.size(), 9u);
  EXPECT_GT(w.back().window_start_s + 60.0 + 15.0, 180.0 - 2.0);
  // Mean IBI feature tracks the generator.
  for (const auto &s : w) EXPECT_NEAR(s.f_hrv[0], 800.0, 15.0);
}

TEST(Featurize, TrimsDropEdges) {
  const auto rec = recording(180.0);
  FeaturizeConfig c;
  c.trim_head_s = 30.0;
  c.trim_tail_s = 30.0;
  const auto w = featurize_recording(rec, c);
  ASSERT_FALSE(w.empty());
  for (const auto &s : w) {
    EXPECT_GE(s.window_start_s, 30.0);
    EXPECT_LE(s.window_start_s + 59.5, 150.0);
  }
  EXPECT_LT(w.size(), featurize_recording(rec).size());
}

TEST(Featurize, RawLevelSurvivesDetrending) {
  auto rec = recording(120.0);
  for (auto &v : rec.eda) v += 5.0;
  const auto w = featurize_recording(rec);
  ASSERT_FALSE(w.empty());
  EXPECT_NEAR(w[0].f_eda[0], 7.0, 0.3); // raw_mean: tonic 2 uS + 5 uS offset
  double m = 0;
  for (double v : w[0].x_eda) m += v / 120.0;
  EXPECT_LT(std::abs(m), 1.0); // the model input is the conditioned trace
}

TEST(Featurize, RejectsIncompatiblePlans) {
  const auto rec = recording(120.0);
  FeaturizeConfig c;
  c.windowing.window_len_samples = 60;
  EXPECT_THROW(featurize_recording(rec, c), ParameterError);
  c = {};
  c.trim_head_s = -1;
  EXPECT_THROW(featurize_recording(rec, c), ParameterError);
}

TEST(Featurize, ShortRecordingGivesNoWindowsOrError) {
  FeaturizeConfig c;
  c.trim_head_s = 50.0;
  EXPECT_TRUE(featurize_recording(recording(70.0), c).empty());
  EXPECT_THROW(featurize_recording(recording(20.0)), DataError); // EDA shorter than 60 s
}

// ---- window files ----

TEST(WindowsIo, ExactRoundTrip) {
  const auto dir = scratch("windows");
  auto w = fixtures::random_samples(7, 3);
  for (auto &s : w) s.subject_id = "s00";
  w[2].x_ibi[5] = 0.1 + 0.2;
  write_windows_csv(windows_file(dir, "s00"), w);
  EXPECT_EQ(read_windows_csv(windows_file(dir, "s00")), w);
}

TEST(WindowsIo, RejectsInconsistentMask) {
  const auto dir = scratch("windows_bad");
  auto w = fixtures::random_samples(2, 3);
  write_windows_csv(dir / "w.csv", w);
  std::ifstream in(dir / "w.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  const auto pos = row.find(",low,1,"); // c1 row: effort low, mask 1
  ASSERT_NE(pos, std::string::npos);
  row.replace(pos, 7, ",low,0,");
  std::ofstream(dir / "w.csv") << header << '\n' << row << '\n';
  try {
    read_windows_csv(dir / "w.csv");
    FAIL();
  } catch (const DataError &e) {
    EXPECT_EQ(e.row(), 2);
  }
}

// ---- config ----

TEST(Config, RoundTrip) {
  PipelineConfig c;
  c.arch.backbone = model::Backbone::TCN;
  c.arch.use_eda = false;
  c.train.lr = 1.2345678901234e-4;
  c.normalization_mode = eval::NormalizationMode::TrainFoldStats;
  c.sensitivity_scheme = ingest::LabelScheme::C2StressLow;
  c.featurize.trim_head_s = 12.5;
  const auto text = to_json(c).dump();
  const auto back = config_from_json(json::parse(text));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(back.arch, c.arch);
  EXPECT_EQ(back.train, c.train);
  EXPECT_EQ(to_json(back).dump(), text);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, DefaultsFollowTheTrainingRecipe) {
  const PipelineConfig c;
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.featurize.windowing.step_samples(), 30u);
  EXPECT_EQ(c.normalization_mode, eval::NormalizationMode::SelfPerSubject);
  EXPECT_TRUE(config_from_json(json::object()) == c);
}

TEST(Config, DottedOverrides) {
  const auto c = with_overrides(PipelineConfig{}, {"train.lr=0.001", "ablation.backbone=tcn",
                                                   "ablation.modalities=[\"ibi\"]",
                                                   "arch.ibi_conv.channels=8",
                                                   "parallel_folds=3", "output_root=/tmp/x"});
  EXPECT_DOUBLE_EQ(c.train.lr, 1e-3);
  EXPECT_EQ(c.arch.backbone, model::Backbone::TCN);
  EXPECT_TRUE(c.arch.use_ibi);
  EXPECT_FALSE(c.arch.use_eda);
  EXPECT_EQ(c.arch.ibi_conv.channels, 8u);
  EXPECT_EQ(c.parallel_folds, 3u);
  EXPECT_EQ(c.output_root, fs::path("/tmp/x"));
}

TEST(Config, BadOverridesAreConfigErrors) {
  const PipelineConfig c;
  EXPECT_THROW(with_overrides(c, {"train.nope=1"}), ParameterError);
  EXPECT_THROW(with_overrides(c, {"train.lr"}), ParameterError);
  EXPECT_THROW(with_overrides(c, {"train.lr=abc"}), ParameterError);
  EXPECT_THROW(with_overrides(c, {"train.lr=-1"}), ParameterError);
  EXPECT_THROW(with_overrides(c, {"ablation.modalities=[]"}), ParameterError);
  EXPECT_THROW(with_overrides(c, {"ablation.modalities=[\"ecg\"]"}), ParameterError);
  EXPECT_THROW(with_overrides(c, {"normalization_mode=global"}), ParameterError);
  EXPECT_THROW(with_overrides(c, {"arch.seq_len=60"}), ParameterError);
  EXPECT_THROW(config_from_json(json{{"extra", 1}}), ParameterError);
  const auto dir = scratch("cfg");
  std::ofstream(dir / "c.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "c.json"), ParameterError);
  EXPECT_THROW(load_config(dir / "none.json"), ParameterError);
}

// ---- commands and manifest ----

TEST(Commands, PreprocessTwoSubjectsAndRerunDigests) {
  const auto root = scratch("pre");
  auto cfg = tiny_pipeline(root);
  SynthStudySpec spec;
  spec.subjects = 2;
  spec.duration_s = 70.0;
  cmd_synth(root / "data", spec);
  const auto files = cmd_preprocess(cfg);
  ASSERT_EQ(files.size(), 2u);
  EXPECT_TRUE(fs::exists(windows_file(windows_dir(cfg), "s01")));
  EXPECT_TRUE(fs::exists(windows_file(windows_dir(cfg), "s02")));
  const auto m1 = read_manifest(cfg.output_root);
  ASSERT_TRUE(m1.stages.count("preprocess"));
  EXPECT_EQ(m1.config_hash, config_hash(cfg));
  EXPECT_EQ(m1.config, to_json(cfg));
  EXPECT_EQ(m1.stages.at("preprocess").inputs.size(), 12u);
  cmd_preprocess(cfg);
  const auto m2 = read_manifest(cfg.output_root);
  EXPECT_EQ(m1.stages.at("preprocess").inputs, m2.stages.at("preprocess").inputs);
  EXPECT_EQ(m1.stages.at("preprocess").outputs, m2.stages.at("preprocess").outputs);
  const auto d = read_windowed_dataset(windows_dir(cfg));
  EXPECT_EQ(d.size(), 2u);
}

TEST(Commands, MissingInputsAreDataErrors) {
  const auto root = scratch("missing");
  auto cfg = tiny_pipeline(root);
  EXPECT_THROW(cmd_preprocess(cfg), DataError);
  EXPECT_THROW(cmd_evaluate(cfg), DataError);
  EXPECT_THROW(cmd_report(root / "nothing"), DataError);
}

namespace {

// Three subjects of shifted windows written as a windowed dataset.
PipelineConfig windowed_fixture(const fs::path &root) {
  auto cfg = tiny_pipeline(root);
  for (const auto &[id, w] : fixtures::subject_dataset(3, 3, 21))
    write_windows_csv(windows_file(windows_dir(cfg), id), w);
  return cfg;
}

} // namespace

TEST(Commands, EvaluateWritesArtifactsDeterministically) {
  const auto root = scratch("eval");
  auto cfg = windowed_fixture(root);
  const auto out = cmd_evaluate(cfg);
  const auto dir = results_dir(cfg);
  for (const auto *f : {"fold_s00.csv", "fold_s01.csv", "fold_s02.csv", "summary.csv",
                        "stats.json", "history_s00.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto m1 = read_manifest(cfg.output_root).stages.at("evaluate");
  cfg.parallel_folds = 3;
  cmd_evaluate(cfg);
  const auto m2 = read_manifest(cfg.output_root).stages.at("evaluate");
  EXPECT_EQ(m1.outputs, m2.outputs); // parallelism does not change any byte
  EXPECT_NE(m1.config_hash, m2.config_hash);
  const auto text = cmd_report(dir);
  EXPECT_TRUE(fs::exists(dir / "report.txt"));
  EXPECT_NE(text.find("Trajectory patterns (n = 3)"), std::string::npos);
  std::ifstream s(dir / "stats.json");
  const auto j = json::parse(s);
  EXPECT_EQ(j["n_folds"], 3);
  EXPECT_EQ(j["folds"]["s01"]["train_subjects"].size() + j["folds"]["s01"]["inner_validation_subjects"].size(), 2u);
}

TEST(Commands, SensitivitySchemeShowsInFoldFiles) {
  const auto root = scratch("sens");
  auto cfg = windowed_fixture(root);
  cfg.sensitivity_scheme = ingest::LabelScheme::C2StressLow;
  cmd_evaluate(cfg);
  const auto t = csv::read_table(eval::fold_file(results_dir(cfg), "s00"));
  int c2 = 0;
  for (const auto &r : t.rows)
    if (r[1] == "c2") {
      EXPECT_EQ(r[5], "0");
      ++c2;
    }
  EXPECT_GT(c2, 0);
}

TEST(Commands, AblatedModalityDoesNotChangeFoldFiles) {
  const auto root = scratch("ablate");
  auto cfg = windowed_fixture(root);
  cfg = with_overrides(cfg, {"ablation.modalities=[\"ibi\"]"});
  cmd_evaluate(cfg);
  const auto first = read_manifest(cfg.output_root).stages.at("evaluate");
  const auto &before = first.outputs;
  Rng rng(3);
  for (const auto &[id, w0] : read_windowed_dataset(windows_dir(cfg))) {
    auto w = w0;
    for (auto &s : w) {
      for (auto &v : s.x_eda) v = 50.0 * rng.normal();
      for (auto &v : s.f_eda) v = 50.0 * std::abs(rng.normal());
    }
    write_windows_csv(windows_file(windows_dir(cfg), id), w);
  }
  cmd_evaluate(cfg);
  const auto after = read_manifest(cfg.output_root).stages.at("evaluate");
  for (const auto &[f, digest] : before)
    if (f.find("fold_") != std::string::npos) EXPECT_EQ(after.outputs.at(f), digest) << f;
  EXPECT_NE(after.inputs, first.inputs); // the EDA columns really changed
}

// ---- command line ----

class Cli : public ::testing::Test {
protected:
  static int run(const std::string &args) {
    const std::string cmd = std::string(CAPSTATE_CLI) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
};

TEST_F(Cli, ExitCodes) {
  const auto root = scratch("cli");
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("evaluate --bogus"), 2);
  EXPECT_EQ(run("evaluate --set train.nope=1"), 2);
  EXPECT_EQ(run("evaluate --config " + (root / "missing.json").string()), 2);
  EXPECT_EQ(run("evaluate --set output_root=" + (root / "none").string()), 3);
  EXPECT_EQ(run("report " + (root / "none").string()), 3);

  auto cfg = windowed_fixture(root);
  const std::string base =
      "--set output_root=" + cfg.output_root.string() +
      " --set arch.lstm_hidden=4 --set arch.attention_dim=4 --set train.max_epochs=2";
  // Parameters overflow on the first steps and the gradient goes non-finite.
  EXPECT_EQ(run("evaluate " + base + " --set train.lr=1e300 --set train.grad_clip_norm=0"), 4);
  EXPECT_EQ(run("evaluate " + base + " --seed 7 --parallel-folds 2"), 0);
  const auto m = read_manifest(cfg.output_root);
  EXPECT_EQ(m.seed, 7u);
  EXPECT_EQ(m.config["parallel_folds"], 2);
  EXPECT_EQ(run("report " + results_dir(cfg).string()), 0);

  const auto data = root / "synth";
  EXPECT_EQ(run("synth --out " + data.string() + " --subjects 1 --duration 65"), 0);
  EXPECT_TRUE(fs::exists(data / "sessions.csv"));
  EXPECT_TRUE(fs::exists(data / "s01" / "ecg_c3.csv"));
  EXPECT_EQ(run("synth --out " + data.string() + " --subjects 0"), 2);
}
