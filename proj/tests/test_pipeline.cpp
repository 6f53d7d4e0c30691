#include <fstream>
#include <set>
#include <sstream>

#include "support.hpp"
#include "stackinsights/csv.hpp"
#include "stackinsights/pipeline.hpp"
#include "stackinsights/synth.hpp"

using namespace stackinsights;
namespace fs = std::filesystem;

namespace {

CorpusSpec small_spec(double scale = 0.1) {
  auto spec = CorpusSpec::defaults();
  for (auto& v : spec.volumes) v.files = static_cast<std::size_t>(static_cast<double>(v.files) * scale);
  return spec;
}

// One generated corpus shared by the pipeline cases.
const fs::path& demo_corpus() {
  static testing::TempDir dir("demo");
  static const bool made = (gen_corpus(small_spec(), dir / "corpus"), true);
  (void)made;
  static const fs::path root = dir / "corpus";
  return root;
}

std::map<std::string, std::string> read_manifest_labels(const fs::path& p) {
  std::map<std::string, std::string> out;
  for (const auto& [key, label] : read_labels_csv(p)) {
    out[std::get<0>(key) + "/" + std::get<1>(key) + "/" + std::get<2>(key)] = std::string(to_string(label));
  }
  return out;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("full config parses and resolves relative paths") {
  testing::TempDir dir("cfg");
  fs::create_directories(dir / "vols/a");
  testing::write_file(dir / "dict.json", R"({"category":[{"name":"kw","kind":"keywords","patterns":["secret"]}]})");
  const std::string text = R"(
seed = 7
now = "2018-06-01T00:00:00Z"
dictionary = "dict.json"
output_dir = "results"

[[volume]]
id = "A"
root = "vols/a"

[label]
mode = "threshold"
threshold = 0.1

[features]
depth = 3

[sampling]
initial_fraction = 0.02
increment_fraction = 0.02
max_fraction = 0.2
scope = "representatives"

[train]
family = "lr"
C = 0.9
class_weight = "balanced"

[plan]
x_threshold = 0.02
y_threshold = 0.4

[cluster]
k = 2
)";
  const auto c = parse_pipeline_config(text, dir.path());
  CHECK(c.seed == 7);
  CHECK(c.volumes.size() == 1);
  CHECK(c.volumes[0].root == dir / "vols/a");
  CHECK(c.output_dir == dir / "results");
  CHECK(c.label_rule.mode == LabelRule::Mode::Threshold);
  CHECK(c.features.depth == 3);
  CHECK(c.sampling.max_fraction == 0.2);
  CHECK(c.scope == SampleScope::Representatives);
  CHECK(c.train.family == ModelFamily::LogisticRegression);
  CHECK(c.train.class_weight == ClassWeight::Balanced);
  CHECK(c.thresholds.y == 0.4);
  CHECK(c.volume_clusters == 2);
  CHECK(c.sampling.seed == derive_seed(7, "sample"));
  CHECK(c.train.seed == derive_seed(7, "train"));
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config errors") {
  testing::TempDir dir("cfgerr");
  fs::create_directories(dir / "v");
  const std::string base = "now = \"2018-06-01T00:00:00Z\"\n[[volume]]\nid = \"A\"\nroot = \"v\"\n";
  CHECK_NOTHROW(parse_pipeline_config(base, dir.path()).validate());
  CHECK_THROWS_AS(parse_pipeline_config(base + "dictionary = 'missing.toml'\n", dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("dictionary = 'missing.toml'\n" + base, dir.path()).validate(), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("colour = 'red'\n" + base, dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("[[volume]]\nid = \"A\"\nroot = \"v\"\n", dir.path()).validate(), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config(base + "[train]\nC = -1\n", dir.path()).validate(), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config("seed = = 3", dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_config(base + "[train]\nfamily = 'knn'\n", dir.path()), ConfigError);
}

TEST_CASE("missing dictionary fails before any work") {
  testing::TempDir dir("early");
  fs::create_directories(dir / "v");
  auto c = parse_pipeline_config("now = \"2018-06-01T00:00:00Z\"\n[[volume]]\nid = \"A\"\nroot = \"v\"\n", dir.path());
  c.dictionary = dir / "nope.toml";
  CHECK_THROWS_AS(run_pipeline(c), ConfigError);
  CHECK_FALSE(fs::exists(c.output_dir));
}

}

TEST_SUITE("synth") {

TEST_CASE("nonempty destination is refused") {
  testing::TempDir dir("busy");
  testing::write_file(dir / "x", "x");
  CHECK_THROWS_AS(gen_corpus(small_spec(0.01), dir.path()), Error);
}

TEST_CASE("planting rate zero gives no sensitive files") {
  testing::TempDir dir("rate0");
  auto spec = small_spec(0.02);
  spec.sensitive_rate = 0.0;
  spec.binary_share = 0.0;
  const auto s = gen_corpus(spec, dir / "c");
  CHECK(s.sensitive == 0);
  CHECK(s.non_sensitive == s.files);
  for (const auto& [k, label] : read_manifest_labels(dir / "c/manifest.csv")) CHECK(label == "non-sensitive");
}

TEST_CASE("planting rate one gives only sensitive files") {
  testing::TempDir dir("rate1");
  auto spec = small_spec(0.02);
  spec.sensitive_rate = 1.0;
  spec.binary_share = 0.0;
  const auto s = gen_corpus(spec, dir / "c");
  CHECK(s.sensitive == s.files);
  // The manifest agrees with an independent scan of every written file.
  const auto dict = compile_dictionary({});
  for (const auto& [key, label] : read_labels_csv(dir / "c/manifest.csv")) {
    const auto& [vol, path, name] = key;
    const auto file = dir / "c/volumes" / vol / path / name;
    const auto bytes = testing::read_file(file);
    const auto e = extract_text(std::as_bytes(std::span(bytes.data(), bytes.size())), extension_of(name));
    CHECK(label_file(e.crawled ? scan_content(e.text, dict) : uncrawled_result(dict), {}) == label);
  }
}

TEST_CASE("generated volumes reproduce their planted densities") {
  const auto& root = demo_corpus();
  const auto samples = load_iops(root / "iops.csv");
  const auto sizes = read_volume_sizes(root / "volumes.csv");
  const auto spec = CorpusSpec::defaults();
  for (const auto& v : spec.volumes) {
    double sum = 0;
    std::size_t hours = 0;
    for (const auto& s : samples) {
      if (s.volume_id != v.id) continue;
      sum += static_cast<double>(s.io_ops) / 3600.0 / (static_cast<double>(sizes.at(v.id)) / 1e9);
      ++hours;
    }
    CHECK(hours == static_cast<std::size_t>(spec.iops_hours));
    const double d = sum / static_cast<double>(hours);
    CHECK(std::abs(d - v.io_density) / v.io_density < 0.05);
  }
}

}

TEST_SUITE("pipeline") {

TEST_CASE("end to end on a small corpus, rerunnable and deterministic") {
  const auto& root = demo_corpus();
  testing::TempDir work("run");
  auto config = load_pipeline_config(root / "pipeline.toml");
  config.output_dir = work / "a";
  const auto result = run_pipeline(config);
  for (const char* name : {"corpus.jsonl", "profiles.csv", "profiles.json", "volume_clusters.csv", "rounds.csv",
                           "labels.csv", "training/feature_spec.json", "training/matrix.csv", "training/labels.csv",
                           "model.json", "predictions.csv", "metrics.csv", "volume_map.svg", "volume_map.csv",
                           "user_map.svg", "user_map.csv", "scan_reduction.json", "volume_scores.csv", "timing.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(work / (std::string("a/") + name)));
  }
  REQUIRE(result.holdout);
  CHECK(result.holdout->f1 > 0.7);
  CHECK(result.timing.at("files").get<std::size_t>() == 2100);

  config.output_dir = work / "b";
  run_pipeline(config);
  for (const char* name : {"predictions.csv", "model.json", "volume_map.csv", "user_map.csv", "labels.csv"}) {
    CAPTURE(name);
    CHECK(testing::read_file(work / (std::string("a/") + name)) == testing::read_file(work / (std::string("b/") + name)));
  }

  // Stages rerun standalone from the written artifacts give the same outputs.
  const auto corpus = read_corpus(work / "a/corpus.jsonl");
  const auto model = read_model(work / "a/model.json");
  const auto spec = read_feature_spec(work / "a/training/feature_spec.json");
  const auto preds = predict_corpus(corpus, model, spec, read_labels_csv(work / "a/labels.csv"));
  std::ostringstream pc;
  write_predictions_csv(preds, pc);
  CHECK(pc.str() == testing::read_file(work / "a/predictions.csv"));

  const auto data = read_training_set(work / "a/training");
  auto tc = config.train;
  tc.fingerprint = data.spec.fingerprint();
  CHECK(to_json(train(data.x, data.y, tc)).dump() == to_json(model).dump());

  std::ifstream pj(work / "a/profiles.json");
  PlanInputs in{corpus, preds, read_profiles_json(pj), read_labels_csv(*config.truth), *config.now, config.thresholds};
  run_plan(in, work / "plan");
  for (const char* name : {"volume_map.csv", "user_map.csv", "volume_map.svg", "scan_reduction.json"}) {
    CAPTURE(name);
    CHECK(testing::read_file(work / (std::string("plan/") + name)) == testing::read_file(work / (std::string("a/") + name)));
  }
}

TEST_CASE("representative scope samples only representative volumes") {
  const auto& root = demo_corpus();
  testing::TempDir work("reps");
  auto config = load_pipeline_config(root / "pipeline.toml");
  config.output_dir = work.path();
  config.scope = SampleScope::Representatives;
  run_pipeline(config);
  std::set<std::string> reps;
  std::ifstream vc(work / "volume_clusters.csv");
  std::string line;
  std::getline(vc, line);
  while (std::getline(vc, line)) {
    const auto f = csv::split_line(line);
    if (f[2] == "true") reps.insert(f[0]);
  }
  CHECK(reps.size() == 3);
  for (const auto& [key, label] : read_labels_csv(work / "labels.csv")) CHECK(reps.count(std::get<0>(key)) == 1);
}

TEST_CASE("a failing stage is named") {
  const auto& root = demo_corpus();
  testing::TempDir work("fail");
  testing::write_file(work / "iops.csv", "volume_id,hour_start,io_ops\nV1,2018-01-01T00:00:00Z,-1\n");
  auto config = load_pipeline_config(root / "pipeline.toml");
  config.output_dir = work / "out";
  config.iops = work / "iops.csv";
  try {
    run_pipeline(config);
    FAIL("expected a stage failure");
  } catch (const StageError& e) {
    CHECK(e.stage() == "hotness");
  }
  CHECK(fs::exists(work / "out/corpus.jsonl"));
}

TEST_CASE("volume clustering picks one representative per cluster") {
  Rng rng(5);
  std::vector<VolumeProfile> profiles;
  const auto now = testing::at("2018-06-01T00:00:00Z");
  for (int v = 0; v < 7; ++v) {
    std::vector<FileMeta> files(10);
    for (auto& f : files) f = testing::random_file(rng, now, "V" + std::to_string(v));
    profiles.push_back(aggregate_volume(files, now, {}));
  }
  const auto c = cluster_volumes(profiles, 3, 42);
  CHECK(c.volume_ids.size() == 7);
  for (int k = 0; k < 3; ++k) {
    int reps = 0;
    for (std::size_t i = 0; i < 7; ++i) reps += c.labels[i] == k && c.representative[i];
    CHECK(reps == 1);
  }
}

}
