#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stackinsights/cluster.hpp"
#include "stackinsights/csv.hpp"
#include "stackinsights/pipeline.hpp"
#include "stackinsights/select.hpp"
#include "stackinsights/synth.hpp"

namespace fs = std::filesystem;
using namespace stackinsights;

namespace {

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::vector<VolumeProfile> read_profiles(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return p.extension() == ".csv" ? read_profiles_csv(in) : read_profiles_json(in);
}

Timestamp parse_now(const std::string& text) {
  try {
    return parse_rfc3339(text);
  } catch (const Error& e) {
    throw ConfigError(std::string("--now: ") + e.what());
  }
}

// Zeroes every column outside the k highest-MI features.
FeatureMatrix keep_top_features(const FeatureMatrix& x, const LabelVector& y, const FeatureSpec& spec, std::size_t k) {
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(x.cols());
  for (const auto& s : top_k(x, y, spec, k)) mask(static_cast<Eigen::Index>(s.index)) = 1.0;
  FeatureMatrix kept = x * mask.asDiagonal();
  kept.prune(0.0);
  return kept;
}

struct TrainFlags {
  std::string family = "random_forest";
  double C = 1.0;
  std::string class_weight = "none";
  std::uint64_t seed = 42;
  int folds = 10;
  int n_trees = 10;

  void add(CLI::App* app) {
    app->add_option("--family", family, "naive_bayes | logistic_regression | linear_svm | random_forest")
        ->capture_default_str();
    app->add_option("--C", C, "regularization strength (LR, SVM)")->capture_default_str();
    app->add_option("--class-weight", class_weight, "none | balanced")->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--folds", folds, "cross-validation folds")->capture_default_str();
    app->add_option("--n-trees", n_trees)->capture_default_str();
  }

  TrainConfig config() const {
    TrainConfig c;
    c.family = model_family_from_string(family);
    c.C = C;
    c.class_weight = class_weight_from_string(class_weight);
    c.seed = seed;
    c.folds = folds;
    c.forest.n_trees = n_trees;
    c.validate();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid-cloud readiness analysis of file-storage volumes"};
  app.require_subcommand(1);

  // scan
  auto* scan = app.add_subcommand("scan", "Walk a volume root and write its file metadata corpus");
  fs::path scan_root, scan_out, scan_skipped;
  std::string scan_id;
  scan->add_option("--root", scan_root)->required();
  scan->add_option("--volume-id", scan_id)->required();
  scan->add_option("--out", scan_out, "corpus JSON-Lines file")->required();
  scan->add_option("--skipped", scan_skipped, "CSV of files that could not be read");

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic seven-volume corpus");
  fs::path gen_dest;
  CorpusSpec gen_spec = CorpusSpec::defaults();
  std::string gen_now = format_rfc3339(gen_spec.now);
  double gen_scale = 1.0;
  std::optional<double> gen_rate;
  gen->add_option("--dest", gen_dest)->required();
  gen->add_option("--seed", gen_spec.seed)->capture_default_str();
  gen->add_option("--now", gen_now, "reference time of the generated timestamps")->capture_default_str();
  gen->add_option("--scale", gen_scale, "multiplier on the default per-volume file counts")->capture_default_str();
  gen->add_option("--signal", gen_spec.signal, "probability that extension and name agree with the label")
      ->capture_default_str();
  gen->add_option("--binary-share", gen_spec.binary_share)->capture_default_str();
  gen->add_option("--sensitive-rate", gen_rate, "planting rate applied to every volume");

  // sample
  auto* sample = app.add_subcommand("sample", "Progressively sample, content-scan and label one volume");
  fs::path sample_corpus, sample_root, sample_config, sample_out, sample_dict;
  std::string sample_volume;
  sample->add_option("--volume", sample_volume)->required();
  sample->add_option("--root", sample_root, "volume root holding the file contents")->required();
  sample->add_option("--corpus", sample_corpus, "corpus to sample from (scanned from --root when omitted)");
  sample->add_option("--config", sample_config, "TOML with sampling settings");
  sample->add_option("--dictionary", sample_dict);
  sample->add_option("--out", sample_out, "output directory")->required();

  // train
  auto* trn = app.add_subcommand("train", "Train a model on a training set directory");
  fs::path train_dir, train_out;
  TrainFlags train_flags;
  std::vector<double> train_grid;
  std::size_t train_top = 0;
  trn->add_option("--training", train_dir, "directory with feature_spec.json, matrix.csv, labels.csv")->required();
  trn->add_option("--out", train_out, "model JSON file")->required();
  trn->add_option("--grid", train_grid, "C values to grid-search by cross-validation")->delimiter(',');
  trn->add_option("--top-features", train_top, "train only on the k highest-MI features");
  train_flags.add(trn);

  // eval
  auto* evl = app.add_subcommand("eval", "Evaluate a model, or cross-validate a configuration");
  fs::path eval_dir, eval_model;
  TrainFlags eval_flags;
  std::vector<double> eval_grid;
  evl->add_option("--training", eval_dir)->required();
  evl->add_option("--model", eval_model, "score this model on the set instead of cross-validating");
  evl->add_option("--grid", eval_grid, "print the grid-search table for these C values")->delimiter(',');
  eval_flags.add(evl);

  // predict
  auto* prd = app.add_subcommand("predict", "Predict the sensitivity of every corpus file");
  fs::path pred_corpus, pred_model, pred_spec, pred_labels, pred_out;
  prd->add_option("--corpus", pred_corpus)->required();
  prd->add_option("--model", pred_model)->required();
  prd->add_option("--spec", pred_spec, "feature_spec.json the model was trained with")->required();
  prd->add_option("--labels", pred_labels, "content-scan labels that take precedence");
  prd->add_option("--out", pred_out)->required();

  // hotness
  auto* hot = app.add_subcommand("hotness", "Aggregate volume profiles and IO density");
  fs::path hot_corpus, hot_iops, hot_sizes, hot_out, hot_json;
  std::string hot_now;
  hot->add_option("--corpus", hot_corpus)->required();
  hot->add_option("--iops", hot_iops);
  hot->add_option("--volume-sizes", hot_sizes, "CSV volume_id,total_size");
  hot->add_option("--now", hot_now, "RFC 3339 reference time")->required();
  hot->add_option("--out", hot_out, "profiles CSV")->required();
  hot->add_option("--json", hot_json, "profiles JSON");

  // plan
  auto* pln = app.add_subcommand("plan", "Emit migration maps and the scan-reduction report");
  fs::path plan_corpus, plan_pred, plan_profiles, plan_truth, plan_out;
  std::string plan_now;
  PlanThresholds plan_thr;
  pln->add_option("--corpus", plan_corpus)->required();
  pln->add_option("--predictions", plan_pred)->required();
  pln->add_option("--profiles", plan_profiles, "profiles JSON or CSV")->required();
  pln->add_option("--now", plan_now)->required();
  pln->add_option("--truth", plan_truth, "true labels CSV for the over-protection figure");
  pln->add_option("--x-threshold", plan_thr.x)->capture_default_str();
  pln->add_option("--user-x-threshold", plan_thr.user_x)->capture_default_str();
  pln->add_option("--y-threshold", plan_thr.y)->capture_default_str();
  pln->add_option("--out", plan_out)->required();

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline from a TOML config");
  fs::path run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_out, run_now, run_family;
  std::optional<double> run_x, run_y, run_user_x;
  std::optional<int> run_k;
  run->add_option("--config", run_config)->required();
  run->add_option("--seed", run_seed);
  run->add_option("--output-dir", run_out);
  run->add_option("--now", run_now);
  run->add_option("--family", run_family);
  run->add_option("--x-threshold", run_x);
  run->add_option("--y-threshold", run_y);
  run->add_option("--user-x-threshold", run_user_x);
  run->add_option("--k", run_k, "volume clusters");

  // features rank
  auto* feat = app.add_subcommand("features", "Feature analysis");
  feat->require_subcommand(1);
  auto* rank = feat->add_subcommand("rank", "Rank features by mutual information with the label");
  fs::path rank_dir;
  std::size_t rank_top = 10;
  int rank_bins = 10;
  rank->add_option("--training", rank_dir)->required();
  rank->add_option("--top", rank_top)->capture_default_str();
  rank->add_option("--bins", rank_bins)->capture_default_str();

  // cluster-volumes
  auto* clu = app.add_subcommand("cluster-volumes", "Cluster volume profiles and pick representatives");
  fs::path clu_profiles;
  int clu_k = 3;
  std::uint64_t clu_seed = 42;
  int clu_elbow = 0;
  clu->add_option("--profiles", clu_profiles)->required();
  clu->add_option("--k", clu_k)->capture_default_str();
  clu->add_option("--seed", clu_seed)->capture_default_str();
  clu->add_option("--elbow", clu_elbow, "also print the elbow curve for k = 1..N");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*scan) {
      const auto r = scan_volume(scan_root, scan_id);
      write_corpus(r.files, scan_out);
      if (!scan_skipped.empty()) {
        auto s = open_out(scan_skipped);
        write_skipped_csv(r.skipped, s);
      }
      std::cerr << r.files.size() << " files, " << r.skipped.size() << " skipped\n";
    } else if (*gen) {
      gen_spec.now = parse_now(gen_now);
      gen_spec.sensitive_rate = gen_rate;
      if (!(gen_scale > 0)) throw ConfigError("--scale must be positive");
      for (auto& v : gen_spec.volumes) v.files = static_cast<std::size_t>(std::llround(v.files * gen_scale));
      const auto s = gen_corpus(gen_spec, gen_dest);
      std::cout << "files,sensitive,non_sensitive,unknown\n"
                << s.files << ',' << s.sensitive << ',' << s.non_sensitive << ',' << s.unknown << '\n';
    } else if (*sample) {
      SamplingConfig cfg = sample_config.empty() ? SamplingConfig{} : load_sampling_config(sample_config);
      const Dictionary dict = compile_dictionary(sample_dict.empty() ? DictionarySpec{} : load_dictionary_spec(sample_dict));
      std::vector<FileMeta> corpus;
      if (sample_corpus.empty()) {
        corpus = scan_volume(sample_root, sample_volume).files;
      } else {
        for (auto& f : read_corpus(sample_corpus)) {
          if (f.volume_id == sample_volume) corpus.push_back(std::move(f));
        }
      }
      if (corpus.empty()) throw Error("no files for volume " + sample_volume);
      const auto outcome = progressive_sample(corpus, dict, LabelRule{}, cfg,
                                              filesystem_source({{sample_volume, sample_root}}), accuracy_trainer(cfg));
      LabelMap labels;
      for (const auto& [id, label] : outcome.labels) labels[key_of(corpus[id])] = label;
      std::vector<FileMeta> files;
      for (const auto id : outcome.training.ids) files.push_back(corpus[id]);
      TrainingData data;
      data.spec = fit_spec(files);
      data.x = encode_batch(files, data.spec);
      data.y = outcome.training.labels;
      write_training_set(data, sample_out);
      auto r = open_out(sample_out / "rounds.csv");
      write_rounds_csv(outcome.rounds, r);
      auto l = open_out(sample_out / "scan_labels.csv");
      write_labels_csv(labels, l);
      write_rounds_csv(outcome.rounds, std::cout);
    } else if (*trn) {
      auto data = read_training_set(train_dir);
      TrainConfig cfg = train_flags.config();
      cfg.fingerprint = data.spec.fingerprint();
      if (train_top > 0) data.x = keep_top_features(data.x, data.y, data.spec, train_top);
      if (!train_grid.empty()) {
        const auto g = grid_search(data.x, data.y, cfg, train_grid);
        cfg.C = g.best_C;
        std::cerr << "best C = " << csv::number(g.best_C) << '\n';
      }
      write_model(train(data.x, data.y, cfg), train_out);
    } else if (*evl) {
      const auto data = read_training_set(eval_dir);
      std::vector<std::pair<std::string, Metrics>> rows;
      if (!eval_model.empty()) {
        const auto model = read_model(eval_model);
        rows.emplace_back("model", evaluate(predict(model, data.x, data.spec.fingerprint()).labels, data.y));
      } else if (!eval_grid.empty()) {
        const auto g = grid_search(data.x, data.y, eval_flags.config(), eval_grid);
        for (const auto& [c, cv] : g.table) rows.emplace_back("C=" + csv::number(c), cv.mean);
      } else {
        const auto cv = cross_validate(data.x, data.y, eval_flags.config());
        for (std::size_t f = 0; f < cv.folds.size(); ++f) rows.emplace_back("fold" + std::to_string(f), cv.folds[f]);
        rows.emplace_back("mean", cv.mean);
      }
      write_metrics_csv(rows, std::cout);
    } else if (*prd) {
      const auto corpus = read_corpus(pred_corpus);
      const LabelMap scanned = pred_labels.empty() ? LabelMap{} : read_labels_csv(pred_labels);
      const auto preds = predict_corpus(corpus, read_model(pred_model), read_feature_spec(pred_spec), scanned);
      auto out = open_out(pred_out);
      write_predictions_csv(preds, out);
    } else if (*hot) {
      const auto corpus = read_corpus(hot_corpus);
      const auto samples = hot_iops.empty() ? std::vector<IopsSample>{} : load_iops(hot_iops);
      const auto sizes = hot_sizes.empty() ? std::map<std::string, std::uint64_t>{} : read_volume_sizes(hot_sizes);
      const auto profiles = aggregate_volumes(corpus, parse_now(hot_now), samples, sizes);
      auto out = open_out(hot_out);
      write_profiles_csv(profiles, out);
      if (!hot_json.empty()) {
        auto j = open_out(hot_json);
        write_profiles_json(profiles, j);
      }
    } else if (*pln) {
      std::ifstream pin(plan_pred, std::ios::binary);
      if (!pin) throw Error("cannot read " + plan_pred.string());
      PlanInputs in{read_corpus(plan_corpus), read_predictions_csv(pin), read_profiles(plan_profiles),
                    std::nullopt, parse_now(plan_now), plan_thr};
      if (!plan_truth.empty()) in.truth = read_labels_csv(plan_truth);
      std::cout << to_json(run_plan(in, plan_out)).dump(2) << '\n';
    } else if (*run) {
      PipelineConfig cfg = load_pipeline_config(run_config);
      if (run_seed) cfg.seed = *run_seed;
      if (run_out) cfg.output_dir = *run_out;
      if (run_now) cfg.now = parse_now(*run_now);
      if (run_family) cfg.train.family = model_family_from_string(*run_family);
      if (run_x) cfg.thresholds.x = *run_x;
      if (run_y) cfg.thresholds.y = *run_y;
      if (run_user_x) cfg.thresholds.user_x = *run_user_x;
      if (run_k) cfg.volume_clusters = *run_k;
      cfg.propagate_seed();
      const auto result = run_pipeline(cfg);
      write_rounds_csv(result.rounds, std::cout);
      if (result.holdout) {
        const std::vector<std::pair<std::string, Metrics>> rows = {{"holdout", *result.holdout}};
        write_metrics_csv(rows, std::cout);
      }
    } else if (*rank) {
      const auto data = read_training_set(rank_dir);
      RankOptions opts;
      opts.bins = rank_bins;
      const auto top = top_k(data.x, data.y, data.spec, std::min(rank_top, data.spec.size()), opts);
      std::cout << "rank,category,name,mi\n";
      for (std::size_t i = 0; i < top.size(); ++i) {
        std::cout << i + 1 << ',' << to_string(top[i].category) << ',' << csv::escape(top[i].name) << ','
                  << csv::number(top[i].mi) << '\n';
      }
    } else if (*clu) {
      const auto profiles = read_profiles(clu_profiles);
      write_volume_clusters_csv(cluster_volumes(profiles, clu_k, clu_seed), std::cout);
      if (clu_elbow > 0) {
        KMeansOptions opts;
        opts.seed = clu_seed;
        const auto curve = elbow(volume_points(profiles), 1, std::min<int>(clu_elbow, static_cast<int>(profiles.size())), opts);
        std::cout << "\nk,objective,explained\n";
        for (std::size_t i = 0; i < curve.ks.size(); ++i) {
          std::cout << curve.ks[i] << ',' << csv::number(curve.objectives[i]) << ',' << csv::number(curve.explained[i])
                    << '\n';
        }
        std::cout << "suggested_k," << curve.suggested_k << ",\n";
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
