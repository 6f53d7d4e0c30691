#include "stackinsights/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "stackinsights/cluster.hpp"
#include "stackinsights/csv.hpp"

namespace stackinsights {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return in;
}

nlohmann::json read_json(const fs::path& p) {
  auto in = open_in(p);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

ScanResult scan_volumes(std::span<const VolumeRoot> volumes) {
  ScanResult all;
  for (const auto& v : volumes) {
    auto r = scan_volume(v.root, v.id);
    all.files.insert(all.files.end(), std::make_move_iterator(r.files.begin()), std::make_move_iterator(r.files.end()));
    for (auto& s : r.skipped) all.skipped.push_back({v.id + ":" + s.path, s.reason});
  }
  return all;
}

void write_skipped_csv(std::span<const SkippedFile> skipped, std::ostream& out) {
  out << "path,reason\n";
  for (const auto& s : skipped) out << csv::escape(s.path) << ',' << csv::escape(s.reason) << '\n';
}

VolumeClusters cluster_volumes(std::span<const VolumeProfile> profiles, int k, std::uint64_t seed) {
  if (profiles.empty()) throw Error("cluster-volumes: no volume profiles");
  const Eigen::MatrixXd points = volume_points(profiles);
  KMeansOptions opts;
  opts.k = std::min<int>(k, static_cast<int>(profiles.size()));
  opts.seed = seed;
  const auto fit = kmeans(points, opts);
  VolumeClusters c;
  c.labels = fit.labels;
  c.representative.assign(profiles.size(), false);
  for (const auto& p : profiles) c.volume_ids.push_back(p.volume_id);
  for (int cl = 0; cl < fit.k; ++cl) {
    c.representative[static_cast<std::size_t>(representative(points, fit.labels, cl))] = true;
  }
  return c;
}

void write_volume_clusters_csv(const VolumeClusters& c, std::ostream& out) {
  out << "volume_id,cluster,is_representative\n";
  for (std::size_t i = 0; i < c.volume_ids.size(); ++i) {
    out << csv::escape(c.volume_ids[i]) << ',' << c.labels[i] << ',' << (c.representative[i] ? "true" : "false")
        << '\n';
  }
}

FileKey key_of(const FileMeta& f) { return {f.volume_id, f.path, f.file_name}; }

void write_labels_csv(const LabelMap& labels, std::ostream& out) {
  out << "volume_id,path,file_name,label\n";
  for (const auto& [k, label] : labels) {
    out << csv::escape(std::get<0>(k)) << ',' << csv::escape(std::get<1>(k)) << ',' << csv::escape(std::get<2>(k))
        << ',' << to_string(label) << '\n';
  }
}

LabelMap read_labels_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      csv::split_line(line) != std::vector<std::string>{"volume_id", "path", "file_name", "label"}) {
    throw Error("labels csv: expected header volume_id,path,file_name,label");
  }
  LabelMap labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split_line(line);
    if (f.size() != 4) throw Error("labels csv row " + std::to_string(row) + ": expected 4 fields");
    try {
      labels[{f[0], f[1], f[2]}] = label_from_string(f[3]);
    } catch (const std::exception& e) {
      throw Error("labels csv row " + std::to_string(row) + ": " + e.what());
    }
  }
  return labels;
}

LabelMap read_labels_csv(const fs::path& src) {
  auto in = open_in(src);
  return read_labels_csv(in);
}

void write_training_set(const TrainingData& data, const fs::path& dir) {
  fs::create_directories(dir);
  open_out(dir / "feature_spec.json") << to_json(data.spec).dump(2) << '\n';
  auto m = open_out(dir / "matrix.csv");
  write_triplets(data.x, m);
  auto l = open_out(dir / "labels.csv");
  l << "label\n";
  for (Eigen::Index i = 0; i < data.y.size(); ++i) l << data.y(i) << '\n';
}

TrainingData read_training_set(const fs::path& dir) {
  TrainingData d;
  d.spec = read_feature_spec(dir / "feature_spec.json");
  auto l = open_in(dir / "labels.csv");
  std::string line;
  if (!std::getline(l, line) || (line != "label" && line != "label\r")) throw Error("labels.csv: expected header 'label'");
  std::vector<int> y;
  while (std::getline(l, line)) {
    if (line.empty()) continue;
    if (line.back() == '\r') line.pop_back();
    if (line != "0" && line != "1") throw Error("labels.csv row " + std::to_string(y.size() + 2) + ": label must be 0 or 1");
    y.push_back(line == "1");
  }
  d.y = Eigen::Map<const Eigen::VectorXi>(y.data(), static_cast<Eigen::Index>(y.size()));
  auto m = open_in(dir / "matrix.csv");
  d.x = read_triplets(m, d.y.size(), static_cast<Eigen::Index>(d.spec.size()));
  return d;
}

void write_model(const TrainedModel& model, const fs::path& dest) { open_out(dest) << to_json(model).dump() << '\n'; }

TrainedModel read_model(const fs::path& src) { return model_from_json(read_json(src)); }

FeatureSpec read_feature_spec(const fs::path& src) { return feature_spec_from_json(read_json(src)); }

std::vector<FilePrediction> predict_corpus(std::span<const FileMeta> corpus, const TrainedModel& model,
                                           const FeatureSpec& spec, const LabelMap& scanned,
                                           const ExtractorRegistry& registry) {
  std::vector<FilePrediction> out(corpus.size());
  std::vector<FileMeta> rest;
  std::vector<std::size_t> rest_index;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& f = corpus[i];
    auto& p = out[i];
    p.volume_id = f.volume_id;
    p.path = f.path;
    p.file_name = f.file_name;
    const auto it = scanned.find(key_of(f));
    if (it != scanned.end()) {
      p.source = PredictionSource::Scan;
      p.label = it->second;
      p.score = it->second == SensitivityLabel::Sensitive ? 1.0 : 0.0;
      p.classifiable = it->second != SensitivityLabel::Unknown;
    } else {
      p.source = PredictionSource::Model;
      p.classifiable = registry.supports(f.extension);
      rest.push_back(f);
      rest_index.push_back(i);
    }
  }
  if (!rest.empty()) {
    const Prediction pred = predict(model, encode_batch(rest, spec), spec.fingerprint());
    for (std::size_t k = 0; k < rest.size(); ++k) {
      auto& p = out[rest_index[k]];
      p.label = pred.labels(static_cast<Eigen::Index>(k)) == 1 ? SensitivityLabel::Sensitive
                                                              : SensitivityLabel::NonSensitive;
      p.score = pred.scores(static_cast<Eigen::Index>(k));
    }
  }
  return out;
}

void write_metrics_csv(std::span<const std::pair<std::string, Metrics>> rows, std::ostream& out) {
  out << "name,tp,fp,fn,tn,accuracy,precision,recall,f1\n";
  for (const auto& [name, m] : rows) {
    out << csv::escape(name) << ',' << m.tp << ',' << m.fp << ',' << m.fn << ',' << m.tn << ','
        << csv::number(m.accuracy) << ',' << csv::number(m.precision) << ',' << csv::number(m.recall) << ','
        << csv::number(m.f1) << '\n';
  }
}

ScanReductionReport run_plan(const PlanInputs& in, const fs::path& dest) {
  fs::create_directories(dest);
  std::map<std::string, double> density;
  for (const auto& p : in.profiles) density[p.volume_id] = p.io_density;
  const auto scores = volume_scores(in.predictions);
  const auto recs = classify(scores, density, in.thresholds.x, in.thresholds.y);
  const auto users = user_map(in.predictions, in.corpus, in.now);
  emit_maps(recs, users, in.thresholds.x, in.thresholds.user_x, in.thresholds.y, dest);

  std::size_t sensitive = 0, fp = 0, truth_known = 0, truth_sensitive = 0;
  for (const auto& p : in.predictions) {
    const bool predicted = p.label == SensitivityLabel::Sensitive;
    sensitive += predicted;
    if (!in.truth) continue;
    const auto it = in.truth->find({p.volume_id, p.path, p.file_name});
    if (it == in.truth->end() || it->second == SensitivityLabel::Unknown) continue;
    ++truth_known;
    truth_sensitive += it->second == SensitivityLabel::Sensitive;
    fp += predicted && it->second == SensitivityLabel::NonSensitive;
  }
  const std::size_t total = in.predictions.size();
  const double share = in.truth && truth_known > 0
                           ? static_cast<double>(truth_sensitive) / static_cast<double>(truth_known)
                           : static_cast<double>(sensitive) / static_cast<double>(std::max<std::size_t>(total, 1));
  ScanReductionReport report = scan_reduction_report(total, total - sensitive, fp, share);
  report.over_protection_known = in.truth.has_value();
  open_out(dest / "scan_reduction.json") << to_json(report).dump(2) << '\n';

  auto vs = open_out(dest / "volume_scores.csv");
  vs << "volume_id,total_files,sensitive_files,sensitivity\n";
  for (const auto& s : scores) {
    vs << csv::escape(s.id) << ',' << s.total_count << ',' << s.sensitive_count << ',' << format_score(s.score) << '\n';
  }
  return report;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  const Dictionary dict =
      compile_dictionary(config.dictionary ? load_dictionary_spec(*config.dictionary) : DictionarySpec{});
  const fs::path out = config.output_dir;
  fs::create_directories(out);

  PipelineResult result;
  result.timing = {{"stages", nlohmann::json::object()}};
  const auto stage = [&](const std::string& name, auto&& body) {
    const auto t0 = Clock::now();
    try {
      body();
    } catch (const ConfigError&) {
      throw;
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
    result.timing["stages"][name] = seconds_since(t0);
  };

  std::vector<FileMeta> corpus;
  stage("scan", [&] {
    auto scanned = scan_volumes(config.volumes);
    corpus = std::move(scanned.files);
    if (corpus.empty()) throw Error("no files found on any volume");
    write_corpus(corpus, out / "corpus.jsonl");
    auto s = open_out(out / "skipped.csv");
    write_skipped_csv(scanned.skipped, s);
  });

  std::vector<VolumeProfile> profiles;
  stage("hotness", [&] {
    const auto samples = config.iops ? load_iops(*config.iops) : std::vector<IopsSample>{};
    const auto sizes = config.volume_sizes ? read_volume_sizes(*config.volume_sizes)
                                           : std::map<std::string, std::uint64_t>{};
    profiles = aggregate_volumes(corpus, *config.now, samples, sizes);
    auto c = open_out(out / "profiles.csv");
    write_profiles_csv(profiles, c);
    auto j = open_out(out / "profiles.json");
    write_profiles_json(profiles, j);
  });

  VolumeClusters clusters;
  stage("cluster", [&] {
    clusters = cluster_volumes(profiles, config.volume_clusters, derive_seed(config.seed, "cluster-volumes"));
    auto c = open_out(out / "volume_clusters.csv");
    write_volume_clusters_csv(clusters, c);
  });

  LabelMap scanned;
  std::vector<FileMeta> training_files;
  double content_scan_seconds = 0;
  std::size_t sampled = 0;
  stage("sample", [&] {
    std::vector<FileMeta> pool;
    if (config.scope == SampleScope::All) {
      pool = corpus;
    } else {
      std::set<std::string> reps;
      for (std::size_t i = 0; i < clusters.volume_ids.size(); ++i) {
        if (clusters.representative[i]) reps.insert(clusters.volume_ids[i]);
      }
      for (const auto& f : corpus) {
        if (reps.count(f.volume_id)) pool.push_back(f);
      }
    }
    std::map<std::string, fs::path> roots;
    for (const auto& v : config.volumes) roots[v.id] = v.root;
    const auto outcome = progressive_sample(pool, dict, config.label_rule, config.sampling, filesystem_source(roots),
                                            accuracy_trainer(config.sampling, config.train, config.features));
    for (const auto& [id, label] : outcome.labels) scanned[key_of(pool[id])] = label;
    for (const auto id : outcome.training.ids) training_files.push_back(pool[id]);
    for (const auto& r : outcome.rounds) content_scan_seconds += r.scan_seconds;
    sampled = outcome.labels.size();
    result.rounds = outcome.rounds;
    auto r = open_out(out / "rounds.csv");
    write_rounds_csv(outcome.rounds, r);
    auto l = open_out(out / "labels.csv");
    write_labels_csv(scanned, l);
  });

  TrainedModel model;
  FeatureSpec spec;
  stage("train", [&] {
    TrainingData data;
    data.spec = fit_spec(training_files, config.features);
    data.x = encode_batch(training_files, data.spec);
    data.y.resize(static_cast<Eigen::Index>(training_files.size()));
    for (std::size_t i = 0; i < training_files.size(); ++i) {
      data.y(static_cast<Eigen::Index>(i)) = scanned.at(key_of(training_files[i])) == SensitivityLabel::Sensitive;
    }
    write_training_set(data, out / "training");
    TrainConfig tc = config.train;
    tc.fingerprint = data.spec.fingerprint();
    model = train(data.x, data.y, tc);
    write_model(model, out / "model.json");
    spec = std::move(data.spec);
  });

  std::vector<FilePrediction> predictions;
  double predict_seconds = 0;
  stage("predict", [&] {
    const auto t0 = Clock::now();
    predictions = predict_corpus(corpus, model, spec, scanned);
    predict_seconds = seconds_since(t0);
    auto p = open_out(out / "predictions.csv");
    write_predictions_csv(predictions, p);
  });

  std::optional<LabelMap> truth;
  if (config.truth) {
    stage("evaluate", [&] {
      truth = read_labels_csv(*config.truth);
      std::vector<int> predicted, actual;
      for (const auto& p : predictions) {
        if (p.source != PredictionSource::Model) continue;
        const auto it = truth->find({p.volume_id, p.path, p.file_name});
        if (it == truth->end() || it->second == SensitivityLabel::Unknown) continue;
        predicted.push_back(p.label == SensitivityLabel::Sensitive);
        actual.push_back(it->second == SensitivityLabel::Sensitive);
      }
      if (predicted.empty()) throw Error("no model-predicted files with known true labels");
      const auto m = evaluate(Eigen::Map<const Eigen::VectorXi>(predicted.data(), static_cast<Eigen::Index>(predicted.size())),
                              Eigen::Map<const Eigen::VectorXi>(actual.data(), static_cast<Eigen::Index>(actual.size())));
      result.holdout = m;
      const std::vector<std::pair<std::string, Metrics>> rows = {{"holdout", m}};
      auto o = open_out(out / "metrics.csv");
      write_metrics_csv(rows, o);
    });
  }

  stage("plan", [&] {
    PlanInputs in{corpus, predictions, profiles, truth, *config.now, config.thresholds};
    run_plan(in, out);
  });

  const double extrapolated =
      sampled > 0 ? content_scan_seconds * static_cast<double>(corpus.size()) / static_cast<double>(sampled) : 0.0;
  result.timing["files"] = corpus.size();
  result.timing["content_scanned_files"] = sampled;
  result.timing["content_scan_seconds"] = content_scan_seconds;
  result.timing["predict_seconds"] = predict_seconds;
  result.timing["extrapolated_full_scan_seconds"] = extrapolated;
  result.timing["scan_plus_predict_over_full_scan"] =
      extrapolated > 0 ? (content_scan_seconds + predict_seconds) / extrapolated : 0.0;
  open_out(out / "timing.json") << result.timing.dump(2) << '\n';
  return result;
}

}  // namespace stackinsights
