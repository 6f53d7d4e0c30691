#include "stackinsights/sample.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "stackinsights/cluster.hpp"
#include "stackinsights/csv.hpp"
#include "stackinsights/rng.hpp"

namespace stackinsights {

namespace {

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

constexpr double kFractionSlack = 1e-12;

std::optional<std::vector<std::byte>> read_file_noatime(const std::filesystem::path& p) {
  int fd = ::open(p.c_str(), O_RDONLY | O_NOATIME | O_CLOEXEC);
  if (fd < 0 && errno == EPERM) fd = ::open(p.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) return std::nullopt;
  std::vector<std::byte> data;
  std::byte buf[65536];
  while (true) {
    const ssize_t got = ::read(fd, buf, sizeof buf);
    if (got < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      return std::nullopt;
    }
    if (got == 0) break;
    data.insert(data.end(), buf, buf + got);
  }
  ::close(fd);
  return data;
}

}  // namespace

void SamplingConfig::validate() const {
  if (!(initial_fraction > 0 && initial_fraction <= max_fraction && max_fraction <= 1)) {
    throw ConfigError("sampling: need 0 < initial_fraction <= max_fraction <= 1");
  }
  if (!(increment_fraction > 0)) throw ConfigError("sampling: increment_fraction must be positive");
  if (!(accuracy_delta_threshold >= 0)) throw ConfigError("sampling: accuracy_delta_threshold must be >= 0");
  if (file_cluster_k < 1) throw ConfigError("sampling: file_cluster_k must be >= 1");
  if (eval == Eval::KFold && folds < 2) throw ConfigError("sampling: folds must be >= 2");
  if (eval == Eval::Holdout && !(holdout_fraction > 0 && holdout_fraction < 1)) {
    throw ConfigError("sampling: holdout_fraction must be in (0, 1)");
  }
}

std::vector<std::size_t> proportional_counts(std::span<const std::size_t> sizes, double fraction) {
  if (!(fraction > 0 && fraction <= 1)) throw Error("proportional sample: fraction must be in (0, 1]");
  std::vector<std::size_t> counts(sizes.size(), 0);
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (total == 0) return counts;
  std::size_t largest = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    counts[c] = std::min(sizes[c], round_half_up(static_cast<double>(sizes[c]) * fraction));
    if (sizes[c] > sizes[largest]) largest = c;
  }
  const auto target = std::max<std::size_t>(1, round_half_up(static_cast<double>(total) * fraction));
  const auto drawn = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (drawn < target) {
    counts[largest] = std::min(sizes[largest], counts[largest] + (target - drawn));
  } else if (drawn > target) {
    counts[largest] -= std::min(counts[largest], drawn - target);
  }
  return counts;
}

ProportionalDraw proportional_sample(std::span<const std::vector<std::size_t>> clusters, double fraction,
                                     std::uint64_t seed) {
  std::vector<std::size_t> sizes;
  for (const auto& c : clusters) sizes.push_back(c.size());
  ProportionalDraw draw;
  draw.counts = proportional_counts(sizes, fraction);
  Rng rng(seed);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    std::vector<std::size_t> members = clusters[c];
    rng.shuffle(std::span<std::size_t>(members));
    draw.ids.insert(draw.ids.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(draw.counts[c]));
  }
  std::sort(draw.ids.begin(), draw.ids.end());
  return draw;
}

ContentSource filesystem_source(std::map<std::string, std::filesystem::path> volume_roots,
                                ExtractorRegistry registry) {
  return [roots = std::move(volume_roots), registry = std::move(registry)](const FileMeta& f) -> Extraction {
    const auto it = roots.find(f.volume_id);
    if (it == roots.end()) return {};
    const auto bytes = read_file_noatime(it->second / f.relative_path());
    if (!bytes) return {};
    return registry.extract(*bytes, f.extension);
  };
}

SampleTrainer accuracy_trainer(const SamplingConfig& config, TrainConfig train, FeatureOptions features) {
  return [config, train, features](std::span<const FileMeta> files, const LabelVector& labels) -> double {
    const auto pos = static_cast<int>((labels.array() == 1).count());
    const int smallest = std::min(pos, static_cast<int>(labels.size()) - pos);
    if (smallest < 2) return 0.0;
    const FeatureSpec spec = fit_spec(files, features);
    const FeatureMatrix x = encode_batch(files, spec);
    TrainConfig cfg = train;
    if (config.eval == SamplingConfig::Eval::KFold) {
      cfg.folds = std::min(config.folds, smallest);
      return cross_validate(x, labels, cfg).mean.accuracy;
    }
    // Stratified holdout: each class keeps at least one file on both sides.
    Rng rng(derive_seed(cfg.seed, "holdout"));
    std::vector<Eigen::Index> train_rows, test_rows;
    for (int cls : {0, 1}) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels(i) == cls) idx.push_back(i);
      }
      rng.shuffle(std::span<Eigen::Index>(idx));
      const auto n_test = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::ceil(config.holdout_fraction * static_cast<double>(idx.size()))), 1,
          idx.size() - 1);
      test_rows.insert(test_rows.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
      train_rows.insert(train_rows.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    LabelVector y_train(static_cast<Eigen::Index>(train_rows.size()));
    LabelVector y_test(static_cast<Eigen::Index>(test_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) y_train(static_cast<Eigen::Index>(i)) = labels(train_rows[i]);
    for (std::size_t i = 0; i < test_rows.size(); ++i) y_test(static_cast<Eigen::Index>(i)) = labels(test_rows[i]);
    const auto model = stackinsights::train(select_rows(x, train_rows), y_train, cfg);
    return evaluate(predict(model, select_rows(x, test_rows)).labels, y_test).accuracy;
  };
}

std::vector<int> cluster_files(std::span<const FileMeta> corpus, const SamplingConfig& config) {
  if (corpus.empty()) throw Error("cluster_files: empty corpus");
  FeatureOptions opts;
  opts.max_vocabulary = config.cluster_vocabulary;
  const FeatureSpec spec = fit_spec(corpus, opts);
  const FeatureMatrix x = encode_batch(corpus, spec);
  KMeansOptions km;
  km.k = std::min<int>(config.file_cluster_k, static_cast<int>(corpus.size()));
  km.seed = derive_seed(config.seed, "file-clusters");
  return kmeans(x, km).labels;
}

SamplingOutcome progressive_sample(std::span<const FileMeta> corpus, const Dictionary& dict, const LabelRule& rule,
                                   const SamplingConfig& config, const ContentSource& source,
                                   const SampleTrainer& trainer) {
  config.validate();
  return progressive_sample(corpus, cluster_files(corpus, config), dict, rule, config, source, trainer);
}

SamplingOutcome progressive_sample(std::span<const FileMeta> corpus, std::vector<int> file_clusters,
                                   const Dictionary& dict, const LabelRule& rule, const SamplingConfig& config,
                                   const ContentSource& source, const SampleTrainer& trainer) {
  config.validate();
  if (corpus.empty()) throw Error("progressive sample: empty corpus");
  if (file_clusters.size() != corpus.size()) throw Error("progressive sample: one cluster id per file required");

  SamplingOutcome out;
  out.file_clusters = std::move(file_clusters);
  const int k = *std::max_element(out.file_clusters.begin(), out.file_clusters.end()) + 1;
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    members[static_cast<std::size_t>(out.file_clusters[i])].push_back(i);
  }
  // Each cluster's draw order is fixed once, so every round extends the previous sample.
  Rng rng(derive_seed(config.seed, "sample"));
  std::vector<std::size_t> sizes;
  for (auto& m : members) {
    rng.shuffle(std::span<std::size_t>(m));
    sizes.push_back(m.size());
  }

  std::vector<std::size_t> taken(members.size(), 0);
  std::vector<std::size_t> sample;
  double previous_accuracy = 0;
  for (int r = 0;; ++r) {
    const double fraction = std::min(config.initial_fraction + r * config.increment_fraction, config.max_fraction);
    const bool at_budget = fraction >= config.max_fraction - kFractionSlack;
    const auto counts = proportional_counts(sizes, fraction);
    std::vector<std::size_t> fresh;
    for (std::size_t c = 0; c < members.size(); ++c) {
      const auto want = std::max(taken[c], counts[c]);
      fresh.insert(fresh.end(), members[c].begin() + static_cast<std::ptrdiff_t>(taken[c]),
                   members[c].begin() + static_cast<std::ptrdiff_t>(want));
      taken[c] = want;
    }
    const bool exhausted = sample.size() + fresh.size() == corpus.size();
    if (fresh.empty()) {
      if (!out.rounds.empty() && (exhausted || at_budget)) {
        out.rounds.back().stopped = true;
        out.rounds.back().stop_reason = exhausted ? "exhausted" : "budget";
        break;
      }
      continue;
    }
    std::sort(fresh.begin(), fresh.end());

    SamplingRound round;
    round.index = static_cast<int>(out.rounds.size());
    round.fraction = fraction;
    round.new_files = fresh.size();
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto id : fresh) {
      const Extraction text = source(corpus[id]);
      const ContentScanResult result = text.crawled ? scan_content(text.text, dict) : uncrawled_result(dict);
      out.labels[id] = label_file(result, rule);
    }
    round.scan_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sample.insert(sample.end(), fresh.begin(), fresh.end());
    std::sort(sample.begin(), sample.end());
    round.sample_ids = sample;

    std::vector<FileMeta> trainable;
    std::vector<int> y;
    for (const auto id : sample) {
      switch (out.labels.at(id)) {
        case SensitivityLabel::Sensitive:
          ++round.sensitive;
          trainable.push_back(corpus[id]);
          y.push_back(1);
          break;
        case SensitivityLabel::NonSensitive:
          ++round.non_sensitive;
          trainable.push_back(corpus[id]);
          y.push_back(0);
          break;
        case SensitivityLabel::Unknown:
          ++round.unknown;
          break;
      }
    }
    if (trainable.empty()) throw Error("no trainable labels");
    const LabelVector labels = Eigen::Map<const Eigen::VectorXi>(y.data(), static_cast<Eigen::Index>(y.size()));
    round.accuracy = trainer(trainable, labels);

    if (std::abs(round.accuracy - previous_accuracy) <= config.accuracy_delta_threshold) {
      round.stop_reason = "converged";
    } else if (at_budget) {
      round.stop_reason = "budget";
    } else if (exhausted) {
      round.stop_reason = "exhausted";
    }
    round.stopped = !round.stop_reason.empty();
    previous_accuracy = round.accuracy;
    out.rounds.push_back(std::move(round));
    if (out.rounds.back().stopped) break;
  }

  for (const auto id : sample) {
    const auto label = out.labels.at(id);
    if (label == SensitivityLabel::Unknown) continue;
    out.training.ids.push_back(id);
  }
  out.training.labels.resize(static_cast<Eigen::Index>(out.training.ids.size()));
  for (std::size_t i = 0; i < out.training.ids.size(); ++i) {
    out.training.labels(static_cast<Eigen::Index>(i)) =
        out.labels.at(out.training.ids[i]) == SensitivityLabel::Sensitive ? 1 : 0;
  }
  return out;
}

void write_rounds_csv(std::span<const SamplingRound> rounds, std::ostream& out) {
  out << "round,fraction,sample_size,new_files,sensitive,non_sensitive,unknown,accuracy,stopped,stop_reason\n";
  for (const auto& r : rounds) {
    out << r.index << ',' << csv::number(r.fraction) << ',' << r.sample_ids.size() << ',' << r.new_files << ','
        << r.sensitive << ',' << r.non_sensitive << ',' << r.unknown << ',' << csv::number(r.accuracy) << ','
        << (r.stopped ? "true" : "false") << ',' << r.stop_reason << '\n';
  }
}

}  // namespace stackinsights
