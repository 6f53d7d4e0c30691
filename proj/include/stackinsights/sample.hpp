#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stackinsights/dictionary.hpp"
#include "stackinsights/features.hpp"
#include "stackinsights/learn.hpp"
#include "stackinsights/scan.hpp"

namespace stackinsights {

struct SamplingConfig {
  enum class Eval { KFold, Holdout };

  double initial_fraction = 0.01;
  double increment_fraction = 0.01;
  double accuracy_delta_threshold = 0.005;
  double max_fraction = 0.10;
  int file_cluster_k = 8;
  std::size_t cluster_vocabulary = 500;
  std::uint64_t seed = 42;
  Eval eval = Eval::KFold;
  int folds = 5;
  double holdout_fraction = 0.2;

  void validate() const;
};

// Round-half-up share of each cluster, with the residual against the rounded
// overall target moved onto the largest cluster; every count is capped at its
// cluster's size. The overall target is at least one file.
std::vector<std::size_t> proportional_counts(std::span<const std::size_t> sizes, double fraction);

struct ProportionalDraw {
  std::vector<std::size_t> counts;
  std::vector<std::size_t> ids;  // sorted
};

// Uniform draw without replacement inside each cluster of member ids.
ProportionalDraw proportional_sample(std::span<const std::vector<std::size_t>> clusters, double fraction,
                                     std::uint64_t seed);

struct SamplingRound {
  int index = 0;
  double fraction = 0;
  std::vector<std::size_t> sample_ids;  // cumulative, sorted
  std::size_t new_files = 0;
  std::size_t sensitive = 0, non_sensitive = 0, unknown = 0;  // cumulative
  double accuracy = 0;
  double scan_seconds = 0;  // content scanning of this round's new files
  bool stopped = false;
  std::string stop_reason;  // converged | budget | exhausted
};

struct TrainingSet {
  std::vector<std::size_t> ids;  // corpus indices of trainable (non-Unknown) files
  LabelVector labels;
};

struct SamplingOutcome {
  std::vector<int> file_clusters;
  std::vector<SamplingRound> rounds;
  std::map<std::size_t, SensitivityLabel> labels;  // every content-scanned file
  TrainingSet training;
};

// Extracts the text of one corpus file.
using ContentSource = std::function<Extraction(const FileMeta&)>;
// Accuracy of a model trained on the labeled files.
using SampleTrainer = std::function<double(std::span<const FileMeta>, const LabelVector&)>;

// Reads files below their volume's root, without updating access times.
ContentSource filesystem_source(std::map<std::string, std::filesystem::path> volume_roots,
                                ExtractorRegistry registry = ExtractorRegistry::with_defaults());

// Trains `train.family` (a random forest by default) and scores it by k-fold
// cross-validation, with folds reduced to the smallest class count, or by a
// stratified holdout. Scores 0 when a class has fewer than two files.
SampleTrainer accuracy_trainer(const SamplingConfig& config, TrainConfig train = {}, FeatureOptions features = {});

// Metadata clusters of the whole corpus used for proportional draws.
std::vector<int> cluster_files(std::span<const FileMeta> corpus, const SamplingConfig& config);

SamplingOutcome progressive_sample(std::span<const FileMeta> corpus, const Dictionary& dict, const LabelRule& rule,
                                   const SamplingConfig& config, const ContentSource& source,
                                   const SampleTrainer& trainer);

// Same, with precomputed file clusters.
SamplingOutcome progressive_sample(std::span<const FileMeta> corpus, std::vector<int> file_clusters,
                                   const Dictionary& dict, const LabelRule& rule, const SamplingConfig& config,
                                   const ContentSource& source, const SampleTrainer& trainer);

// `round,fraction,sample_size,new_files,sensitive,non_sensitive,unknown,accuracy,stopped,stop_reason`
void write_rounds_csv(std::span<const SamplingRound> rounds, std::ostream& out);

}  // namespace stackinsights
