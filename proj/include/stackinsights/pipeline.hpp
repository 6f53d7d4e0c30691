#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stackinsights/config.hpp"
#include "stackinsights/plan.hpp"

namespace stackinsights {

// A failure inside a named pipeline stage; the CLI maps it to exit code 3.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Scans every volume in order; records are grouped by volume, each group
// sorted by (path, file_name).
ScanResult scan_volumes(std::span<const VolumeRoot> volumes);

void write_skipped_csv(std::span<const SkippedFile> skipped, std::ostream& out);

struct VolumeClusters {
  std::vector<std::string> volume_ids;
  std::vector<int> labels;
  std::vector<bool> representative;
};

VolumeClusters cluster_volumes(std::span<const VolumeProfile> profiles, int k, std::uint64_t seed);
void write_volume_clusters_csv(const VolumeClusters& c, std::ostream& out);

// Labels keyed by (volume_id, path, file_name).
using FileKey = std::tuple<std::string, std::string, std::string>;
using LabelMap = std::map<FileKey, SensitivityLabel>;

FileKey key_of(const FileMeta& f);
// `volume_id,path,file_name,label`
void write_labels_csv(const LabelMap& labels, std::ostream& out);
LabelMap read_labels_csv(std::istream& in);
LabelMap read_labels_csv(const std::filesystem::path& src);

struct TrainingData {
  FeatureSpec spec;
  FeatureMatrix x;
  LabelVector y;
};

// Directory holding feature_spec.json, matrix.csv (row,col,value) and labels.csv.
void write_training_set(const TrainingData& data, const std::filesystem::path& dir);
TrainingData read_training_set(const std::filesystem::path& dir);

void write_model(const TrainedModel& model, const std::filesystem::path& dest);
TrainedModel read_model(const std::filesystem::path& src);
FeatureSpec read_feature_spec(const std::filesystem::path& src);

// Content-scanned files keep their scan label; every other file gets the
// model's prediction. Files whose extension has no extractor are marked
// non-classifiable.
std::vector<FilePrediction> predict_corpus(std::span<const FileMeta> corpus, const TrainedModel& model,
                                           const FeatureSpec& spec, const LabelMap& scanned,
                                           const ExtractorRegistry& registry = ExtractorRegistry::with_defaults());

void write_metrics_csv(std::span<const std::pair<std::string, Metrics>> rows, std::ostream& out);

struct PlanInputs {
  std::vector<FileMeta> corpus;
  std::vector<FilePrediction> predictions;
  std::vector<VolumeProfile> profiles;
  std::optional<LabelMap> truth;
  Timestamp now{};
  PlanThresholds thresholds;
};

// Writes the maps and scan_reduction.json; returns the report.
ScanReductionReport run_plan(const PlanInputs& in, const std::filesystem::path& dest);

struct PipelineResult {
  std::vector<SamplingRound> rounds;
  std::optional<Metrics> holdout;  // model predictions against the truth manifest
  nlohmann::json timing;
};

// Runs every stage and writes all artifacts under config.output_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace stackinsights
