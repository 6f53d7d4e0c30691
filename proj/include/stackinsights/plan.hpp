#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stackinsights/dictionary.hpp"
#include "stackinsights/learn.hpp"
#include "stackinsights/scan.hpp"

namespace stackinsights {

enum class PredictionSource { Scan, Model };

struct FilePrediction {
  std::string volume_id;
  std::string path;
  std::string file_name;
  PredictionSource source = PredictionSource::Model;
  SensitivityLabel label = SensitivityLabel::NonSensitive;
  double score = 0;
  bool classifiable = true;  // content could be (or was) scanned

  bool operator==(const FilePrediction&) const = default;
};

// `volume_id,path,file_name,source,label,score,classifiable`
void write_predictions_csv(std::span<const FilePrediction> predictions, std::ostream& out);
std::vector<FilePrediction> read_predictions_csv(std::istream& in);

enum class Subject { Volume, UserFolder };

struct SensitivityScore {
  Subject subject = Subject::Volume;
  std::string id;
  std::size_t sensitive_count = 0;
  std::size_t total_count = 0;
  std::size_t non_classifiable_count = 0;
  double score = 0;  // sensitive / total; Unknown files count as not sensitive
};

std::string format_score(double score);  // four decimals

// One score per volume, in id order.
std::vector<SensitivityScore> volume_scores(std::span<const FilePrediction> predictions);

enum class Quadrant { PublicCloudCandidate, PrivateOrOnPremise, NeedsDomainReview };

std::string_view to_string(Quadrant q);

// Public-cloud candidate only when strictly below both thresholds.
inline Quadrant quadrant(double sensitivity, double hotness, double x_threshold, double y_threshold) {
  return sensitivity < y_threshold && hotness < x_threshold ? Quadrant::PublicCloudCandidate
                                                            : Quadrant::PrivateOrOnPremise;
}

struct Recommendation {
  std::string id;
  double sensitivity = 0;
  double hotness = 0;
  Quadrant quadrant = Quadrant::PrivateOrOnPremise;
  double x_threshold = 0;
  double y_threshold = 0;
};

// Subjects whose files are mostly non-classifiable go to NeedsDomainReview.
// Throws when a subject has no hotness value.
std::vector<Recommendation> classify(std::span<const SensitivityScore> scores,
                                     const std::map<std::string, double>& hotness, double x_threshold,
                                     double y_threshold);

struct UserPoint {
  std::string volume_id;
  std::string user_folder;
  std::size_t file_count = 0;
  std::size_t sensitive_count = 0;
  std::size_t non_classifiable_count = 0;
  double sensitivity = 0;
  double hotness = 0;  // 1 - share of files not accessed in the past year

  std::string id() const { return volume_id + "/" + user_folder; }
};

// One point per (volume, user folder) that holds files; files at a volume
// root have no user folder and are left out.
std::vector<UserPoint> user_map(std::span<const FilePrediction> predictions, std::span<const FileMeta> corpus,
                                Timestamp now);

struct ScanReductionReport {
  std::size_t total = 0;
  std::size_t predicted_sensitive = 0;
  std::size_t predicted_non_sensitive = 0;
  std::size_t false_positives = 0;
  double rescan_fraction = 0;
  double predicted_sensitive_fraction = 0;
  double over_protected_fraction = 0;
  double sensitive_share = 0;
  double baseline_over_protection = 0;  // p * (1 - p) for random labeling
  bool over_protection_known = true;     // false when no true labels were available
};

// Over-protection of uniformly random labeling at sensitive share p.
inline double baseline_over_protection(double p) { return p * (1.0 - p); }

ScanReductionReport scan_reduction_report(std::size_t total, std::size_t predicted_non_sensitive,
                                          std::size_t false_positives, double sensitive_share);
// From a confusion matrix; the sensitive share is the true one.
ScanReductionReport scan_reduction_report(const Metrics& confusion);
nlohmann::json to_json(const ScanReductionReport& r);

struct MapPoint {
  std::string id;
  double sensitivity = 0;
  double hotness = 0;
  Quadrant quadrant = Quadrant::PrivateOrOnPremise;
};

struct MapStyle {
  std::string title;
  std::string hotness_unit;  // carried into the CSV so levels are not mixed
  double x_threshold = 0;
  double y_threshold = 0;
};

// Writes `<stem>.svg` and `<stem>.csv` under `dest`; output bytes depend only on the inputs.
void emit_map(std::span<const MapPoint> points, const MapStyle& style, const std::filesystem::path& dest,
              std::string_view stem);
void write_map_csv(std::span<const MapPoint> points, const MapStyle& style, std::ostream& out);
void write_map_svg(std::span<const MapPoint> points, const MapStyle& style, std::ostream& out);

// volume_map.{svg,csv} and user_map.{svg,csv}.
void emit_maps(std::span<const Recommendation> volumes, std::span<const UserPoint> users, double x_threshold,
               double user_x_threshold, double y_threshold, const std::filesystem::path& dest);

}  // namespace stackinsights
