#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>
#include <json.hpp>

#include "stackinsights/scan.hpp"

namespace stackinsights {

using FeatureMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using LabelVector = Eigen::VectorXi;  // 1 = sensitive, 0 = non-sensitive

enum class FeatureCategory { Text, Path, Extension, SizeRelated, TimeRelated };

std::string_view to_string(FeatureCategory c);

struct NumericRange {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const NumericRange&) const = default;
};

struct FeatureOptions {
  int depth = 2;
  std::size_t min_token_count = 1;  // drop tokens seen fewer times in training
  std::size_t max_vocabulary = 0;   // 0 = unlimited; else keep top tokens by document frequency
};

inline constexpr std::array<std::string_view, 5> kNumericFeatureNames = {
    "file_size", "bytes_used", "last_accessed_diff", "changed_diff", "last_modified_diff"};

/// Frozen encoding: vocabulary, folder and extension lists, and the
/// normalization statistics, all taken from the training files.
///
/// Column layout is [tokens | folders | extensions | 5 numeric], where the
/// numeric block is (file_size, bytes_used) followed by the three time
/// differences to creation, in days.
class FeatureSpec {
 public:
  FeatureSpec() = default;
  FeatureSpec(int depth, std::vector<std::string> vocabulary, std::vector<double> token_scale,
              std::vector<std::string> folders, std::vector<std::string> extensions,
              std::array<NumericRange, 5> numeric);

  int depth() const { return depth_; }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& token_scale() const { return token_scale_; }
  const std::vector<std::string>& folders() const { return folders_; }
  const std::vector<std::string>& extensions() const { return extensions_; }
  const std::array<NumericRange, 5>& numeric() const { return numeric_; }

  std::size_t size() const { return vocabulary_.size() + folders_.size() + extensions_.size() + 5; }
  std::size_t folder_offset() const { return vocabulary_.size(); }
  std::size_t extension_offset() const { return folder_offset() + folders_.size(); }
  std::size_t numeric_offset() const { return extension_offset() + extensions_.size(); }

  FeatureCategory category_of(std::size_t column) const;
  std::string name_of(std::size_t column) const;

  int token_index(std::string_view token) const;
  int folder_index(std::string_view folder) const;
  int extension_index(std::string_view extension) const;

  // Hex FNV-1a of the canonical JSON form; models record it to detect mismatched specs.
  std::string fingerprint() const;

  bool operator==(const FeatureSpec& other) const;

 private:
  void build_index();

  int depth_ = 2;
  std::vector<std::string> vocabulary_;
  std::vector<double> token_scale_;
  std::vector<std::string> folders_;
  std::vector<std::string> extensions_;
  std::array<NumericRange, 5> numeric_{};
  std::unordered_map<std::string, int> token_index_, folder_index_, extension_index_;
};

struct FeatureVector {
  Eigen::SparseVector<double> values;
  bool time_clamped = false;  // a negative time difference was clamped to zero
};

// Lowercased name tokens with digits, punctuation and stop words removed; the
// extension is not part of the name.
std::vector<std::string> name_tokens(std::string_view file_name);

// Ancestor folders of `path` with depth <= `depth`, shallowest first.
std::vector<std::string> folder_prefixes(std::string_view path, int depth);

// Raw (unnormalized) numeric block; time differences clamped at zero.
std::array<double, 5> raw_numeric(const FileMeta& file, bool* clamped = nullptr);

FeatureSpec fit_spec(std::span<const FileMeta> training, const FeatureOptions& options = {});
FeatureVector encode(const FileMeta& file, const FeatureSpec& spec);
FeatureMatrix encode_batch(std::span<const FileMeta> files, const FeatureSpec& spec);

nlohmann::json to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const nlohmann::json& j);

// Sparse triplet CSV with header `row,col,value`.
void write_triplets(const FeatureMatrix& m, std::ostream& out);
FeatureMatrix read_triplets(std::istream& in, Eigen::Index rows, Eigen::Index cols);

}  // namespace stackinsights
