#include "stackinsights/features.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "stackinsights/csv.hpp"
#include "stackinsights/dictionary.hpp"
#include "stackinsights/rng.hpp"

namespace stackinsights {

namespace {

constexpr int kSpecVersion = 1;

double normalize(double v, const NumericRange& r) {
  if (!(r.max > r.min)) return 0.0;
  v = std::clamp(v, r.min, r.max);
  return (v - r.min) / (r.max - r.min);
}

std::string display_extension(const std::string& ext) { return ext.empty() ? "<none>" : ext; }

}  // namespace

std::string_view to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::Text: return "Text";
    case FeatureCategory::Path: return "Path";
    case FeatureCategory::Extension: return "Extension";
    case FeatureCategory::SizeRelated: return "SizeRelated";
    case FeatureCategory::TimeRelated: return "TimeRelated";
  }
  return "Text";
}

FeatureSpec::FeatureSpec(int depth, std::vector<std::string> vocabulary, std::vector<double> token_scale,
                         std::vector<std::string> folders, std::vector<std::string> extensions,
                         std::array<NumericRange, 5> numeric)
    : depth_(depth),
      vocabulary_(std::move(vocabulary)),
      token_scale_(std::move(token_scale)),
      folders_(std::move(folders)),
      extensions_(std::move(extensions)),
      numeric_(numeric) {
  if (depth_ < 1) throw Error("feature spec: depth must be >= 1");
  if (token_scale_.size() != vocabulary_.size()) throw Error("feature spec: token scale length mismatch");
  for (const auto& r : numeric_) {
    if (r.min > r.max) throw Error("feature spec: numeric min exceeds max");
  }
  build_index();
}

void FeatureSpec::build_index() {
  auto fill = [](const std::vector<std::string>& items, std::unordered_map<std::string, int>& index,
                 const char* what) {
    index.clear();
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!index.emplace(items[i], static_cast<int>(i)).second) {
        throw Error(std::string("feature spec: duplicate ") + what + " '" + items[i] + "'");
      }
    }
  };
  fill(vocabulary_, token_index_, "token");
  fill(folders_, folder_index_, "folder");
  fill(extensions_, extension_index_, "extension");
}

int FeatureSpec::token_index(std::string_view token) const {
  auto it = token_index_.find(std::string(token));
  return it == token_index_.end() ? -1 : it->second;
}

int FeatureSpec::folder_index(std::string_view folder) const {
  auto it = folder_index_.find(std::string(folder));
  return it == folder_index_.end() ? -1 : it->second;
}

int FeatureSpec::extension_index(std::string_view extension) const {
  auto it = extension_index_.find(std::string(extension));
  return it == extension_index_.end() ? -1 : it->second;
}

FeatureCategory FeatureSpec::category_of(std::size_t column) const {
  if (column < folder_offset()) return FeatureCategory::Text;
  if (column < extension_offset()) return FeatureCategory::Path;
  if (column < numeric_offset()) return FeatureCategory::Extension;
  if (column < numeric_offset() + 2) return FeatureCategory::SizeRelated;
  if (column < size()) return FeatureCategory::TimeRelated;
  throw Error("feature column out of range: " + std::to_string(column));
}

std::string FeatureSpec::name_of(std::size_t column) const {
  switch (category_of(column)) {
    case FeatureCategory::Text: return vocabulary_[column];
    case FeatureCategory::Path: return folders_[column - folder_offset()];
    case FeatureCategory::Extension: return display_extension(extensions_[column - extension_offset()]);
    default: return std::string(kNumericFeatureNames[column - numeric_offset()]);
  }
}

std::string FeatureSpec::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(*this).dump())));
  return buf;
}

bool FeatureSpec::operator==(const FeatureSpec& o) const {
  return depth_ == o.depth_ && vocabulary_ == o.vocabulary_ && token_scale_ == o.token_scale_ &&
         folders_ == o.folders_ && extensions_ == o.extensions_ && numeric_ == o.numeric_;
}

std::vector<std::string> name_tokens(std::string_view file_name) {
  std::string_view stem = file_name;
  if (const auto dot = stem.rfind('.'); dot != std::string_view::npos) stem = stem.substr(0, dot);
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !is_stop_word(cur)) tokens.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : stem) {
    if (std::isdigit(c)) continue;
    if (std::isalpha(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> folder_prefixes(std::string_view path, int depth) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (static_cast<int>(out.size()) < depth && start < path.size()) {
    std::size_t slash = path.find('/', start);
    if (slash == std::string_view::npos) slash = path.size();
    if (slash > start) out.emplace_back(path.substr(0, slash));
    start = slash + 1;
  }
  return out;
}

std::array<double, 5> raw_numeric(const FileMeta& f, bool* clamped) {
  bool neg = false;
  auto diff = [&](Timestamp t) {
    const double d = days_between(f.created, t);
    if (d < 0) {
      neg = true;
      return 0.0;
    }
    return d;
  };
  std::array<double, 5> v = {static_cast<double>(f.file_size), static_cast<double>(f.bytes_used),
                             diff(f.last_accessed), diff(f.changed), diff(f.last_modified)};
  if (clamped) *clamped = neg;
  return v;
}

FeatureSpec fit_spec(std::span<const FileMeta> training, const FeatureOptions& options) {
  if (training.empty()) throw Error("fit_spec: empty training set");
  if (options.depth < 1) throw ConfigError("fit_spec: depth must be >= 1");

  struct TokenStats {
    std::size_t total = 0, docs = 0;
    double max_count = 0;
  };
  std::map<std::string, TokenStats> tokens;
  std::set<std::string> folders, extensions;
  std::array<NumericRange, 5> numeric;
  for (std::size_t k = 0; k < 5; ++k) {
    numeric[k] = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  }

  for (const auto& f : training) {
    std::map<std::string, std::size_t> counts;
    for (auto& t : name_tokens(f.file_name)) ++counts[t];
    for (const auto& [t, n] : counts) {
      auto& s = tokens[t];
      s.total += n;
      s.docs += 1;
      s.max_count = std::max(s.max_count, static_cast<double>(n));
    }
    for (auto& p : folder_prefixes(f.path, options.depth)) folders.insert(std::move(p));
    extensions.insert(f.extension);
    const auto v = raw_numeric(f);
    for (std::size_t k = 0; k < 5; ++k) {
      numeric[k].min = std::min(numeric[k].min, v[k]);
      numeric[k].max = std::max(numeric[k].max, v[k]);
    }
  }

  std::vector<std::pair<std::string, TokenStats>> kept;
  for (auto& [t, s] : tokens) {
    if (s.total >= options.min_token_count) kept.emplace_back(t, s);
  }
  if (options.max_vocabulary > 0 && kept.size() > options.max_vocabulary) {
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second.docs > b.second.docs; });
    kept.resize(options.max_vocabulary);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  std::vector<std::string> vocabulary;
  std::vector<double> scale;
  for (auto& [t, s] : kept) {
    vocabulary.push_back(t);
    scale.push_back(s.max_count);
  }
  return FeatureSpec(options.depth, std::move(vocabulary), std::move(scale),
                     std::vector<std::string>(folders.begin(), folders.end()),
                     std::vector<std::string>(extensions.begin(), extensions.end()), numeric);
}

FeatureVector encode(const FileMeta& f, const FeatureSpec& spec) {
  std::map<int, double> entries;
  for (const auto& t : name_tokens(f.file_name)) {
    if (int i = spec.token_index(t); i >= 0) entries[i] += 1.0;
  }
  for (auto& [i, count] : entries) count = std::min(1.0, count / spec.token_scale()[static_cast<std::size_t>(i)]);
  for (const auto& p : folder_prefixes(f.path, spec.depth())) {
    if (int i = spec.folder_index(p); i >= 0) entries[static_cast<int>(spec.folder_offset()) + i] = 1.0;
  }
  if (int i = spec.extension_index(f.extension); i >= 0) {
    entries[static_cast<int>(spec.extension_offset()) + i] = 1.0;
  }
  FeatureVector out;
  const auto raw = raw_numeric(f, &out.time_clamped);
  for (std::size_t k = 0; k < 5; ++k) {
    const double v = normalize(raw[k], spec.numeric()[k]);
    if (v != 0.0) entries[static_cast<int>(spec.numeric_offset() + k)] = v;
  }
  out.values.resize(static_cast<Eigen::Index>(spec.size()));
  out.values.reserve(static_cast<Eigen::Index>(entries.size()));
  for (const auto& [i, v] : entries) {
    if (v != 0.0) out.values.insert(i) = v;
  }
  return out;
}

FeatureMatrix encode_batch(std::span<const FileMeta> files, const FeatureSpec& spec) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(files.size() * 8);
  for (std::size_t r = 0; r < files.size(); ++r) {
    const auto v = encode(files[r], spec);
    for (Eigen::SparseVector<double>::InnerIterator it(v.values); it; ++it) {
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(it.index()), it.value());
    }
  }
  FeatureMatrix m(static_cast<Eigen::Index>(files.size()), static_cast<Eigen::Index>(spec.size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

nlohmann::json to_json(const FeatureSpec& spec) {
  nlohmann::json numeric = nlohmann::json::array();
  for (std::size_t k = 0; k < 5; ++k) {
    numeric.push_back({{"name", kNumericFeatureNames[k]}, {"min", spec.numeric()[k].min}, {"max", spec.numeric()[k].max}});
  }
  return nlohmann::json{{"version", kSpecVersion},         {"depth", spec.depth()},
                        {"vocabulary", spec.vocabulary()}, {"token_scale", spec.token_scale()},
                        {"folders", spec.folders()},       {"extensions", spec.extensions()},
                        {"numeric", numeric}};
}

FeatureSpec feature_spec_from_json(const nlohmann::json& j) {
  if (j.value("version", 0) != kSpecVersion) throw Error("feature spec: unsupported version");
  std::array<NumericRange, 5> numeric;
  const auto& arr = j.at("numeric");
  if (arr.size() != 5) throw Error("feature spec: expected 5 numeric entries");
  for (std::size_t k = 0; k < 5; ++k) numeric[k] = {arr[k].at("min").get<double>(), arr[k].at("max").get<double>()};
  return FeatureSpec(j.at("depth").get<int>(), j.at("vocabulary").get<std::vector<std::string>>(),
                     j.at("token_scale").get<std::vector<double>>(), j.at("folders").get<std::vector<std::string>>(),
                     j.at("extensions").get<std::vector<std::string>>(), numeric);
}

void write_triplets(const FeatureMatrix& m, std::ostream& out) {
  out << "row,col,value\n";
  char buf[32];
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (FeatureMatrix::InnerIterator it(m, r); it; ++it) {
      auto res = std::to_chars(buf, buf + sizeof buf, it.value());
      out << r << ',' << it.col() << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
    }
  }
}

FeatureMatrix read_triplets(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  std::string line;
  if (!std::getline(in, line) || csv::split_line(line) != std::vector<std::string>{"row", "col", "value"}) {
    throw Error("triplet csv: expected header row,col,value");
  }
  std::vector<Eigen::Triplet<double>> triplets;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv::split_line(line);
    long long r = -1, c = -1;
    double v = 0;
    if (f.size() != 3 || std::from_chars(f[0].data(), f[0].data() + f[0].size(), r).ec != std::errc{} ||
        std::from_chars(f[1].data(), f[1].data() + f[1].size(), c).ec != std::errc{} ||
        std::from_chars(f[2].data(), f[2].data() + f[2].size(), v).ec != std::errc{} || r < 0 || r >= rows ||
        c < 0 || c >= cols) {
      throw Error("triplet csv line " + std::to_string(line_no) + ": malformed entry");
    }
    triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  }
  FeatureMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace stackinsights
