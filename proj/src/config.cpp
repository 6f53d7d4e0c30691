#include "stackinsights/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "stackinsights/rng.hpp"

namespace stackinsights {

namespace fs = std::filesystem;

namespace {

// Typed access to one TOML table that rejects unknown keys.
class TableReader {
 public:
  TableReader(const toml::table& table, std::string where) : table_(table), where_(std::move(where)) {}

  const toml::node* node(std::string_view key) {
    used_.emplace(key);
    return table_.get(key);
  }

  double real(std::string_view key, double fallback) {
    const auto* n = node(key);
    if (!n) return fallback;
    if (auto v = n->value<double>()) return *v;
    throw ConfigError(where_ + "." + std::string(key) + " must be a number");
  }

  std::int64_t integer(std::string_view key, std::int64_t fallback) {
    const auto* n = node(key);
    if (!n) return fallback;
    if (n->is_integer()) return *n->value<std::int64_t>();
    throw ConfigError(where_ + "." + std::string(key) + " must be an integer");
  }

  bool boolean(std::string_view key, bool fallback) {
    const auto* n = node(key);
    if (!n) return fallback;
    if (n->is_boolean()) return *n->value<bool>();
    throw ConfigError(where_ + "." + std::string(key) + " must be true or false");
  }

  std::optional<std::string> string(std::string_view key) {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (n->is_string()) return *n->value<std::string>();
    throw ConfigError(where_ + "." + std::string(key) + " must be a string");
  }

  const toml::table* table(std::string_view key) {
    const auto* n = node(key);
    if (!n) return nullptr;
    if (const auto* t = n->as_table()) return t;
    throw ConfigError(where_ + "." + std::string(key) + " must be a table");
  }

  const toml::array* array(std::string_view key) {
    const auto* n = node(key);
    if (!n) return nullptr;
    if (const auto* a = n->as_array()) return a;
    throw ConfigError(where_ + "." + std::string(key) + " must be an array");
  }

  void finish() const {
    for (const auto& [key, value] : table_) {
      if (!used_.count(std::string(key.str()))) {
        throw ConfigError("unknown key '" + std::string(key.str()) + "' in " + where_);
      }
    }
  }

 private:
  const toml::table& table_;
  std::string where_;
  std::set<std::string, std::less<>> used_;
};

toml::table parse_toml(std::string_view text, const std::string& source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }
}

std::string read_text(const fs::path& src) {
  std::ifstream in(src, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + src.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void read_sampling(TableReader& r, SamplingConfig& s) {
  s.initial_fraction = r.real("initial_fraction", s.initial_fraction);
  s.increment_fraction = r.real("increment_fraction", s.increment_fraction);
  s.accuracy_delta_threshold = r.real("accuracy_delta_threshold", s.accuracy_delta_threshold);
  s.max_fraction = r.real("max_fraction", s.max_fraction);
  s.file_cluster_k = static_cast<int>(r.integer("file_cluster_k", s.file_cluster_k));
  s.cluster_vocabulary = static_cast<std::size_t>(r.integer("cluster_vocabulary", static_cast<std::int64_t>(s.cluster_vocabulary)));
  if (auto eval = r.string("eval")) {
    if (*eval == "kfold") s.eval = SamplingConfig::Eval::KFold;
    else if (*eval == "holdout") s.eval = SamplingConfig::Eval::Holdout;
    else throw ConfigError("sampling.eval must be 'kfold' or 'holdout'");
  }
  s.folds = static_cast<int>(r.integer("folds", s.folds));
  s.holdout_fraction = r.real("holdout_fraction", s.holdout_fraction);
}

}  // namespace

SampleScope sample_scope_from_string(std::string_view s) {
  if (s == "all") return SampleScope::All;
  if (s == "representatives") return SampleScope::Representatives;
  throw ConfigError("sampling scope must be 'all' or 'representatives'");
}

ClassWeight class_weight_from_string(std::string_view s) {
  if (s == "none") return ClassWeight::None;
  if (s == "balanced") return ClassWeight::Balanced;
  throw ConfigError("class_weight must be 'none' or 'balanced'");
}

LabelRule::Mode label_mode_from_string(std::string_view s) {
  if (s == "any-match") return LabelRule::Mode::AnyMatch;
  if (s == "threshold") return LabelRule::Mode::Threshold;
  throw ConfigError("label mode must be 'any-match' or 'threshold'");
}

void PipelineConfig::propagate_seed() {
  sampling.seed = derive_seed(seed, "sample");
  train.seed = derive_seed(seed, "train");
}

void PipelineConfig::validate() const {
  if (volumes.empty()) throw ConfigError("config: at least one [[volume]] is required");
  std::set<std::string> ids;
  for (const auto& v : volumes) {
    if (v.id.empty()) throw ConfigError("config: volume id must be nonempty");
    if (!ids.insert(v.id).second) throw ConfigError("config: duplicate volume id '" + v.id + "'");
    if (!fs::is_directory(v.root)) throw ConfigError("config: volume root does not exist: " + v.root.string());
  }
  for (const auto* p : {&dictionary, &iops, &volume_sizes, &truth}) {
    if (*p && !fs::exists(**p)) throw ConfigError("config: file does not exist: " + (*p)->string());
  }
  if (!now) throw ConfigError("config: 'now' (RFC 3339 reference time) is required");
  if (label_rule.mode == LabelRule::Mode::Threshold && !(label_rule.threshold >= 0 && label_rule.threshold <= 1)) {
    throw ConfigError("config: label.threshold must be in [0, 1]");
  }
  if (features.depth < 1) throw ConfigError("config: features.depth must be >= 1");
  sampling.validate();
  train.validate();
  if (!(bands.cold_below <= bands.warm_below)) throw ConfigError("config: hotness cold band must not exceed warm");
  if (!(thresholds.y >= 0 && thresholds.y <= 1) || !(thresholds.x >= 0) || !(thresholds.user_x >= 0)) {
    throw ConfigError("config: thresholds out of range");
  }
  if (volume_clusters < 1) throw ConfigError("config: cluster.k must be >= 1");
}

PipelineConfig parse_pipeline_config(std::string_view toml_text, const fs::path& base_dir) {
  const toml::table root = parse_toml(toml_text, "config");
  TableReader r(root, "config");
  PipelineConfig c;
  c.seed = static_cast<std::uint64_t>(r.integer("seed", 42));
  if (auto v = r.string("output_dir")) c.output_dir = resolve(base_dir, *v);
  else c.output_dir = base_dir / "out";
  for (auto [key, field] : {std::pair{"dictionary", &c.dictionary}, std::pair{"iops", &c.iops},
                            std::pair{"volume_sizes", &c.volume_sizes}, std::pair{"truth", &c.truth}}) {
    if (auto v = r.string(key)) *field = resolve(base_dir, *v);
  }
  if (auto v = r.string("now")) {
    try {
      c.now = parse_rfc3339(*v);
    } catch (const Error& e) {
      throw ConfigError(std::string("config.now: ") + e.what());
    }
  }
  if (const auto* arr = r.array("volume")) {
    for (const auto& node : *arr) {
      const auto* t = node.as_table();
      if (!t) throw ConfigError("config: [[volume]] entries must be tables");
      TableReader vr(*t, "volume");
      VolumeRoot v;
      v.id = vr.string("id").value_or("");
      const auto root_dir = vr.string("root");
      if (!root_dir) throw ConfigError("config: volume '" + v.id + "' needs a root");
      v.root = resolve(base_dir, *root_dir);
      vr.finish();
      c.volumes.push_back(std::move(v));
    }
  }
  if (const auto* t = r.table("label")) {
    TableReader lr(*t, "label");
    if (auto mode = lr.string("mode")) c.label_rule.mode = label_mode_from_string(*mode);
    c.label_rule.threshold = lr.real("threshold", c.label_rule.threshold);
    lr.finish();
  }
  if (const auto* t = r.table("features")) {
    TableReader fr(*t, "features");
    c.features.depth = static_cast<int>(fr.integer("depth", c.features.depth));
    c.features.min_token_count = static_cast<std::size_t>(fr.integer("min_token_count", 1));
    c.features.max_vocabulary = static_cast<std::size_t>(fr.integer("max_vocabulary", 0));
    fr.finish();
  }
  if (const auto* t = r.table("sampling")) {
    TableReader sr(*t, "sampling");
    read_sampling(sr, c.sampling);
    if (auto scope = sr.string("scope")) c.scope = sample_scope_from_string(*scope);
    sr.finish();
  }
  if (const auto* t = r.table("train")) {
    TableReader tr(*t, "train");
    if (auto family = tr.string("family")) c.train.family = model_family_from_string(*family);
    c.train.C = tr.real("C", c.train.C);
    if (auto cw = tr.string("class_weight")) c.train.class_weight = class_weight_from_string(*cw);
    c.train.folds = static_cast<int>(tr.integer("folds", c.train.folds));
    c.train.forest.n_trees = static_cast<int>(tr.integer("n_trees", c.train.forest.n_trees));
    c.train.forest.max_depth = static_cast<int>(tr.integer("max_depth", c.train.forest.max_depth));
    c.train.forest.bootstrap = tr.boolean("bootstrap", c.train.forest.bootstrap);
    c.train.forest.sqrt_features = tr.boolean("sqrt_features", c.train.forest.sqrt_features);
    tr.finish();
  }
  if (const auto* t = r.table("hotness")) {
    TableReader hr(*t, "hotness");
    c.bands.cold_below = hr.real("cold_below", c.bands.cold_below);
    c.bands.warm_below = hr.real("warm_below", c.bands.warm_below);
    hr.finish();
  }
  if (const auto* t = r.table("plan")) {
    TableReader pr(*t, "plan");
    c.thresholds.x = pr.real("x_threshold", c.thresholds.x);
    c.thresholds.user_x = pr.real("user_x_threshold", c.thresholds.user_x);
    c.thresholds.y = pr.real("y_threshold", c.thresholds.y);
    pr.finish();
  }
  if (const auto* t = r.table("cluster")) {
    TableReader cr(*t, "cluster");
    c.volume_clusters = static_cast<int>(cr.integer("k", c.volume_clusters));
    cr.finish();
  }
  r.finish();
  c.propagate_seed();
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& src) {
  return parse_pipeline_config(read_text(src), src.parent_path());
}

SamplingConfig load_sampling_config(const fs::path& src) {
  const toml::table root = parse_toml(read_text(src), src.string());
  SamplingConfig s;
  if (const auto* t = root.get_as<toml::table>("sampling")) {
    TableReader r(*t, "sampling");
    read_sampling(r, s);
    r.node("scope");
    r.finish();
  } else {
    TableReader r(root, src.string());
    read_sampling(r, s);
    s.seed = static_cast<std::uint64_t>(r.integer("seed", static_cast<std::int64_t>(s.seed)));
    r.finish();
  }
  s.validate();
  return s;
}

DictionarySpec load_dictionary_spec(const fs::path& src) {
  const std::string text = read_text(src);
  nlohmann::json j;
  try {
    if (src.extension() == ".json") {
      j = nlohmann::json::parse(text);
    } else {
      std::ostringstream ss;
      ss << toml::json_formatter{parse_toml(text, src.string())};
      j = nlohmann::json::parse(ss.str());
    }
    return parse_dictionary_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("dictionary " + src.string() + ": " + e.what());
  }
}

}  // namespace stackinsights
