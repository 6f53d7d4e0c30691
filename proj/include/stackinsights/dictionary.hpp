#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

namespace stackinsights {

enum class CategoryKind { Pattern, Keywords };
enum class Validator { None, Luhn };

struct CategorySpec {
  std::string name;
  CategoryKind kind = CategoryKind::Pattern;
  std::vector<std::string> patterns;  // regexes, or tokens for keyword lists
  Validator validator = Validator::None;
};

struct DictionarySpec {
  std::vector<CategorySpec> categories;
};

// Email, phone, SSN, Luhn-checked credit card, and a short keyword list.
DictionarySpec default_dictionary_spec();

// Reads `[[category]]` entries from a .toml or .json file.
DictionarySpec load_dictionary_spec(const std::filesystem::path& src);
DictionarySpec parse_dictionary_json(const nlohmann::json& j);

class Dictionary {
 public:
  struct Category {
    std::string name;
    CategoryKind kind;
    std::vector<std::regex> regexes;
    std::unordered_set<std::string> keywords;
    Validator validator;
  };

  const std::vector<Category>& categories() const { return categories_; }

 private:
  friend Dictionary compile_dictionary(const DictionarySpec& spec);
  std::vector<Category> categories_;
};

// An empty spec yields the default dictionary. Throws ConfigError naming the
// category and pattern when a regex does not compile, and on duplicate
// category names or empty keywords.
Dictionary compile_dictionary(const DictionarySpec& spec);

struct ContentScanResult {
  std::string volume_id;
  std::string path;
  std::string file_name;
  bool crawled = false;
  std::size_t total_tokens = 0;  // stop words excluded
  std::vector<std::pair<std::string, std::size_t>> matches;  // in dictionary order

  std::size_t count(std::string_view category) const;
  std::size_t total_matches() const;
};

ContentScanResult scan_content(std::string_view text, const Dictionary& dict);

// Result for content that could not be extracted: every count is zero.
ContentScanResult uncrawled_result(const Dictionary& dict);

enum class SensitivityLabel { NonSensitive, Sensitive, Unknown };

std::string_view to_string(SensitivityLabel label);
SensitivityLabel label_from_string(std::string_view text);

struct LabelRule {
  enum class Mode { AnyMatch, Threshold };
  Mode mode = Mode::AnyMatch;
  double threshold = 0.0;  // matches / total_tokens, threshold mode only
};

SensitivityLabel label_file(const ContentScanResult& result, const LabelRule& rule);

struct Extraction {
  std::string text;
  bool crawled = false;
};

// Maps lowercased extensions to text extractors. The defaults cover plain
// text, markup (tags stripped) and delimited data; anything else (binary
// formats, office documents without a plugged-in extractor) is not crawled.
class ExtractorRegistry {
 public:
  using Extractor = std::function<std::optional<std::string>(std::span<const std::byte>)>;

  static ExtractorRegistry with_defaults();

  void add(std::string extension, Extractor extractor);
  bool supports(std::string_view extension) const;
  Extraction extract(std::span<const std::byte> bytes, std::string_view extension) const;

 private:
  std::map<std::string, Extractor, std::less<>> extractors_;
};

Extraction extract_text(std::span<const std::byte> bytes, std::string_view extension);

bool is_valid_utf8(std::string_view bytes);
bool luhn_valid(std::string_view digits);

// Lowercased maximal alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

bool is_stop_word(std::string_view token);
std::span<const std::string_view> stop_words();
inline constexpr std::string_view kStopWordsVersion = "en-1";

nlohmann::json to_json(const ContentScanResult& r, SensitivityLabel label);

}  // namespace stackinsights
