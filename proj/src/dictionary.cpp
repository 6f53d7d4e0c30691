#include "stackinsights/dictionary.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>
#include <set>

#include "stackinsights/common.hpp"

namespace stackinsights {

DictionarySpec default_dictionary_spec() {
  return DictionarySpec{{
      {"email", CategoryKind::Pattern,
       {R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})"}, Validator::None},
      {"phone", CategoryKind::Pattern,
       {R"((?:\+?1[\-. ])?(?:\(\d{3}\) ?|\b\d{3}[\-. ])\d{3}[\-. ]\d{4}\b)"}, Validator::None},
      {"ssn", CategoryKind::Pattern, {R"(\b\d{3}-\d{2}-\d{4}\b)"}, Validator::None},
      {"credit_card", CategoryKind::Pattern, {R"(\b(?:\d[ \-]?){12,18}\d\b)"}, Validator::Luhn},
      {"keywords", CategoryKind::Keywords,
       {"confidential", "proprietary", "ssn", "salary", "password"}, Validator::None},
  }};
}

namespace {

CategoryKind kind_from_string(const std::string& s) {
  if (s == "pattern" || s == "regex") return CategoryKind::Pattern;
  if (s == "keyword-list" || s == "keywords") return CategoryKind::Keywords;
  throw ConfigError("dictionary: unknown category kind '" + s + "'");
}

Validator validator_from_string(const std::string& s) {
  if (s.empty() || s == "none") return Validator::None;
  if (s == "luhn") return Validator::Luhn;
  throw ConfigError("dictionary: unknown validator '" + s + "'");
}

bool is_alnum_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

DictionarySpec parse_dictionary_json(const nlohmann::json& j) {
  DictionarySpec spec;
  if (!j.contains("category")) return spec;
  for (const auto& c : j.at("category")) {
    CategorySpec cat;
    cat.name = c.at("name").get<std::string>();
    cat.kind = kind_from_string(c.value("kind", std::string("pattern")));
    cat.patterns = c.at("patterns").get<std::vector<std::string>>();
    cat.validator = validator_from_string(c.value("validator", std::string()));
    spec.categories.push_back(std::move(cat));
  }
  return spec;
}

Dictionary compile_dictionary(const DictionarySpec& spec_in) {
  const DictionarySpec& spec = spec_in.categories.empty() ? default_dictionary_spec() : spec_in;
  Dictionary dict;
  std::set<std::string> seen;
  for (const auto& c : spec.categories) {
    if (!seen.insert(c.name).second) throw ConfigError("dictionary: duplicate category '" + c.name + "'");
    Dictionary::Category cat{c.name, c.kind, {}, {}, c.validator};
    for (const auto& p : c.patterns) {
      if (c.kind == CategoryKind::Pattern) {
        try {
          cat.regexes.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
        } catch (const std::regex_error& e) {
          throw ConfigError("dictionary: category '" + c.name + "' pattern '" + p +
                            "' does not compile: " + e.what());
        }
      } else {
        if (p.empty()) throw ConfigError("dictionary: category '" + c.name + "' has an empty keyword");
        std::string lower = p;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        cat.keywords.insert(std::move(lower));
      }
    }
    dict.categories_.push_back(std::move(cat));
  }
  return dict;
}

std::size_t ContentScanResult::count(std::string_view category) const {
  for (const auto& [name, n] : matches) {
    if (name == category) return n;
  }
  return 0;
}

std::size_t ContentScanResult::total_matches() const {
  std::size_t total = 0;
  for (const auto& m : matches) total += m.second;
  return total;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (is_alnum_byte(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

bool luhn_valid(std::string_view digits) {
  int sum = 0;
  int n = 0;
  bool twice = false;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (*it < '0' || *it > '9') continue;
    int d = *it - '0';
    if (twice) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    twice = !twice;
    ++n;
  }
  return n > 0 && sum % 10 == 0;
}

namespace {

bool is_word_byte(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool passes(Validator v, std::string_view s) { return v != Validator::Luhn || luhn_valid(s); }

std::size_t count_plain(std::string_view text, const std::regex& re) {
  return static_cast<std::size_t>(
      std::distance(std::cregex_iterator(text.data(), text.data() + text.size(), re), std::cregex_iterator()));
}

// Non-overlapping matches that pass the validator. When the leftmost match
// fails, shorter matches from the same start that end before a non-word
// character are tried, so a valid number followed by more digit groups is
// still found.
std::size_t count_validated(std::string_view text, const std::regex& re, Validator v) {
  const char* const first = text.data();
  const char* const last = first + text.size();
  const auto context = [first](const char* at) {
    return at > first ? std::regex_constants::match_prev_avail : std::regex_constants::match_default;
  };
  std::size_t n = 0;
  std::cmatch m;
  for (const char* pos = first; pos < last && std::regex_search(pos, last, m, re, context(pos));) {
    const char* s = m[0].first;
    const char* hit = passes(v, {s, static_cast<std::size_t>(m[0].second - s)}) ? m[0].second : nullptr;
    for (const char* c = m[0].second - 1; !hit && c > s; --c) {
      if (is_word_byte(*c)) continue;
      if (std::regex_match(s, c, re, context(s)) && passes(v, {s, static_cast<std::size_t>(c - s)})) hit = c;
    }
    if (hit) ++n;
    pos = hit ? hit : s + 1;
  }
  return n;
}

}  // namespace

ContentScanResult scan_content(std::string_view text, const Dictionary& dict) {
  ContentScanResult result;
  result.crawled = true;
  std::vector<std::string> kept;
  for (auto& t : tokenize(text)) {
    if (!is_stop_word(t)) kept.push_back(std::move(t));
  }
  result.total_tokens = kept.size();

  for (const auto& cat : dict.categories()) {
    std::size_t n = 0;
    if (cat.kind == CategoryKind::Keywords) {
      for (const auto& t : kept) n += cat.keywords.count(t);
    } else {
      for (const auto& re : cat.regexes) {
        n += cat.validator == Validator::None ? count_plain(text, re) : count_validated(text, re, cat.validator);
      }
    }
    result.matches.emplace_back(cat.name, n);
  }
  return result;
}

ContentScanResult uncrawled_result(const Dictionary& dict) {
  ContentScanResult result;
  for (const auto& cat : dict.categories()) result.matches.emplace_back(cat.name, 0);
  return result;
}

std::string_view to_string(SensitivityLabel label) {
  switch (label) {
    case SensitivityLabel::Sensitive: return "sensitive";
    case SensitivityLabel::NonSensitive: return "non-sensitive";
    case SensitivityLabel::Unknown: return "unknown";
  }
  return "unknown";
}

SensitivityLabel label_from_string(std::string_view text) {
  if (text == "sensitive") return SensitivityLabel::Sensitive;
  if (text == "non-sensitive") return SensitivityLabel::NonSensitive;
  if (text == "unknown") return SensitivityLabel::Unknown;
  throw Error("unknown sensitivity label '" + std::string(text) + "'");
}

SensitivityLabel label_file(const ContentScanResult& result, const LabelRule& rule) {
  if (!result.crawled) return SensitivityLabel::Unknown;
  const std::size_t hits = result.total_matches();
  if (rule.mode == LabelRule::Mode::AnyMatch) {
    return hits > 0 ? SensitivityLabel::Sensitive : SensitivityLabel::NonSensitive;
  }
  const double share = static_cast<double>(hits) / static_cast<double>(std::max<std::size_t>(result.total_tokens, 1));
  return share >= rule.threshold ? SensitivityLabel::Sensitive : SensitivityLabel::NonSensitive;
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

namespace {

std::optional<std::string> decode_plain(std::span<const std::byte> bytes) {
  std::string_view view(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (view.find('\0') != std::string_view::npos || !is_valid_utf8(view)) return std::nullopt;
  return std::string(view);
}

std::optional<std::string> decode_markup(std::span<const std::byte> bytes) {
  auto text = decode_plain(bytes);
  if (!text) return std::nullopt;
  std::string out;
  out.reserve(text->size());
  bool in_tag = false;
  for (char c : *text) {
    if (c == '<') {
      in_tag = true;
      out += ' ';
    } else if (c == '>' && in_tag) {
      in_tag = false;
    } else if (!in_tag) {
      out += c;
    }
  }
  return out;
}

}  // namespace

ExtractorRegistry ExtractorRegistry::with_defaults() {
  ExtractorRegistry reg;
  for (const char* ext : {".txt", ".text", ".md", ".rst", ".log", ".csv", ".tsv", ".json", ".yaml", ".yml", ".ini",
                          ".cfg", ".conf", ".properties", ".sql", ".eml", ".tex"}) {
    reg.add(ext, decode_plain);
  }
  for (const char* ext : {".html", ".htm", ".xml"}) reg.add(ext, decode_markup);
  return reg;
}

void ExtractorRegistry::add(std::string extension, Extractor extractor) {
  std::transform(extension.begin(), extension.end(), extension.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  extractors_[std::move(extension)] = std::move(extractor);
}

bool ExtractorRegistry::supports(std::string_view extension) const {
  return extractors_.find(extension) != extractors_.end();
}

Extraction ExtractorRegistry::extract(std::span<const std::byte> bytes, std::string_view extension) const {
  auto it = extractors_.find(extension);
  if (it == extractors_.end()) return {};
  auto text = it->second(bytes);
  if (!text) return {};
  return {std::move(*text), true};
}

Extraction extract_text(std::span<const std::byte> bytes, std::string_view extension) {
  static const ExtractorRegistry defaults = ExtractorRegistry::with_defaults();
  return defaults.extract(bytes, extension);
}

nlohmann::json to_json(const ContentScanResult& r, SensitivityLabel label) {
  nlohmann::json matches = nlohmann::json::object();
  for (const auto& [name, n] : r.matches) matches[name] = n;
  return nlohmann::json{{"volume_id", r.volume_id}, {"path", r.path},
                        {"file_name", r.file_name}, {"crawled", r.crawled},
                        {"total_tokens", r.total_tokens}, {"matches", matches},
                        {"label", std::string(to_string(label))}};
}

}  // namespace stackinsights
