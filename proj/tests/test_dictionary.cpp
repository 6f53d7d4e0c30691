#include <regex>

#include "support.hpp"
#include "stackinsights/dictionary.hpp"

using namespace stackinsights;

namespace {

std::span<const std::byte> bytes_of(std::string_view s) { return std::as_bytes(std::span(s.data(), s.size())); }

const Dictionary& defaults() {
  static const Dictionary d = compile_dictionary({});
  return d;
}

}  // namespace

TEST_SUITE("dictionary") {

TEST_CASE("empty spec compiles the five default categories") {
  const auto& d = defaults();
  REQUIRE(d.categories().size() == 5);
  CHECK(d.categories()[0].name == "email");
  CHECK(d.categories()[4].kind == CategoryKind::Keywords);
}

TEST_CASE("custom spec and compile errors") {
  DictionarySpec spec;
  spec.categories.push_back({"email", CategoryKind::Pattern, {R"(\S+@\S+)"}, Validator::None});
  spec.categories.push_back({"words", CategoryKind::Keywords, {"confidential"}, Validator::None});
  CHECK(compile_dictionary(spec).categories().size() == 2);

  DictionarySpec bad;
  bad.categories.push_back({"broken", CategoryKind::Pattern, {"(["}, Validator::None});
  try {
    compile_dictionary(bad);
    FAIL("bad pattern compiled");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
    CHECK(std::string(e.what()).find("([") != std::string::npos);
  }

  DictionarySpec dup;
  dup.categories.push_back({"x", CategoryKind::Keywords, {"a"}, Validator::None});
  dup.categories.push_back({"x", CategoryKind::Keywords, {"b"}, Validator::None});
  CHECK_THROWS_AS(compile_dictionary(dup), ConfigError);

  DictionarySpec empty_kw;
  empty_kw.categories.push_back({"x", CategoryKind::Keywords, {""}, Validator::None});
  CHECK_THROWS_AS(compile_dictionary(empty_kw), ConfigError);
}

TEST_CASE("dictionary file formats") {
  testing::TempDir dir("dict");
  testing::write_file(dir / "d.toml",
                      "[[category]]\nname = \"ids\"\nkind = \"pattern\"\npatterns = ['\\bID\\d{4}\\b']\n"
                      "[[category]]\nname = \"kw\"\nkind = \"keywords\"\npatterns = [\"secret\"]\n");
  testing::write_file(dir / "d.json",
                      R"({"category":[{"name":"ids","kind":"pattern","patterns":["\\bID\\d{4}\\b"]},)"
                      R"({"name":"kw","kind":"keywords","patterns":["secret"]}]})");
  for (const char* f : {"d.toml", "d.json"}) {
    const auto d = compile_dictionary(load_dictionary_spec(dir / f));
    const auto r = scan_content("badge ID1234 is secret, ID99 is not", d);
    CHECK(r.count("ids") == 1);
    CHECK(r.count("kw") == 1);
  }
}

TEST_CASE("content scan examples") {
  const auto empty = scan_content("", defaults());
  CHECK(empty.total_tokens == 0);
  CHECK(empty.total_matches() == 0);

  CHECK(scan_content("contact a@b.com or c@d.org", defaults()).count("email") == 2);
  CHECK(scan_content("SSN: 123-45-6789", defaults()).count("ssn") == 1);
  CHECK(scan_content("call (555) 123-4567 today", defaults()).count("phone") == 1);
  // 4111 1111 1111 1111 passes the Luhn check; changing the last digit breaks it.
  CHECK(scan_content("card 4111 1111 1111 1111", defaults()).count("credit_card") == 1);
  CHECK(scan_content("card 4111 1111 1111 1112", defaults()).count("credit_card") == 0);
  const auto kw = scan_content("The salary file is CONFIDENTIAL and confidential", defaults());
  CHECK(kw.count("keywords") == 3);
  // "the", "is", "and" are stop words: salary, file, confidential x2.
  CHECK(kw.total_tokens == 4);
}

TEST_CASE("luhn") {
  CHECK(luhn_valid("4111111111111111"));
  CHECK(luhn_valid("79927398713"));
  CHECK_FALSE(luhn_valid("79927398710"));
}

TEST_CASE("extraction") {
  const auto txt = extract_text(bytes_of("plain text"), ".txt");
  CHECK(txt.crawled);
  CHECK(txt.text == "plain text");
  const std::string bin = std::string("\x00\xff\xfe\x01", 4);
  CHECK_FALSE(extract_text(bytes_of(bin), ".bin").crawled);
  CHECK_FALSE(extract_text(bytes_of("word/document.xml"), ".docx").crawled);

  auto registry = ExtractorRegistry::with_defaults();
  registry.add(".docx", [](std::span<const std::byte>) { return std::optional<std::string>("body text"); });
  const auto docx = registry.extract(bytes_of("PK.."), ".docx");
  CHECK(docx.crawled);
  CHECK(docx.text == "body text");
  CHECK(registry.supports(".docx"));
  CHECK_FALSE(ExtractorRegistry::with_defaults().supports(".docx"));

  const auto html = extract_text(bytes_of("<p>salary <b>list</b></p>"), ".html");
  CHECK(html.crawled);
  CHECK(tokenize(html.text) == std::vector<std::string>{"salary", "list"});
}

TEST_CASE("labeling rule") {
  CHECK(label_file(uncrawled_result(defaults()), {}) == SensitivityLabel::Unknown);
  CHECK(label_file(scan_content("nothing to see", defaults()), {}) == SensitivityLabel::NonSensitive);

  ContentScanResult r;
  r.crawled = true;
  r.total_tokens = 100;
  r.matches = {{"email", 3}};
  LabelRule rule{LabelRule::Mode::Threshold, 0.05};
  CHECK(label_file(r, rule) == SensitivityLabel::NonSensitive);
  rule.threshold = 0.02;
  CHECK(label_file(r, rule) == SensitivityLabel::Sensitive);
  CHECK(label_from_string(to_string(SensitivityLabel::Unknown)) == SensitivityLabel::Unknown);
}

TEST_CASE("stop words") {
  CHECK(is_stop_word("the"));
  CHECK_FALSE(is_stop_word("salary"));
  CHECK(stop_words().size() >= 150);
  CHECK(stop_words().size() <= 200);
}

TEST_CASE("property: appending text never lowers a count, and any-match stays sensitive") {
  static constexpr std::string_view pieces[] = {
      "a@b.com ", "call 555-123-4567 ", "123-45-6789 ", "4111 1111 1111 1111 ", "confidential ", "the ",
      "report ", "x ", "\n", "salary, ", "1234 ", "@ ", "-"};
  testing::for_all(21, [&](Rng& rng) {
    std::string base, extra;
    for (std::size_t i = rng.below(8); i > 0; --i) base += pieces[rng.below(std::size(pieces))];
    for (std::size_t i = 1 + rng.below(6); i > 0; --i) extra += pieces[rng.below(std::size(pieces))];
    const auto a = scan_content(base, defaults());
    const auto b = scan_content(base + extra, defaults());
    CAPTURE(base);
    CAPTURE(extra);
    for (const auto& [name, n] : a.matches) CHECK(b.count(name) >= n);
    CHECK(b.total_tokens >= a.total_tokens);
    if (label_file(a, {}) == SensitivityLabel::Sensitive) CHECK(label_file(b, {}) == SensitivityLabel::Sensitive);
    CHECK(label_file(a, {}) != SensitivityLabel::Unknown);
    const auto again = scan_content(base, defaults());
    CHECK(again.matches == a.matches);
    CHECK(again.total_tokens == a.total_tokens);
  });
}

TEST_CASE("property: email count agrees with an independent regex count") {
  // Oracle: non-overlapping std::regex_search iteration of the same pattern.
  const std::regex email(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})");
  testing::for_all(22, [&](Rng& rng) {
    std::string text;
    for (std::size_t i = rng.below(6); i > 0; --i) {
      text += testing::random_word(rng);
      text += rng.bernoulli(0.5) ? "@" + testing::random_word(rng) + "." + testing::random_word(rng, 3) : "";
      text += " ";
    }
    const auto n = static_cast<std::size_t>(
        std::distance(std::sregex_iterator(text.begin(), text.end(), email), std::sregex_iterator()));
    CHECK(scan_content(text, defaults()).count("email") == n);
  });
}

TEST_CASE("property: uncrawled iff unknown") {
  testing::for_all(23, [&](Rng& rng) {
    std::string bytes;
    for (std::size_t i = rng.below(40); i > 0; --i) bytes += static_cast<char>(rng.below(256));
    static constexpr std::string_view exts[] = {".txt", ".csv", ".bin", ".html", ".zip"};
    const auto e = extract_text(bytes_of(bytes), exts[rng.below(std::size(exts))]);
    const auto r = e.crawled ? scan_content(e.text, defaults()) : uncrawled_result(defaults());
    CHECK((label_file(r, {}) == SensitivityLabel::Unknown) == !e.crawled);
    if (!e.crawled) CHECK(r.total_matches() == 0);
  });
}

}
