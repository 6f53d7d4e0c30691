#include "stackinsights/synth.hpp"

#include <fcntl.h>
#include <sys/stat.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "stackinsights/csv.hpp"
#include "stackinsights/dictionary.hpp"
#include "stackinsights/rng.hpp"
#include "stackinsights/scan.hpp"

namespace stackinsights {

namespace fs = std::filesystem;

namespace {

using namespace std::chrono_literals;

constexpr std::array kSensitiveExt = {".csv", ".eml", ".sql", ".xml"};
constexpr std::array kNeutralExt = {".md",   ".log", ".html", ".json",       ".yaml",
                                    ".ini",  ".rst", ".tex",  ".properties", ".conf"};
constexpr std::array kBinaryExt = {".bin", ".zip"};

constexpr std::array kSensitiveTokens = {"payroll", "customer", "invoice", "contract", "employee", "account",
                                         "tax",     "medical",  "client",  "billing",  "benefits", "personnel"};
constexpr std::array kNeutralTokens = {"readme", "notes",  "build",  "config",   "draft", "meeting",
                                       "design", "test",   "release", "template", "logo",  "changelog"};
constexpr std::array kCommonTokens = {"final", "copy", "new", "old", "report", "summary",
                                      "project", "data", "team", "review", "plan", "archive"};
constexpr std::array kSubfolders = {"docs", "mail", "projects", "archive", "shared"};

constexpr std::array kFiller = {
    "storage", "volume",  "cluster", "network", "quarterly", "roadmap", "migration", "backup",   "service",
    "update",  "weekly",  "status",  "budget",  "review",    "design",  "document",  "process",  "change",
    "request", "support", "ticket",  "team",    "schedule",  "release", "feature",   "planning", "capacity",
    "office",  "printer", "lunch",   "agenda",  "minutes",   "project", "vendor",    "summary",  "draft"};

constexpr std::array kKeywords = {"confidential", "proprietary", "ssn", "salary", "password"};
constexpr std::array kFirstNames = {"alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi"};

template <typename Array>
auto pick(Rng& rng, const Array& a) {
  return a[rng.below(a.size())];
}

std::string filler(Rng& rng, std::size_t words) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    out += pick(rng, kFiller);
    out += (i + 1) % 12 == 0 ? ".\n" : " ";
  }
  return out;
}

std::string digits(Rng& rng, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += static_cast<char>('0' + rng.below(10));
  return s;
}

std::string card_number(Rng& rng) {
  std::string body = "4" + digits(rng, 14);
  int sum = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    int d = body[body.size() - 1 - i] - '0';
    if (i % 2 == 0) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
  }
  body += static_cast<char>('0' + (10 - sum % 10) % 10);
  return body.substr(0, 4) + " " + body.substr(4, 4) + " " + body.substr(8, 4) + " " + body.substr(12, 4);
}

std::string planted_item(Rng& rng) {
  switch (rng.below(5)) {
    case 0: return std::string(pick(rng, kFirstNames)) + "." + pick(rng, kFirstNames) + "@example.com";
    case 1: return "(" + digits(rng, 3) + ") " + digits(rng, 3) + "-" + digits(rng, 4);
    case 2: return "SSN " + digits(rng, 3) + "-" + digits(rng, 2) + "-" + digits(rng, 4);
    case 3: return card_number(rng);
    default: return pick(rng, kKeywords);
  }
}

std::string wrap(std::string_view ext, const std::string& body) {
  if (ext == ".html" || ext == ".xml") return "<doc><p>" + body + "</p></doc>\n";
  if (ext == ".json") {
    std::string escaped;
    for (char c : body) escaped += c == '\n' ? std::string("\\n") : std::string(1, c);
    return "{\"notes\": \"" + escaped + "\"}\n";
  }
  if (ext == ".eml") return "Subject: " + body.substr(0, body.find(' ')) + "\n\n" + body;
  return body;
}

void set_times(const fs::path& p, Timestamp atime, Timestamp mtime) {
  const auto to_ts = [](Timestamp t) {
    const auto s = std::chrono::floor<std::chrono::seconds>(t);
    return timespec{static_cast<time_t>(s.time_since_epoch().count()), 0};
  };
  const timespec times[2] = {to_ts(atime), to_ts(mtime)};
  if (::utimensat(AT_FDCWD, p.c_str(), times, 0) != 0) throw Error("cannot set times on " + p.string());
}

Timestamp hour_floor(Timestamp t) { return std::chrono::floor<std::chrono::hours>(t); }

}  // namespace

CorpusSpec CorpusSpec::defaults() {
  constexpr double kTB = 1e12;
  CorpusSpec s;
  s.now = parse_rfc3339("2018-06-01T00:00:00Z");
  s.volumes = {
      {"V1", 3200, 0.96, 0.004, static_cast<std::uint64_t>(13.66 * kTB), 0.5},
      {"V2", 5200, 0.70, 0.006, static_cast<std::uint64_t>(12.32 * kTB), 0.6},
      {"V3", 4600, 0.46, 0.00789, static_cast<std::uint64_t>(6.06 * kTB), 0.94},
      {"V4", 2100, 0.98, 0.003, static_cast<std::uint64_t>(1.14 * kTB), 0.3},
      {"V5", 3600, 0.61, 0.05, static_cast<std::uint64_t>(0.66 * kTB), 0.2},
      {"V6", 1400, 0.58, 0.002, static_cast<std::uint64_t>(0.01 * kTB), 0.7},
      {"V7", 900, 0.17, 0.001, static_cast<std::uint64_t>(0.01 * kTB), 0.8},
  };
  return s;
}

CorpusSummary gen_corpus(const CorpusSpec& spec, const fs::path& dest) {
  if (fs::exists(dest) && !fs::is_empty(dest)) throw ConfigError("gen-corpus: destination is not empty: " + dest.string());
  if (spec.volumes.empty()) throw ConfigError("gen-corpus: no volumes");
  if (!(spec.signal >= 0 && spec.signal <= 1) || !(spec.binary_share >= 0 && spec.binary_share <= 1)) {
    throw ConfigError("gen-corpus: signal and binary_share must be in [0, 1]");
  }
  fs::create_directories(dest);
  const Dictionary dict = compile_dictionary({});
  CorpusSummary summary;

  std::ofstream manifest(dest / "manifest.csv", std::ios::binary);
  manifest << "volume_id,path,file_name,label\n";

  for (const auto& vol : spec.volumes) {
    Rng rng(derive_seed(spec.seed, "gen-corpus/" + vol.id));
    const double rate = std::clamp(spec.sensitive_rate.value_or(vol.sensitive_rate), 0.0, 1.0);
    const fs::path root = dest / "volumes" / vol.id;
    fs::create_directories(root);
    const std::size_t users = std::max<std::size_t>(1, vol.files / 60);

    struct Row {
      std::string path, name, label;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < vol.files; ++i) {
      // Location: a few files at the volume root, the rest in user folders.
      std::string dir;
      if (rng.uniform() >= 0.02) {
        char user[32];
        std::snprintf(user, sizeof user, "u%04zu", static_cast<std::size_t>(rng.below(users)));
        dir = user;
        if (rng.uniform() < 0.8) dir += std::string("/") + pick(rng, kSubfolders);
      }
      const bool binary = rng.uniform() < spec.binary_share;
      const bool sensitive = !binary && rng.bernoulli(rate);
      const bool agrees_ext = rng.bernoulli(spec.signal);
      const bool agrees_name = rng.bernoulli(spec.signal);

      std::string ext;
      if (binary) ext = pick(rng, kBinaryExt);
      else if (rng.uniform() < 0.1) ext = ".txt";
      else ext = (sensitive == agrees_ext) ? pick(rng, kSensitiveExt) : pick(rng, kNeutralExt);

      std::string name = (sensitive == agrees_name) ? pick(rng, kSensitiveTokens) : pick(rng, kNeutralTokens);
      for (auto extra = rng.below(3); extra > 0; --extra) name += std::string("_") + pick(rng, kCommonTokens);
      name += "_" + std::to_string(i) + ext;

      std::string bytes;
      if (binary) {
        for (std::size_t k = 0, n = 256 + rng.below(4096); k < n; ++k) bytes += static_cast<char>(rng.below(256));
        bytes[0] = '\0';
      } else {
        std::size_t words = 40 + rng.below(400);
        if (ext == ".txt" && sensitive) words += 600;  // long text files lean sensitive
        std::string body = filler(rng, words);
        if (sensitive) {
          for (auto n = 1 + rng.below(3); n > 0; --n) {
            const auto at = body.find(' ', rng.below(body.size()));
            body.insert(at == std::string::npos ? body.size() : at, " " + planted_item(rng) + " ");
          }
        }
        bytes = wrap(ext, body);
      }

      const fs::path dir_path = dir.empty() ? root : root / dir;
      fs::create_directories(dir_path);
      const fs::path file = dir_path / name;
      {
        std::ofstream out(file, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("gen-corpus: cannot write " + file.string());
      }

      // Times: stale files were last modified one to four years ago.
      const bool stale = rng.bernoulli(vol.stale_share);
      const double age_days = stale ? 365.0 + rng.uniform() * 3 * 365.0 : rng.uniform() * 364.0;
      const Timestamp mtime =
          std::chrono::floor<std::chrono::seconds>(spec.now - std::chrono::microseconds(static_cast<std::int64_t>(age_days * 86400e6)));
      const double window_days = std::max(0.0, days_between(mtime, spec.now));
      const double after = rng.bernoulli(0.5) ? rng.uniform() * std::min(14.0, window_days)
                                              : std::min(window_days, 14.0 + rng.uniform() * window_days);
      const Timestamp atime =
          std::chrono::floor<std::chrono::seconds>(mtime + std::chrono::microseconds(static_cast<std::int64_t>(after * 86400e6)));
      set_times(file, atime, mtime);

      SensitivityLabel label = SensitivityLabel::Unknown;
      const auto extracted = extract_text(std::as_bytes(std::span<const char>(bytes.data(), bytes.size())), ext);
      if (extracted.crawled) label = label_file(scan_content(extracted.text, dict), LabelRule{});
      switch (label) {
        case SensitivityLabel::Sensitive: ++summary.sensitive; break;
        case SensitivityLabel::NonSensitive: ++summary.non_sensitive; break;
        case SensitivityLabel::Unknown: ++summary.unknown; break;
      }
      ++summary.files;
      rows.push_back({dir, name, std::string(to_string(label))});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return std::tie(a.path, a.name) < std::tie(b.path, b.name);
    });
    for (const auto& r : rows) {
      manifest << csv::escape(vol.id) << ',' << csv::escape(r.path) << ',' << csv::escape(r.name) << ',' << r.label
               << '\n';
    }
  }

  std::vector<IopsSample> samples;
  const Timestamp start = hour_floor(spec.now) - std::chrono::hours(spec.iops_hours);
  for (const auto& vol : spec.volumes) {
    Rng rng(derive_seed(spec.seed, "gen-iops/" + vol.id));
    const double per_hour = vol.io_density * 3600.0 * static_cast<double>(vol.total_size) / 1e9;
    for (int h = 0; h < spec.iops_hours; ++h) {
      const double wave = 1.0 + 0.5 * std::sin(2 * std::numbers::pi * h / 24.0);
      const double jitter = 0.8 + 0.4 * rng.uniform();
      samples.push_back({vol.id, start + std::chrono::hours(h),
                         static_cast<std::uint64_t>(std::llround(per_hour * wave * jitter))});
    }
  }
  {
    std::ofstream out(dest / "iops.csv", std::ios::binary);
    write_iops(samples, out);
  }
  {
    std::ofstream out(dest / "volumes.csv", std::ios::binary);
    out << "volume_id,total_size\n";
    for (const auto& vol : spec.volumes) out << csv::escape(vol.id) << ',' << vol.total_size << '\n';
  }
  {
    std::ofstream out(dest / "pipeline.toml", std::ios::binary);
    out << "seed = " << spec.seed << "\n"
        << "now = \"" << format_rfc3339(spec.now) << "\"\n"
        << "output_dir = \"out\"\n"
        << "iops = \"iops.csv\"\n"
        << "volume_sizes = \"volumes.csv\"\n"
        << "truth = \"manifest.csv\"\n";
    for (const auto& vol : spec.volumes) {
      out << "\n[[volume]]\nid = \"" << vol.id << "\"\nroot = \"volumes/" << vol.id << "\"\n";
    }
  }
  return summary;
}

}  // namespace stackinsights
