#include "stackinsights/plan.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

#include "stackinsights/csv.hpp"

namespace stackinsights {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

bool mostly_non_classifiable(std::size_t non_classifiable, std::size_t total) { return 2 * non_classifiable > total; }

}  // namespace

void write_predictions_csv(std::span<const FilePrediction> predictions, std::ostream& out) {
  out << "volume_id,path,file_name,source,label,score,classifiable\n";
  for (const auto& p : predictions) {
    out << csv::escape(p.volume_id) << ',' << csv::escape(p.path) << ',' << csv::escape(p.file_name) << ','
        << (p.source == PredictionSource::Scan ? "scan" : "model") << ',' << to_string(p.label) << ','
        << csv::number(p.score) << ',' << (p.classifiable ? "true" : "false") << '\n';
  }
}

std::vector<FilePrediction> read_predictions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      csv::split_line(line) !=
          std::vector<std::string>{"volume_id", "path", "file_name", "source", "label", "score", "classifiable"}) {
    throw Error("predictions csv: unexpected header");
  }
  std::vector<FilePrediction> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split_line(line);
    const std::string where = "predictions csv row " + std::to_string(row);
    if (f.size() != 7) throw Error(where + ": expected 7 fields");
    FilePrediction p;
    p.volume_id = f[0];
    p.path = f[1];
    p.file_name = f[2];
    if (f[3] == "scan") p.source = PredictionSource::Scan;
    else if (f[3] == "model") p.source = PredictionSource::Model;
    else throw Error(where + ": unknown source '" + f[3] + "'");
    try {
      p.label = label_from_string(f[4]);
      p.score = csv::parse_number(f[5]);
    } catch (const std::exception& e) {
      throw Error(where + ": " + e.what());
    }
    if (f[6] != "true" && f[6] != "false") throw Error(where + ": classifiable must be true or false");
    p.classifiable = f[6] == "true";
    out.push_back(std::move(p));
  }
  return out;
}

std::string format_score(double score) { return fixed(score, 4); }

std::vector<SensitivityScore> volume_scores(std::span<const FilePrediction> predictions) {
  std::map<std::string, SensitivityScore> by_id;
  for (const auto& p : predictions) {
    auto& s = by_id[p.volume_id];
    s.id = p.volume_id;
    ++s.total_count;
    if (p.label == SensitivityLabel::Sensitive) ++s.sensitive_count;
    if (!p.classifiable) ++s.non_classifiable_count;
  }
  std::vector<SensitivityScore> out;
  for (auto& [id, s] : by_id) {
    s.score = static_cast<double>(s.sensitive_count) / static_cast<double>(s.total_count);
    out.push_back(std::move(s));
  }
  return out;
}

std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::PublicCloudCandidate: return "PublicCloudCandidate";
    case Quadrant::PrivateOrOnPremise: return "PrivateOrOnPremise";
    case Quadrant::NeedsDomainReview: return "NeedsDomainReview";
  }
  return "PrivateOrOnPremise";
}

std::vector<Recommendation> classify(std::span<const SensitivityScore> scores,
                                     const std::map<std::string, double>& hotness, double x_threshold,
                                     double y_threshold) {
  std::vector<Recommendation> out;
  for (const auto& s : scores) {
    const auto it = hotness.find(s.id);
    if (it == hotness.end()) throw Error("classify: no hotness value for " + s.id);
    Recommendation r{s.id, s.score, it->second, quadrant(s.score, it->second, x_threshold, y_threshold),
                     x_threshold, y_threshold};
    if (mostly_non_classifiable(s.non_classifiable_count, s.total_count)) r.quadrant = Quadrant::NeedsDomainReview;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<UserPoint> user_map(std::span<const FilePrediction> predictions, std::span<const FileMeta> corpus,
                                Timestamp now) {
  using Key = std::tuple<std::string_view, std::string_view, std::string_view>;
  std::map<Key, const FileMeta*> meta;
  for (const auto& f : corpus) meta.emplace(Key{f.volume_id, f.path, f.file_name}, &f);
  struct Tally {
    UserPoint point;
    std::size_t stale = 0;
  };
  std::map<std::pair<std::string, std::string>, Tally> folders;
  for (const auto& p : predictions) {
    const auto it = meta.find(Key{p.volume_id, p.path, p.file_name});
    if (it == meta.end()) throw Error("user_map: no metadata for " + p.volume_id + ":" + p.path + "/" + p.file_name);
    const FileMeta& f = *it->second;
    if (f.user_folder.empty()) continue;
    auto& t = folders[{f.volume_id, f.user_folder}];
    t.point.volume_id = f.volume_id;
    t.point.user_folder = f.user_folder;
    ++t.point.file_count;
    if (p.label == SensitivityLabel::Sensitive) ++t.point.sensitive_count;
    if (!p.classifiable) ++t.point.non_classifiable_count;
    if (f.last_accessed < now - std::chrono::days{365}) ++t.stale;
  }
  std::vector<UserPoint> out;
  for (auto& [key, t] : folders) {
    const double n = static_cast<double>(t.point.file_count);
    t.point.sensitivity = static_cast<double>(t.point.sensitive_count) / n;
    t.point.hotness = 1.0 - static_cast<double>(t.stale) / n;
    out.push_back(std::move(t.point));
  }
  return out;
}

ScanReductionReport scan_reduction_report(std::size_t total, std::size_t predicted_non_sensitive,
                                          std::size_t false_positives, double sensitive_share) {
  if (total == 0) throw Error("scan reduction: no files");
  if (predicted_non_sensitive > total || false_positives > total - predicted_non_sensitive) {
    throw Error("scan reduction: counts exceed the total");
  }
  ScanReductionReport r;
  r.total = total;
  r.predicted_non_sensitive = predicted_non_sensitive;
  r.predicted_sensitive = total - predicted_non_sensitive;
  r.false_positives = false_positives;
  const double n = static_cast<double>(total);
  r.rescan_fraction = static_cast<double>(predicted_non_sensitive) / n;
  // Complement rather than a second quotient, so the two fractions sum to exactly 1.
  r.predicted_sensitive_fraction = 1.0 - r.rescan_fraction;
  r.over_protected_fraction = static_cast<double>(false_positives) / n;
  r.sensitive_share = sensitive_share;
  r.baseline_over_protection = baseline_over_protection(sensitive_share);
  return r;
}

ScanReductionReport scan_reduction_report(const Metrics& m) {
  const std::size_t total = m.tp + m.fp + m.fn + m.tn;
  if (total == 0) throw Error("scan reduction: no files");
  return scan_reduction_report(total, m.tn + m.fn, m.fp,
                               static_cast<double>(m.tp + m.fn) / static_cast<double>(total));
}

nlohmann::json to_json(const ScanReductionReport& r) {
  nlohmann::json j = {{"total", r.total},
                      {"predicted_sensitive", r.predicted_sensitive},
                      {"predicted_non_sensitive", r.predicted_non_sensitive},
                      {"false_positives", r.false_positives},
                      {"rescan_fraction", r.rescan_fraction},
                      {"predicted_sensitive_fraction", r.predicted_sensitive_fraction},
                      {"over_protected_fraction", r.over_protected_fraction},
                      {"sensitive_share", r.sensitive_share},
                      {"baseline_over_protection", r.baseline_over_protection}};
  if (!r.over_protection_known) j["false_positives"] = j["over_protected_fraction"] = nullptr;
  return j;
}

void write_map_csv(std::span<const MapPoint> points, const MapStyle& style, std::ostream& out) {
  out << "subject,sensitivity,hotness,hotness_unit,quadrant,x_threshold,y_threshold\n";
  for (const auto& p : points) {
    out << csv::escape(p.id) << ',' << csv::number(p.sensitivity) << ',' << csv::number(p.hotness) << ','
        << csv::escape(style.hotness_unit) << ',' << to_string(p.quadrant) << ',' << csv::number(style.x_threshold)
        << ',' << csv::number(style.y_threshold) << '\n';
  }
}

void write_map_svg(std::span<const MapPoint> points, const MapStyle& style, std::ostream& out) {
  constexpr double kWidth = 640, kHeight = 480, kLeft = 70, kRight = 30, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  double x_max = style.x_threshold;
  for (const auto& p : points) x_max = std::max(x_max, p.hotness);
  x_max = x_max > 0 ? x_max * 1.1 : 1.0;
  const auto sx = [&](double x) { return fixed(kLeft + plot_w * x / x_max, 2); };
  const auto sy = [&](double y) { return fixed(kTop + plot_h * (1.0 - y), 2); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
  out << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  out << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(style.title) << "</text>\n";
  out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(x_max) << "\" y2=\"" << sy(0)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(0) << "\" y2=\"" << sy(1)
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = t / 4.0;
    out << "<text x=\"" << fixed(kLeft - 8, 2) << "\" y=\"" << sy(y) << "\" text-anchor=\"end\" font-size=\"10\">"
        << fixed(y, 2) << "</text>\n";
    const double x = x_max * t / 4.0;
    out << "<text x=\"" << sx(x) << "\" y=\"" << fixed(kTop + plot_h + 16, 2)
        << "\" text-anchor=\"middle\" font-size=\"10\">" << fixed(x, 4) << "</text>\n";
  }
  out << "<text x=\"320\" y=\"" << fixed(kHeight - 14, 2) << "\" text-anchor=\"middle\" font-size=\"12\">hotness ("
      << xml_escape(style.hotness_unit) << ")</text>\n";
  out << "<text x=\"16\" y=\"" << fixed(kTop + plot_h / 2, 2) << "\" transform=\"rotate(-90 16 "
      << fixed(kTop + plot_h / 2, 2) << ")\" text-anchor=\"middle\" font-size=\"12\">sensitivity</text>\n";
  out << "<line x1=\"" << sx(style.x_threshold) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(style.x_threshold)
      << "\" y2=\"" << sy(1) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(style.y_threshold) << "\" x2=\"" << sx(x_max) << "\" y2=\""
      << sy(style.y_threshold) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  for (const auto& p : points) {
    const char* colour = p.quadrant == Quadrant::PublicCloudCandidate ? "#2a9d8f"
                         : p.quadrant == Quadrant::NeedsDomainReview  ? "#e9c46a"
                                                                       : "#e76f51";
    out << "<circle cx=\"" << sx(p.hotness) << "\" cy=\"" << sy(p.sensitivity) << "\" r=\"4\" fill=\"" << colour
        << "\"><title>" << xml_escape(p.id) << "</title></circle>\n";
    out << "<text x=\"" << fixed(kLeft + plot_w * p.hotness / x_max + 6, 2) << "\" y=\""
        << fixed(kTop + plot_h * (1.0 - p.sensitivity) - 6, 2) << "\" font-size=\"10\">" << xml_escape(p.id)
        << "</text>\n";
  }
  out << "</svg>\n";
}

void emit_map(std::span<const MapPoint> points, const MapStyle& style, const std::filesystem::path& dest,
              std::string_view stem) {
  std::filesystem::create_directories(dest);
  const auto write = [&](const std::string& ext, auto&& body) {
    const auto path = dest / (std::string(stem) + ext);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    body(out);
    if (!out) throw Error("failed writing " + path.string());
  };
  write(".csv", [&](std::ostream& o) { write_map_csv(points, style, o); });
  write(".svg", [&](std::ostream& o) { write_map_svg(points, style, o); });
}

void emit_maps(std::span<const Recommendation> volumes, std::span<const UserPoint> users, double x_threshold,
               double user_x_threshold, double y_threshold, const std::filesystem::path& dest) {
  std::vector<MapPoint> vpoints;
  const MapStyle vstyle{"Volume sensitivity and IO density", "IO/s per GB", x_threshold, y_threshold};
  for (const auto& r : volumes) vpoints.push_back({r.id, r.sensitivity, r.hotness, r.quadrant});
  emit_map(vpoints, vstyle, dest, "volume_map");

  std::vector<MapPoint> upoints;
  const MapStyle ustyle{"User sensitivity and data hotness", "fraction accessed in past year", user_x_threshold,
                        y_threshold};
  for (const auto& u : users) {
    Quadrant q = quadrant(u.sensitivity, u.hotness, user_x_threshold, y_threshold);
    if (mostly_non_classifiable(u.non_classifiable_count, u.file_count)) q = Quadrant::NeedsDomainReview;
    upoints.push_back({u.id(), u.sensitivity, u.hotness, q});
  }
  emit_map(upoints, ustyle, dest, "user_map");
}

}  // namespace stackinsights
