#pragma once

// Reviews, calendar quarters and revenue series, plus their file formats.

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aspectcast/csv.hpp"
#include "aspectcast/error.hpp"
#include "aspectcast/text.hpp"

namespace aspectcast {

/// A calendar quarter. Ordered lexicographically by (year, index).
class Quarter {
 public:
  Quarter() = default;
  Quarter(int year, int index) : year_(year), index_(index) {
    if (index < 1 || index > 4) throw Error("invalid quarter index " + std::to_string(index));
  }

  int year() const noexcept { return year_; }
  int index() const noexcept { return index_; }

  Quarter next() const { return index_ == 4 ? Quarter(year_ + 1, 1) : Quarter(year_, index_ + 1); }
  Quarter prev() const { return index_ == 1 ? Quarter(year_ - 1, 4) : Quarter(year_, index_ - 1); }

  std::string str() const { return std::to_string(year_) + "Q" + std::to_string(index_); }

  /// Parses "YYYYQn" (a lowercase q is accepted).
  static Quarter parse(std::string_view s) {
    s = text::trim(s);
    const auto q = s.find_first_of("Qq");
    if (q == std::string_view::npos || q == 0 || q + 2 != s.size()) {
      throw Error("invalid quarter '" + std::string(s) + "' (expected YYYYQn)");
    }
    int year = 0;
    const auto year_part = s.substr(0, q);
    auto [ptr, ec] = std::from_chars(year_part.data(), year_part.data() + year_part.size(), year);
    if (ec != std::errc{} || ptr != year_part.data() + year_part.size()) {
      throw Error("invalid quarter year in '" + std::string(s) + "'");
    }
    const char d = s[q + 1];
    if (d < '0' || d > '9') throw Error("invalid quarter '" + std::string(s) + "'");
    const int index = d - '0';
    if (index < 1 || index > 4) throw Error("invalid quarter index in '" + std::string(s) + "'");
    return Quarter(year, index);
  }

  friend auto operator<=>(const Quarter&, const Quarter&) = default;

 private:
  int year_ = 1970;
  int index_ = 1;
};

struct Review {
  std::string id;
  Quarter quarter;
  std::string text;
  std::optional<std::string> source;

  friend bool operator==(const Review&, const Review&) = default;
};

enum class ReviewFormat { jsonl, csv };

inline ReviewFormat review_format_from_path(std::string_view path) {
  if (path.ends_with(".csv")) return ReviewFormat::csv;
  return ReviewFormat::jsonl;
}

namespace detail {

inline void check_review(const Review& r, std::size_t line, std::set<std::string>& seen) {
  if (r.id.empty()) throw ParseError(line, "review id is empty");
  if (text::trim(r.text).empty()) throw ParseError(line, "empty text for review '" + r.id + "'");
  if (!seen.insert(r.id).second) throw ParseError(line, "duplicate review id '" + r.id + "'");
}

inline Quarter quarter_at(std::string_view s, std::size_t line) {
  try {
    return Quarter::parse(s);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(line, e.what());
  }
}

inline std::vector<Review> parse_reviews_jsonl(std::string_view content) {
  std::vector<Review> out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const auto line = text::trim(content.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");
    auto field = [&](const char* key) -> std::string {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_string()) {
        throw ParseError(line_no, std::string("missing string field '") + key + "'");
      }
      return it->get<std::string>();
    };
    Review r{field("id"), quarter_at(field("quarter"), line_no), field("text"), std::nullopt};
    if (auto it = obj.find("source"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw ParseError(line_no, "field 'source' must be a string");
      r.source = it->get<std::string>();
    }
    check_review(r, line_no, seen);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<Review> parse_reviews_csv(std::string_view content) {
  const auto records = csv::parse(content);
  std::vector<Review> out;
  if (records.empty()) return out;

  const auto& header = records.front().fields;
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (text::trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = column("id");
  const auto quarter_col = column("quarter");
  const auto text_col = column("text");
  const auto source_col = column("source");
  if (!id_col || !quarter_col || !text_col) throw ParseError(1, "CSV header must contain id,quarter,text");

  std::set<std::string> seen;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() != header.size()) {
      throw ParseError(rec.line, "expected " + std::to_string(header.size()) + " fields, found " +
                                     std::to_string(rec.fields.size()));
    }
    Review r{rec.fields[*id_col], quarter_at(rec.fields[*quarter_col], rec.line), rec.fields[*text_col],
             std::nullopt};
    if (source_col && !rec.fields[*source_col].empty()) r.source = rec.fields[*source_col];
    check_review(r, rec.line, seen);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace detail

/// Parses a review file. Errors carry the offending line number.
inline std::vector<Review> parse_reviews(std::string_view content, ReviewFormat format) {
  return format == ReviewFormat::jsonl ? detail::parse_reviews_jsonl(content)
                                       : detail::parse_reviews_csv(content);
}

inline std::string serialize_reviews(const std::vector<Review>& reviews, ReviewFormat format) {
  std::string out;
  if (format == ReviewFormat::jsonl) {
    for (const auto& r : reviews) {
      nlohmann::ordered_json obj;
      obj["id"] = r.id;
      obj["quarter"] = r.quarter.str();
      obj["text"] = r.text;
      if (r.source) obj["source"] = *r.source;
      out += obj.dump();
      out.push_back('\n');
    }
    return out;
  }
  const bool with_source = std::any_of(reviews.begin(), reviews.end(), [](const Review& r) { return r.source; });
  out = with_source ? "id,quarter,text,source\n" : "id,quarter,text\n";
  for (const auto& r : reviews) {
    std::vector<std::string> row{r.id, r.quarter.str(), r.text};
    if (with_source) row.push_back(r.source.value_or(""));
    out += csv::join_row(row);
  }
  return out;
}

/// Partition by quarter; order inside each group follows the input.
inline std::map<Quarter, std::vector<Review>> group_by_quarter(const std::vector<Review>& reviews) {
  std::map<Quarter, std::vector<Review>> groups;
  for (const auto& r : reviews) groups[r.quarter].push_back(r);
  return groups;
}

/// Contiguous quarterly revenue (millions USD), strictly increasing quarters.
class RevenueSeries {
 public:
  using Point = std::pair<Quarter, double>;

  RevenueSeries() = default;

  /// Sorts the points and validates contiguity and positivity.
  static RevenueSeries from_points(std::vector<Point> points) {
    std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!(points[i].second > 0.0)) {
        throw Error("non-positive revenue " + csv::format_exact(points[i].second) + " in " + points[i].first.str());
      }
      if (i == 0) continue;
      if (points[i].first == points[i - 1].first) throw Error("duplicate quarter " + points[i].first.str());
      if (points[i].first != points[i - 1].first.next()) {
        throw Error("missing " + points[i - 1].first.next().str());
      }
    }
    RevenueSeries s;
    s.points_ = std::move(points);
    return s;
  }

  const std::vector<Point>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

 private:
  std::vector<Point> points_;
};

/// Parses a `quarter,revenue` CSV; rows may appear in any order.
inline RevenueSeries parse_revenue(std::string_view content) {
  const auto records = csv::parse(content);
  if (records.empty()) throw ParseError(1, "revenue CSV is empty (expected header quarter,revenue)");
  const auto& header = records.front().fields;
  if (header.size() != 2 || text::trim(header[0]) != "quarter" || text::trim(header[1]) != "revenue") {
    throw ParseError(1, "revenue CSV header must be quarter,revenue");
  }
  std::vector<RevenueSeries::Point> points;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() != 2) throw ParseError(rec.line, "expected 2 fields");
    points.emplace_back(detail::quarter_at(rec.fields[0], rec.line),
                        csv::parse_double(text::trim(rec.fields[1]), rec.line, "revenue"));
  }
  return RevenueSeries::from_points(std::move(points));
}

}  // namespace aspectcast
