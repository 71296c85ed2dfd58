#pragma once

// Revenue growth targets, per-aspect perceptions and the quarters x features
// design matrix shared by every forecaster.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aspectcast/aspects.hpp"
#include "aspectcast/corpus.hpp"
#include "aspectcast/csv.hpp"
#include "aspectcast/error.hpp"

namespace aspectcast {

inline constexpr const char* kLaggedGrowthColumn = "lagged_growth";

/// Quarter -> fractional quarter-over-quarter revenue growth.
class GrowthSeries {
 public:
  using Point = std::pair<Quarter, double>;

  GrowthSeries() = default;
  explicit GrowthSeries(std::vector<Point> points) : points_(std::move(points)) {
    for (std::size_t i = 1; i < points_.size(); ++i) {
      if (!(points_[i - 1].first < points_[i].first)) throw Error("growth quarters must be strictly increasing");
    }
  }

  const std::vector<Point>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(points_.size());
    for (const auto& p : points_) v.push_back(p.second);
    return v;
  }

  std::optional<double> at(const Quarter& q) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), q,
                               [](const Point& p, const Quarter& key) { return p.first < key; });
    if (it == points_.end() || it->first != q) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<Point> points_;
};

/// growth_q = (revenue_q - revenue_{q-1}) / revenue_{q-1} for every quarter after the first.
inline GrowthSeries revenue_growth(const RevenueSeries& series) {
  if (series.size() < 2) throw Error("revenue growth needs at least 2 quarters");
  std::vector<GrowthSeries::Point> out;
  const auto& pts = series.points();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    out.emplace_back(pts[i].first, (pts[i].second - pts[i - 1].second) / pts[i - 1].second);
  }
  return GrowthSeries(std::move(out));
}

struct PerceptionRecord {
  std::string aspect_id;
  Quarter quarter;
  double compound_sum = 0.0;
  std::size_t review_count = 0;
  double perception = 0.0;

  bool empty() const noexcept { return review_count == 0; }
};

/// Mean compound of the reviews referring to an aspect in a quarter; 0 and
/// flagged empty when there are none.
inline PerceptionRecord perception(const std::string& aspect_id, const Quarter& quarter,
                                   std::span<const double> compounds) {
  PerceptionRecord rec{aspect_id, quarter, 0.0, compounds.size(), 0.0};
  for (double c : compounds) {
    if (!(c >= -1.0 && c <= 1.0)) {
      throw Error("compound " + csv::format_exact(c) + " outside [-1, 1] for aspect '" + aspect_id + "'");
    }
    rec.compound_sum += c;
  }
  if (!compounds.empty()) rec.perception = rec.compound_sum / static_cast<double>(compounds.size());
  return rec;
}

/// Rows are quarters, columns are features; `target` holds growth per row.
struct FeatureMatrix {
  std::vector<Quarter> quarters;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
  Eigen::VectorXd target;

  std::size_t rows() const noexcept { return quarters.size(); }
  std::size_t cols() const noexcept { return columns.size(); }

  std::optional<std::size_t> column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    return std::nullopt;
  }

  bool has_lag() const { return column_index(kLaggedGrowthColumn).has_value(); }

  /// Rows [first, first+count) as a new matrix.
  FeatureMatrix slice(std::size_t first, std::size_t count) const {
    FeatureMatrix out;
    out.columns = columns;
    out.quarters.assign(quarters.begin() + static_cast<std::ptrdiff_t>(first),
                        quarters.begin() + static_cast<std::ptrdiff_t>(first + count));
    out.values = values.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
    out.target = target.segment(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
    return out;
  }

  /// Same rows restricted to the named columns, in the given order.
  FeatureMatrix select_columns(const std::vector<std::string>& names) const {
    FeatureMatrix out;
    out.quarters = quarters;
    out.columns = names;
    out.target = target;
    out.values.resize(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
      auto idx = column_index(names[j]);
      if (!idx) throw Error("feature '" + names[j] + "' not present in matrix");
      out.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(*idx));
    }
    return out;
  }
};

/// Builds the design matrix. Rows are the growth quarters that also have a
/// previous growth value when `include_lag` is set; missing perceptions are 0.
inline FeatureMatrix assemble(const std::vector<PerceptionRecord>& perceptions, const GrowthSeries& growth,
                              const std::vector<std::string>& aspects, bool include_lag) {
  for (const auto& id : aspects) {
    if (!is_known_aspect(id)) throw Error("unknown aspect id '" + id + "'");
  }
  std::map<std::pair<std::string, Quarter>, double> lookup;
  for (const auto& p : perceptions) lookup[{p.aspect_id, p.quarter}] = p.perception;

  FeatureMatrix m;
  m.columns = aspects;
  if (include_lag) m.columns.emplace_back(kLaggedGrowthColumn);

  std::vector<std::size_t> rows;
  const auto& pts = growth.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (include_lag && (i == 0 || pts[i - 1].first != pts[i].first.prev())) continue;
    rows.push_back(i);
  }
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.columns.size()));
  m.target.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& [quarter, value] = pts[rows[r]];
    m.quarters.push_back(quarter);
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t c = 0; c < aspects.size(); ++c) {
      if (auto it = lookup.find({aspects[c], quarter}); it != lookup.end()) {
        m.values(row, static_cast<Eigen::Index>(c)) = it->second;
      }
    }
    if (include_lag) m.values(row, static_cast<Eigen::Index>(aspects.size())) = pts[rows[r] - 1].second;
    m.target(row) = value;
  }
  return m;
}

struct SplitRatio {
  double train = 2.0;
  double test = 1.0;
};

/// Earliest ceil(n * train / (train + test)) rows train, the rest test.
inline std::pair<FeatureMatrix, FeatureMatrix> chronological_split(const FeatureMatrix& m, SplitRatio ratio) {
  if (!(ratio.train > 0.0) || !(ratio.test > 0.0)) throw Error("split ratio parts must be positive");
  const std::size_t n = m.rows();
  if (n < 2) throw Error("chronological split needs at least 2 rows, got " + std::to_string(n));
  auto n_train = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * ratio.train / (ratio.train + ratio.test) - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  return {m.slice(0, n_train), m.slice(n_train, n - n_train)};
}

/// Same rule as the matrix split applied to a series.
inline std::pair<GrowthSeries, GrowthSeries> chronological_split(const GrowthSeries& s, SplitRatio ratio) {
  if (!(ratio.train > 0.0) || !(ratio.test > 0.0)) throw Error("split ratio parts must be positive");
  const std::size_t n = s.size();
  if (n < 2) throw Error("chronological split needs at least 2 points, got " + std::to_string(n));
  auto n_train = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * ratio.train / (ratio.train + ratio.test) - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  const auto& p = s.points();
  return {GrowthSeries({p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n_train)}),
          GrowthSeries({p.begin() + static_cast<std::ptrdiff_t>(n_train), p.end()})};
}

/// CSV with header `quarter,<columns...>,target_growth`.
inline std::string write_feature_csv(const FeatureMatrix& m) {
  std::vector<std::string> header{"quarter"};
  header.insert(header.end(), m.columns.begin(), m.columns.end());
  header.emplace_back("target_growth");
  std::string out = csv::join_row(header);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::vector<std::string> row{m.quarters[r].str()};
    for (std::size_t c = 0; c < m.cols(); ++c) {
      row.push_back(csv::format_exact(m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
    }
    row.push_back(csv::format_exact(m.target(static_cast<Eigen::Index>(r))));
    out += csv::join_row(row);
  }
  return out;
}

inline FeatureMatrix read_feature_csv(std::string_view content) {
  const auto records = csv::parse(content);
  if (records.empty()) throw ParseError(1, "feature CSV is empty");
  const auto& header = records.front().fields;
  if (header.size() < 2 || header.front() != "quarter" || header.back() != "target_growth") {
    throw ParseError(1, "feature CSV header must be quarter,<features...>,target_growth");
  }
  FeatureMatrix m;
  m.columns.assign(header.begin() + 1, header.end() - 1);
  for (const auto& c : m.columns) {
    if (c != kLaggedGrowthColumn && !is_known_aspect(c)) throw ParseError(1, "unknown feature column '" + c + "'");
  }
  const auto n = static_cast<Eigen::Index>(records.size() - 1);
  m.values.resize(n, static_cast<Eigen::Index>(m.columns.size()));
  m.target.resize(n);
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() != header.size()) throw ParseError(rec.line, "wrong number of fields");
    m.quarters.push_back(detail::quarter_at(rec.fields[0], rec.line));
    const auto r = static_cast<Eigen::Index>(i - 1);
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
      m.values(r, static_cast<Eigen::Index>(c)) = csv::parse_double(rec.fields[c + 1], rec.line, m.columns[c]);
    }
    m.target(r) = csv::parse_double(rec.fields.back(), rec.line, "target_growth");
    if (i > 1 && !(m.quarters[i - 2] < m.quarters[i - 1])) throw ParseError(rec.line, "quarters must increase");
  }
  return m;
}

}  // namespace aspectcast
