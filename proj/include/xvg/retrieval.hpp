#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "xvg/caption.hpp"
#include "xvg/matrix.hpp"
#include "xvg/model.hpp"
#include "xvg/pipeline.hpp"
#include "xvg/weather.hpp"

namespace xvg::eval {

enum class Direction { d2s, s2d };
std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

/// Gallery row indices ordered by ascending Euclidean distance to `query`;
/// equal distances keep ascending row order. Throws on an empty gallery.
std::vector<std::size_t> rank_gallery(std::span<const double> query, const Matrix& gallery);

/// Percentage of queries with a true match in the top k. Throws ProtocolError
/// when a query has no true match at all.
double recall_at_k(const std::vector<std::vector<std::size_t>>& rankings,
                   const std::vector<std::set<std::size_t>>& truth, int k);

/// Mean of the precision at each true-match rank, in [0, 1].
double average_precision(std::span<const std::size_t> ranking, const std::set<std::size_t>& truth);

/// Mean average precision over queries, ×100.
double mean_average_precision(const std::vector<std::vector<std::size_t>>& rankings,
                              const std::vector<std::set<std::size_t>>& truth);

struct MetricRow {
  std::string condition;
  double r1 = 0, r5 = 0, r10 = 0, ap = 0;
  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

struct RetrievalReport {
  std::string direction;
  std::vector<MetricRow> rows;
  MetricRow mean;

  /// Recomputes `mean` as the arithmetic mean of `rows`.
  void recompute_mean();
  std::string to_json() const;
  static RetrievalReport from_json(const std::string& text);
  /// Aligned plain-text table: header, one row per condition, then Mean.
  std::string to_table() const;
  friend bool operator==(const RetrievalReport&, const RetrievalReport&) = default;
};

/// Per-condition average of reports sharing direction and condition order;
/// the Mean row is recomputed from the averaged rows.
RetrievalReport average_reports(const std::vector<RetrievalReport>& reports);

/// Side-by-side R@1 and AP of two reports with (b − a) deltas.
std::string delta_table(const RetrievalReport& a, const RetrievalReport& b);

MetricRow score(const std::string& condition, const std::vector<std::vector<std::size_t>>& rankings,
                const std::vector<std::set<std::size_t>>& truth);

struct EvalInputs {
  const model::Model* model = nullptr;
  const pipeline::SplitData* data = nullptr;
  const caption::CaptionIndex* captions = nullptr;
  std::vector<weather::NamedCondition> suite;
  std::string satellite_text = "generated";
  std::uint64_t seed = 7;
};

/// D2S: every test drone view, weathered per condition, queries the clean
/// satellite gallery. S2D: every satellite view queries the drone gallery
/// weathered per condition; all drone views of the location are true matches.
RetrievalReport evaluate(const EvalInputs& in, Direction direction);

}  // namespace xvg::eval
