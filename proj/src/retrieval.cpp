#include "xvg/retrieval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "xvg/error.hpp"
#include "xvg/kernels.hpp"
#include "xvg/seed.hpp"

namespace xvg::eval {

using json = nlohmann::json;

std::string to_string(Direction d) { return d == Direction::d2s ? "D2S" : "S2D"; }

Direction parse_direction(const std::string& s) {
  if (s == "d2s" || s == "D2S") return Direction::d2s;
  if (s == "s2d" || s == "S2D") return Direction::s2d;
  throw ArgumentError("unknown direction: " + s + " (expected d2s or s2d)");
}

std::vector<std::size_t> rank_gallery(std::span<const double> query, const Matrix& gallery) {
  if (gallery.rows() == 0) throw ArgumentError("rank_gallery: empty gallery");
  if (gallery.cols() != query.size()) throw ArgumentError("rank_gallery: dimension mismatch");
  std::vector<double> dist(gallery.rows());
  for (std::size_t i = 0; i < gallery.rows(); ++i) dist[i] = kernels::squared_distance(query, gallery.row(i));
  std::vector<std::size_t> order(gallery.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  return order;
}

namespace {

void check_truth(const std::vector<std::vector<std::size_t>>& rankings, const std::vector<std::set<std::size_t>>& truth) {
  if (rankings.size() != truth.size()) throw ArgumentError("one ground-truth set per query required");
  if (rankings.empty()) throw ArgumentError("no queries");
  for (std::size_t q = 0; q < truth.size(); ++q) {
    if (truth[q].empty()) throw ProtocolError("query " + std::to_string(q) + " has no true match in the gallery");
  }
}

}  // namespace

double recall_at_k(const std::vector<std::vector<std::size_t>>& rankings,
                   const std::vector<std::set<std::size_t>>& truth, int k) {
  if (k < 1) throw ArgumentError("recall_at_k: k must be at least 1");
  check_truth(rankings, truth);
  std::size_t hits = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), rankings[q].size());
    hits += std::any_of(rankings[q].begin(), rankings[q].begin() + static_cast<std::ptrdiff_t>(n),
                        [&](std::size_t id) { return truth[q].count(id) > 0; });
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double average_precision(std::span<const std::size_t> ranking, const std::set<std::size_t>& truth) {
  if (truth.empty()) throw ProtocolError("average_precision: no true match");
  double sum = 0.0;
  std::size_t found = 0;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (truth.count(ranking[r])) {
      ++found;
      sum += static_cast<double>(found) / static_cast<double>(r + 1);
    }
  }
  if (found != truth.size()) throw ProtocolError("average_precision: a true match is missing from the ranking");
  return sum / static_cast<double>(truth.size());
}

double mean_average_precision(const std::vector<std::vector<std::size_t>>& rankings,
                              const std::vector<std::set<std::size_t>>& truth) {
  check_truth(rankings, truth);
  double sum = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) sum += average_precision(rankings[q], truth[q]);
  return 100.0 * sum / static_cast<double>(rankings.size());
}

MetricRow score(const std::string& condition, const std::vector<std::vector<std::size_t>>& rankings,
                const std::vector<std::set<std::size_t>>& truth) {
  return {condition, recall_at_k(rankings, truth, 1), recall_at_k(rankings, truth, 5),
          recall_at_k(rankings, truth, 10), mean_average_precision(rankings, truth)};
}

// ---------------------------------------------------------------------------

void RetrievalReport::recompute_mean() {
  mean = {"Mean", 0, 0, 0, 0};
  if (rows.empty()) return;
  for (const auto& r : rows) {
    mean.r1 += r.r1;
    mean.r5 += r.r5;
    mean.r10 += r.r10;
    mean.ap += r.ap;
  }
  const double n = static_cast<double>(rows.size());
  mean.r1 /= n;
  mean.r5 /= n;
  mean.r10 /= n;
  mean.ap /= n;
}

namespace {

json row_json(const MetricRow& r) {
  return {{"condition", r.condition}, {"r1", r.r1}, {"r5", r.r5}, {"r10", r.r10}, {"ap", r.ap}};
}

MetricRow row_from(const json& j) {
  return {j.at("condition").get<std::string>(), j.at("r1").get<double>(), j.at("r5").get<double>(),
          j.at("r10").get<double>(), j.at("ap").get<double>()};
}

}  // namespace

std::string RetrievalReport::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows) rows_j.push_back(row_json(r));
  return json({{"direction", direction}, {"rows", rows_j}, {"mean", row_json(mean)}}).dump(2) + "\n";
}

RetrievalReport RetrievalReport::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RetrievalReport r;
    r.direction = j.at("direction").get<std::string>();
    for (const auto& row : j.at("rows")) r.rows.push_back(row_from(row));
    r.mean = row_from(j.at("mean"));
    return r;
  } catch (const json::exception& e) {
    throw StructuralError(std::string("malformed retrieval report: ") + e.what());
  }
}

std::string RetrievalReport::to_table() const {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %8s %8s\n", direction.c_str(), "R@1", "R@5", "R@10", "AP");
  out += buf;
  auto line = [&](const MetricRow& r) {
    std::snprintf(buf, sizeof buf, "%-10s %8.2f %8.2f %8.2f %8.2f\n", r.condition.c_str(), r.r1, r.r5, r.r10, r.ap);
    out += buf;
  };
  for (const auto& r : rows) line(r);
  line(mean);
  return out;
}

RetrievalReport average_reports(const std::vector<RetrievalReport>& reports) {
  if (reports.empty()) throw ArgumentError("average_reports: no reports");
  RetrievalReport out = reports.front();
  for (std::size_t k = 1; k < reports.size(); ++k) {
    const auto& r = reports[k];
    if (r.direction != out.direction || r.rows.size() != out.rows.size()) {
      throw ArgumentError("average_reports: reports differ in direction or conditions");
    }
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      if (r.rows[i].condition != out.rows[i].condition) throw ArgumentError("average_reports: condition order differs");
      out.rows[i].r1 += r.rows[i].r1;
      out.rows[i].r5 += r.rows[i].r5;
      out.rows[i].r10 += r.rows[i].r10;
      out.rows[i].ap += r.rows[i].ap;
    }
  }
  const double n = static_cast<double>(reports.size());
  for (auto& row : out.rows) {
    row.r1 /= n;
    row.r5 /= n;
    row.r10 /= n;
    row.ap /= n;
  }
  out.recompute_mean();
  return out;
}

std::string delta_table(const RetrievalReport& a, const RetrievalReport& b) {
  if (a.rows.size() != b.rows.size()) throw ArgumentError("delta_table: reports cover different conditions");
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %8s %8s %8s %8s\n", (a.direction + "/" + b.direction).c_str(), "R@1 a",
                "R@1 b", "dR@1", "AP a", "AP b", "dAP");
  out += buf;
  auto line = [&](const MetricRow& x, const MetricRow& y) {
    if (x.condition != y.condition) throw ArgumentError("delta_table: condition order differs");
    std::snprintf(buf, sizeof buf, "%-10s %8.2f %8.2f %+8.2f %8.2f %8.2f %+8.2f\n", x.condition.c_str(), x.r1, y.r1,
                  y.r1 - x.r1, x.ap, y.ap, y.ap - x.ap);
    out += buf;
  };
  for (std::size_t i = 0; i < a.rows.size(); ++i) line(a.rows[i], b.rows[i]);
  line(a.mean, b.mean);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

const caption::CaptionRecord& caption_for(const caption::CaptionIndex& idx, const std::string& split,
                                          const std::string& view, int loc, const std::string& condition) {
  const auto* rec = idx.find(split, view, loc, condition);
  if (!rec || rec->status != caption::Status::accepted) {
    throw ArgumentError("missing caption for " + split + "/" + view + "/location " + std::to_string(loc) + "/" +
                        condition);
  }
  return *rec;
}

}  // namespace

RetrievalReport evaluate(const EvalInputs& in, Direction direction) {
  if (!in.model || !in.data) throw ArgumentError("evaluate: model and data are required");
  const auto& m = *in.model;
  const auto& d = *in.data;
  const bool text = m.config.use_text;
  if (text && !in.captions) throw ArgumentError("evaluate: captions are required in text modes");
  const std::string split = data::to_string(d.index.split);

  std::vector<std::size_t> drones, sats;
  for (std::size_t i = 0; i < d.index.entries.size(); ++i) {
    (d.index.entries[i].view == data::ViewKind::drone ? drones : sats).push_back(i);
  }

  // Clean satellite side, shared by every condition.
  std::vector<ImageTensor> sat_images;
  std::vector<std::string> sat_texts;
  for (std::size_t i : sats) {
    sat_images.push_back(d.images[i]);
    if (text) {
      sat_texts.push_back(in.satellite_text == "neutral_constant"
                              ? pipeline::kNeutralSatelliteText
                              : caption_for(*in.captions, split, "satellite", d.index.entries[i].location_id, "Normal")
                                    .full_text());
    }
  }
  const Matrix sat_emb = model::retrieval_embedding(m, sat_images, sat_texts);

  RetrievalReport report;
  report.direction = to_string(direction);
  for (std::size_t c = 0; c < in.suite.size(); ++c) {
    const auto& cond = in.suite[c];
    std::vector<ImageTensor> drone_images;
    std::vector<std::string> drone_texts;
    for (std::size_t i : drones) {
      const auto spec = weather::reseeded(cond.spec, split_seed(in.seed, {static_cast<std::uint64_t>(i), c}));
      drone_images.push_back(weather::apply_weather(d.images[i], spec));
      if (text) {
        drone_texts.push_back(
            caption_for(*in.captions, split, "drone", d.index.entries[i].location_id, cond.name).full_text());
      }
    }
    const Matrix drone_emb = model::retrieval_embedding(m, drone_images, drone_texts);

    const bool d2s = direction == Direction::d2s;
    const Matrix& queries = d2s ? drone_emb : sat_emb;
    const Matrix& gallery = d2s ? sat_emb : drone_emb;
    const auto& q_entries = d2s ? drones : sats;
    const auto& g_entries = d2s ? sats : drones;

    std::vector<std::vector<std::size_t>> rankings;
    std::vector<std::set<std::size_t>> truth;
    for (std::size_t q = 0; q < queries.rows(); ++q) {
      rankings.push_back(rank_gallery(queries.row(q), gallery));
      const int loc = d.index.entries[q_entries[q]].location_id;
      std::set<std::size_t> t;
      for (std::size_t gi = 0; gi < g_entries.size(); ++gi)
        if (d.index.entries[g_entries[gi]].location_id == loc) t.insert(gi);
      truth.push_back(std::move(t));
    }
    report.rows.push_back(score(cond.name, rankings, truth));
  }
  report.recompute_mean();
  return report;
}

}  // namespace xvg::eval
