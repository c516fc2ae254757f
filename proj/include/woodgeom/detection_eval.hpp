#pragma once

// Detection protocol shared by the 3D and 2D evaluators: greedy
// confidence-ordered matching and 41-point interpolated AP / AOS.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace woodgeom {

struct MatchResult {
  std::vector<std::optional<std::size_t>> gt_of_pred;  // per prediction
  std::vector<double> score;                           // match score, 0 for FPs
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Predictions in order of descending confidence (ties keep input order)
/// each take the highest-scoring still unmatched ground truth whose score
/// reaches `threshold`; otherwise they are false positives. `score(p, g)`
/// is any pairwise similarity where larger is better.
template <class ScoreFn>
MatchResult greedy_match(std::span<const double> confidences, std::size_t n_gt, ScoreFn&& score,
                         double threshold) {
  const std::size_t n = confidences.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return confidences[a] > confidences[b]; });

  MatchResult r;
  r.gt_of_pred.assign(n, std::nullopt);
  r.score.assign(n, 0.0);
  std::vector<bool> taken(n_gt, false);
  for (std::size_t p : order) {
    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t g = 0; g < n_gt; ++g) {
      if (taken[g]) continue;
      const double s = score(p, g);
      if (s >= threshold && (!best || s > best_score)) {
        best = g;
        best_score = s;
      }
    }
    if (best) {
      taken[*best] = true;
      r.gt_of_pred[p] = best;
      r.score[p] = best_score;
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = n_gt - r.tp;
  return r;
}

/// One prediction after matching, pooled over a dataset.
struct ScoredDetection {
  double confidence = 0.0;
  bool true_positive = false;
  double orientation_similarity = 0.0;  // (1 + cos dyaw) / 2 for TPs, 0 otherwise
};

inline constexpr int kRecallPoints = 41;

struct PrecisionRecallPoint {
  double confidence;
  double recall;
  double precision;
  double orientation_precision;
};

/// Precision / recall after each distinct confidence threshold, from the
/// highest threshold down. Tied confidences enter together.
inline std::vector<PrecisionRecallPoint> precision_recall(std::vector<ScoredDetection> dets, std::size_t n_gt) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const ScoredDetection& a, const ScoredDetection& b) { return a.confidence > b.confidence; });
  std::vector<PrecisionRecallPoint> curve;
  double tp = 0.0, sim = 0.0;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    tp += dets[i].true_positive ? 1.0 : 0.0;
    sim += dets[i].true_positive ? dets[i].orientation_similarity : 0.0;
    if (i + 1 < dets.size() && dets[i + 1].confidence == dets[i].confidence) continue;
    const double k = static_cast<double>(i + 1);
    curve.push_back({dets[i].confidence, n_gt ? tp / static_cast<double>(n_gt) : 0.0, tp / k, sim / k});
  }
  return curve;
}

struct ApResult {
  std::optional<double> ap;   // absent without ground truth
  std::optional<double> aos;
  std::size_t n_gt = 0;
  std::size_t n_pred = 0;
  std::size_t tp = 0;
};

/// Mean over recall levels 0, 1/40, ..., 1 of the best precision (and
/// orientation-weighted precision) reached at that recall or beyond.
inline ApResult average_precision(const std::vector<ScoredDetection>& dets, std::size_t n_gt) {
  ApResult r;
  r.n_gt = n_gt;
  r.n_pred = dets.size();
  for (const auto& d : dets) r.tp += d.true_positive;
  if (n_gt == 0) return r;

  const auto curve = precision_recall(dets, n_gt);
  // Suffix maxima over the curve, which is ordered by non-decreasing recall.
  std::vector<double> best_p(curve.size() + 1, 0.0), best_o(curve.size() + 1, 0.0);
  for (std::size_t i = curve.size(); i-- > 0;) {
    best_p[i] = std::max(best_p[i + 1], curve[i].precision);
    best_o[i] = std::max(best_o[i + 1], curve[i].orientation_precision);
  }
  double ap = 0.0, aos = 0.0;
  std::size_t first = 0;
  for (int j = 0; j < kRecallPoints; ++j) {
    const double level = static_cast<double>(j) / (kRecallPoints - 1);
    while (first < curve.size() && curve[first].recall < level - 1e-12) ++first;
    ap += best_p[first];
    aos += best_o[first];
  }
  r.ap = ap / kRecallPoints;
  r.aos = aos / kRecallPoints;
  return r;
}

}  // namespace woodgeom
