#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "woodgeom/box3d.hpp"
#include "woodgeom/detection_eval.hpp"

namespace woodgeom {

enum class BoxCriterion { Iou3d, Srt };

inline const char* to_string(BoxCriterion c) { return c == BoxCriterion::Srt ? "srt" : "iou3d"; }

/// Default matching thresholds: 0.5 for both criteria.
inline constexpr double kDefaultMatchThreshold = 0.5;

/// Matches one frame's predictions of one class against its ground truth.
inline MatchResult match_detections(const std::vector<Box3D>& preds, const std::vector<Box3D>& gts,
                                    BoxCriterion criterion, double threshold,
                                    const SrtWeights& weights = {}) {
  std::vector<double> conf(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) conf[i] = preds[i].confidence.value_or(0.0);
  if (criterion == BoxCriterion::Srt) {
    const SrtScorer srt(weights);
    return greedy_match(conf, gts.size(),
                        [&](std::size_t p, std::size_t g) { return srt(preds[p], gts[g]).score; }, threshold);
  }
  return greedy_match(conf, gts.size(), [&](std::size_t p, std::size_t g) { return iou_3d(preds[p], gts[g]); },
                      threshold);
}

inline double orientation_similarity(double yaw_a, double yaw_b) {
  return 0.5 * (1.0 + std::cos(yaw_a - yaw_b));
}

/// A box tagged with the frame it belongs to.
struct FrameBox {
  std::string frame;
  Box3D box;
};

/// Fixed-width histogram over [0, 1].
struct Histogram {
  static constexpr int kBins = 10;
  std::array<std::size_t, kBins> counts{};

  void add(double v) {
    const int b = std::clamp(static_cast<int>(v * kBins), 0, kBins - 1);
    ++counts[b];
  }
};

struct ClassEval {
  ApResult ap;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct Eval3DResult {
  std::map<std::string, ClassEval> per_class;
  // SRT components of matched pairs (computed for either criterion).
  Histogram score_hist, scaling_hist, translation_hist, rotation_hist;
  double iou_mean_of_matches = 0.0;
  std::size_t matched = 0;
};

/// Full dataset evaluation: per (class, frame) greedy matching, pooled per
/// class into one precision/recall curve. There are no difficulty bins.
inline Eval3DResult evaluate_3d(const std::vector<FrameBox>& preds, const std::vector<FrameBox>& gts,
                                BoxCriterion criterion, double threshold, const SrtWeights& weights = {}) {
  using Key = std::pair<std::string, std::string>;  // class, frame
  std::map<Key, std::pair<std::vector<Box3D>, std::vector<Box3D>>> groups;
  for (const auto& p : preds) {
    if (!p.box.confidence) throw std::invalid_argument("prediction without confidence");
    groups[{p.box.label, p.frame}].first.push_back(p.box);
  }
  for (const auto& g : gts) groups[{g.box.label, g.frame}].second.push_back(g.box);

  Eval3DResult out;
  std::map<std::string, std::vector<ScoredDetection>> pooled;
  std::map<std::string, std::size_t> n_gt;
  double iou_sum = 0.0;
  for (const auto& [key, boxes] : groups) {
    const auto& [pb, gb] = boxes;
    const MatchResult m = match_detections(pb, gb, criterion, threshold, weights);
    auto& dets = pooled[key.first];
    n_gt[key.first] += gb.size();
    for (std::size_t i = 0; i < pb.size(); ++i) {
      ScoredDetection d{*pb[i].confidence, m.gt_of_pred[i].has_value(), 0.0};
      if (d.true_positive) {
        const Box3D& g = gb[*m.gt_of_pred[i]];
        d.orientation_similarity = orientation_similarity(pb[i].yaw, g.yaw);
        const SrtScore s = srt_score(pb[i], g, weights);
        out.score_hist.add(s.score);
        out.scaling_hist.add(s.scaling);
        out.translation_hist.add(s.translation);
        out.rotation_hist.add(s.rotation);
        iou_sum += iou_3d(pb[i], g);
        ++out.matched;
      }
      dets.push_back(d);
    }
    out.per_class[key.first].fp += m.fp;
    out.per_class[key.first].fn += m.fn;
  }
  for (auto& [cls, e] : out.per_class) e.ap = average_precision(pooled[cls], n_gt[cls]);
  out.iou_mean_of_matches = out.matched ? iou_sum / static_cast<double>(out.matched) : 0.0;
  return out;
}

/// Random overlapping box pairs: the second box is a perturbed copy of the
/// first (center within +-1 m, sizes within +-20 %, arbitrary yaw).
inline std::vector<std::pair<Box3D, Box3D>> random_box_pairs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-20.0, 20.0), jitter(-1.0, 1.0), len(1.0, 5.0),
      wid(0.5, 2.5), hgt(0.5, 2.0), yaw(-detail::kPi, detail::kPi), scale(0.8, 1.2);
  std::vector<std::pair<Box3D, Box3D>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d c(pos(rng), pos(rng), 0.1 * pos(rng));
    const Eigen::Vector3d s(len(rng), wid(rng), hgt(rng));
    const double y = yaw(rng);
    const Eigen::Vector3d c2 = c + Eigen::Vector3d(jitter(rng), jitter(rng), 0.3 * jitter(rng));
    const Eigen::Vector3d s2(s.x() * scale(rng), s.y() * scale(rng), s.z() * scale(rng));
    const double y2 = y + yaw(rng);
    out.emplace_back(Box3D(c, s, y), Box3D(c2, s2, y2));
  }
  return out;
}

struct BenchResult {
  std::size_t pairs = 0;
  double srt_ns_per_pair = 0.0;
  double iou_ns_per_pair = 0.0;
  double srt_total_ms = 0.0;
  double iou_total_ms = 0.0;
  double srt_checksum = 0.0;  // sum of scores; identical across runs with the same pairs
  double iou_checksum = 0.0;

  double speedup() const { return srt_ns_per_pair > 0.0 ? iou_ns_per_pair / srt_ns_per_pair : 0.0; }
};

inline constexpr std::size_t kBenchBlock = 256;

namespace detail {

// Forces v to be materialized here, so timed work cannot drift past the clock.
template <class T>
inline void keep(T& v) {
#if defined(__GNUC__) || defined(__clang__)
  asm volatile("" : "+m"(v) : : "memory");
#else
  volatile T sink = v;
  v = sink;
#endif
}

}  // namespace detail

/// Wall-clock cost per comparison of srt_score and iou_3d on the same pairs.
/// Pairs are processed in blocks with one untimed pass each, so both metrics
/// see cache-resident boxes as they do when filling a per-frame score matrix.
inline BenchResult bench_pairwise(const std::vector<std::pair<Box3D, Box3D>>& pairs, const SrtWeights& w = {}) {
  using clock = std::chrono::steady_clock;
  using ns = std::chrono::duration<double, std::nano>;
  const SrtScorer srt(w);
  BenchResult r;
  r.pairs = pairs.size();
  if (pairs.empty()) return r;

  double srt_ns = 0.0, iou_ns = 0.0, warm = 0.0;
  for (std::size_t lo = 0; lo < pairs.size(); lo += kBenchBlock) {
    const std::size_t hi = std::min(pairs.size(), lo + kBenchBlock);
    // Untimed pass: loads the block and settles caches before timing.
    for (std::size_t i = lo; i < hi; ++i) warm += srt(pairs[i].first, pairs[i].second).score;
    detail::keep(warm);

    auto t0 = clock::now();
    double acc = 0.0;
    detail::keep(acc);
    for (std::size_t i = lo; i < hi; ++i) acc += srt(pairs[i].first, pairs[i].second).score;
    detail::keep(acc);
    auto t1 = clock::now();
    r.srt_checksum += acc;
    srt_ns += ns(t1 - t0).count();

    t0 = clock::now();
    acc = 0.0;
    detail::keep(acc);
    for (std::size_t i = lo; i < hi; ++i) acc += iou_3d(pairs[i].first, pairs[i].second);
    detail::keep(acc);
    t1 = clock::now();
    r.iou_checksum += acc;
    iou_ns += ns(t1 - t0).count();
  }

  const double n = static_cast<double>(pairs.size());
  r.srt_total_ms = srt_ns * 1e-6;
  r.iou_total_ms = iou_ns * 1e-6;
  r.srt_ns_per_pair = srt_ns / n;
  r.iou_ns_per_pair = iou_ns / n;
  return r;
}

inline BenchResult bench_pairwise(std::size_t n_pairs, std::uint64_t seed, const SrtWeights& w = {}) {
  if (n_pairs < 10000) throw std::invalid_argument("bench needs at least 1e4 pairs");
  return bench_pairwise(random_box_pairs(n_pairs, seed), w);
}

}  // namespace woodgeom
