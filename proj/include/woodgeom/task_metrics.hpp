#pragma once

// Evaluation metrics for the remaining perception tasks: segmentation mean
// IoU, 2D detection mAP, multilabel (soiling) Jaccard, sparse depth RMSE and
// the visual-odometry tolerance rates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "woodgeom/cloud_projection.hpp"
#include "woodgeom/detection_eval.hpp"
#include "woodgeom/errors.hpp"
#include "woodgeom/rigid_pose.hpp"

namespace woodgeom {

// ---------------------------------------------------------------------------
// Segmentation

struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> ids;  // row-major

  LabelMask() = default;
  LabelMask(int w, int h, std::uint16_t fill = 0)
      : width(w), height(h), ids(static_cast<std::size_t>(w) * h, fill) {}
  LabelMask(int w, int h, std::vector<std::uint16_t> v) : width(w), height(h), ids(std::move(v)) {
    if (ids.size() != static_cast<std::size_t>(w) * h) throw std::invalid_argument("label mask size mismatch");
  }
};

struct MeanIou {
  std::vector<std::optional<double>> per_class;  // absent when the class is in neither mask
  double mean = 0.0;
  std::size_t classes_present = 0;
};

/// Per-class IoU over pixels; classes absent from both masks are excluded
/// from the mean rather than counted as 0. Throws on ids >= n_classes.
inline MeanIou mean_iou(const LabelMask& pred, const LabelMask& gt, std::size_t n_classes) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw std::invalid_argument("prediction and ground-truth masks differ in size");
  std::vector<std::size_t> inter(n_classes, 0), pred_n(n_classes, 0), gt_n(n_classes, 0);
  for (std::size_t i = 0; i < gt.ids.size(); ++i) {
    const auto p = pred.ids[i], g = gt.ids[i];
    if (p >= n_classes || g >= n_classes) throw ValidationError("label id outside the class table");
    ++pred_n[p];
    ++gt_n[g];
    if (p == g) ++inter[p];
  }
  MeanIou r;
  r.per_class.resize(n_classes);
  double sum = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const std::size_t uni = pred_n[c] + gt_n[c] - inter[c];
    if (uni == 0) continue;
    r.per_class[c] = static_cast<double>(inter[c]) / static_cast<double>(uni);
    sum += *r.per_class[c];
    ++r.classes_present;
  }
  if (r.classes_present == 0) throw UndefinedResultError("no class present in either mask");
  r.mean = sum / static_cast<double>(r.classes_present);
  return r;
}

// ---------------------------------------------------------------------------
// 2D detection

struct Box2D {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;  // pixels, x1 < x2, y1 < y2
  std::string label;
  std::optional<double> confidence;

  double area() const { return std::max(0.0, x2 - x1) * std::max(0.0, y2 - y1); }
};

inline double iou_2d(const Box2D& a, const Box2D& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double inter = w * h;
  return inter / (a.area() + b.area() - inter);
}

struct FrameBox2D {
  std::string frame;
  Box2D box;
};

struct Map2DResult {
  std::map<std::string, ApResult> per_class;
  std::optional<double> map;  // over classes with at least one ground truth
};

inline Map2DResult map_2d(const std::vector<FrameBox2D>& preds, const std::vector<FrameBox2D>& gts,
                          double iou_threshold = 0.5) {
  using Key = std::pair<std::string, std::string>;
  std::map<Key, std::pair<std::vector<Box2D>, std::vector<Box2D>>> groups;
  for (const auto& p : preds) {
    if (!p.box.confidence) throw std::invalid_argument("prediction without confidence");
    groups[{p.box.label, p.frame}].first.push_back(p.box);
  }
  for (const auto& g : gts) groups[{g.box.label, g.frame}].second.push_back(g.box);

  std::map<std::string, std::vector<ScoredDetection>> pooled;
  std::map<std::string, std::size_t> n_gt;
  for (const auto& [key, boxes] : groups) {
    const auto& [pb, gb] = boxes;
    std::vector<double> conf(pb.size());
    for (std::size_t i = 0; i < pb.size(); ++i) conf[i] = *pb[i].confidence;
    const MatchResult m = greedy_match(
        conf, gb.size(), [&](std::size_t p, std::size_t g) { return iou_2d(pb[p], gb[g]); }, iou_threshold);
    auto& dets = pooled[key.first];
    for (std::size_t i = 0; i < pb.size(); ++i) dets.push_back({conf[i], m.gt_of_pred[i].has_value(), 1.0});
    n_gt[key.first] += gb.size();
  }
  Map2DResult r;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [cls, dets] : pooled) {
    r.per_class[cls] = average_precision(dets, n_gt[cls]);
    if (r.per_class[cls].ap) {
      sum += *r.per_class[cls].ap;
      ++n;
    }
  }
  if (n) r.map = sum / static_cast<double>(n);
  return r;
}

// ---------------------------------------------------------------------------
// Soiling (multilabel)

struct SoilingScore {
  double mean_jaccard = 0.0;
  double exact_match = 0.0;  // fraction of samples with Y == Z
  std::size_t samples = 0;
};

/// Example-based Jaccard: mean over samples of |Y & Z| / |Y | Z|, with an
/// empty union (clean lens predicted clean) scoring 1.
inline SoilingScore soiling_jaccard(const std::vector<std::vector<std::uint8_t>>& labels,
                                    const std::vector<std::vector<std::uint8_t>>& preds) {
  if (labels.size() != preds.size()) throw std::invalid_argument("label / prediction count mismatch");
  if (labels.empty()) throw UndefinedResultError("no samples");
  SoilingScore s;
  s.samples = labels.size();
  const std::size_t k = labels.front().size();
  double jac = 0.0, exact = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].size() != k || preds[i].size() != k) throw std::invalid_argument("label vector length mismatch");
    std::size_t inter = 0, uni = 0;
    bool same = true;
    for (std::size_t j = 0; j < k; ++j) {
      const bool y = labels[i][j] != 0, z = preds[i][j] != 0;
      inter += y && z;
      uni += y || z;
      same = same && (y == z);
    }
    jac += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    exact += same ? 1.0 : 0.0;
  }
  s.mean_jaccard = jac / static_cast<double>(s.samples);
  s.exact_match = exact / static_cast<double>(s.samples);
  return s;
}

// ---------------------------------------------------------------------------
// Depth

struct DepthRmse {
  double rmse = 0.0;
  std::size_t compared = 0;
};

/// RMSE over pixels valid in both maps.
inline DepthRmse depth_rmse(const SparseDepthMap& pred, const SparseDepthMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height())
    throw std::invalid_argument("depth maps differ in size");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.depth.data.size(); ++i) {
    const double p = pred.depth.data[i], g = gt.depth.data[i];
    if (!std::isfinite(p) || !std::isfinite(g)) continue;
    sum += (p - g) * (p - g);
    ++n;
  }
  if (n == 0) throw UndefinedResultError("no pixel is valid in both depth maps");
  return {std::sqrt(sum / static_cast<double>(n)), n};
}

// ---------------------------------------------------------------------------
// Visual odometry

struct StampedPose {
  double timestamp = 0.0;
  RigidPose pose;  // world_from_camera
};

using PoseTrack = std::vector<StampedPose>;

inline void validate_track(const PoseTrack& t) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i].timestamp > t[i - 1].timestamp)) throw ValidationError("trajectory timestamps must increase strictly");
  }
}

/// Scale of the similarity transform that best aligns the predicted
/// positions to the ground-truth positions in the least-squares sense
/// (Umeyama). 1 when the ground truth does not move.
inline double trajectory_scale(const PoseTrack& pred, const PoseTrack& gt) {
  const auto n = static_cast<Eigen::Index>(pred.size());
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = pred[i].pose.translation();
    dst.col(i) = gt[i].pose.translation();
  }
  const Eigen::Vector3d sm = src.rowwise().mean(), dm = dst.rowwise().mean();
  if ((src.colwise() - sm).squaredNorm() < 1e-300 || (dst.colwise() - dm).squaredNorm() < 1e-300) return 1.0;
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, true);
  return t.block<3, 1>(0, 0).norm();
}

struct VoTolerance {
  double translation_pct = 0.0;
  double rotation_pct = 0.0;
  double scale = 1.0;
  std::size_t deltas = 0;
  std::vector<double> translation_error;  // per consecutive pair, meters
  std::vector<double> rotation_error_deg;
};

/// Percentage of consecutive-frame relative motions whose translation error
/// (after global scale alignment of the prediction) is below t_tol meters,
/// and whose rotation error is below r_tol_deg degrees.
inline VoTolerance vo_tolerance(const PoseTrack& pred, const PoseTrack& gt, double t_tol, double r_tol_deg) {
  if (pred.size() != gt.size()) throw std::invalid_argument("trajectories differ in length");
  if (gt.size() < 2) throw UndefinedResultError("need at least two poses");
  validate_track(pred);
  validate_track(gt);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (std::abs(pred[i].timestamp - gt[i].timestamp) > 1e-6)
      throw std::invalid_argument("trajectory timestamps do not match");
  }
  VoTolerance r;
  r.scale = trajectory_scale(pred, gt);
  r.deltas = gt.size() - 1;
  std::size_t ok_t = 0, ok_r = 0;
  for (std::size_t i = 0; i + 1 < gt.size(); ++i) {
    const RigidPose dp = pred[i].pose.inverse() * pred[i + 1].pose;
    const RigidPose dg = gt[i].pose.inverse() * gt[i + 1].pose;
    const double et = (r.scale * dp.translation() - dg.translation()).norm();
    const double er = RigidPose(dg.rotation().conjugate() * dp.rotation(), Eigen::Vector3d::Zero()).angle();
    const double er_deg = er * 180.0 / detail::kPi;
    r.translation_error.push_back(et);
    r.rotation_error_deg.push_back(er_deg);
    ok_t += et < t_tol;
    ok_r += er_deg < r_tol_deg;
  }
  r.translation_pct = 100.0 * static_cast<double>(ok_t) / static_cast<double>(r.deltas);
  r.rotation_pct = 100.0 * static_cast<double>(ok_r) / static_cast<double>(r.deltas);
  return r;
}

}  // namespace woodgeom
