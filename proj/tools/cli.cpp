#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "woodgeom/report.hpp"
#include "woodgeom/woodgeom.hpp"

namespace woodgeom::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 42;

// Reads `--config file.json`. Top-level keys configure the main app; an
// object keyed by a subcommand name configures that subcommand. Values given
// explicitly on the command line win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& is) const override {
    json j;
    try {
      j = json::parse(is);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void flatten(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        flatten(value, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& e : value) item.inputs.push_back(scalar(e));
      } else {
        item.inputs.push_back(scalar(value));
      }
      out.push_back(std::move(item));
    }
  }
};

/// Artifacts go to one directory, each file written to a temporary name and
/// renamed into place once complete.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::function<void(std::ostream&)>& fill) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    const fs::path tmp = dir_ / ("." + name + ".tmp");
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw IoError("cannot write " + tmp.string());
      fill(os);
      os.flush();
      if (!os) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, dir_ / name, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
    written_.push_back(name);
  }

  void write_report(const EvalReport& r) {
    write("report.json", [&](std::ostream& os) { os << json(r).dump(2) << '\n'; });
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("missing required ") + what + " path");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw IoError(std::string(what) + " file not found: " + path);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json histogram_json(const Histogram& h) { return json(h.counts); }

json ap_json(const ApResult& r) {
  return {{"ap", optional_number(r.ap)}, {"aos", optional_number(r.aos)}, {"n_gt", r.n_gt},
          {"n_pred", r.n_pred},          {"tp", r.tp}};
}

struct FittedModel {
  std::string name;
  FitResult fit;
  double range_lo_deg, range_hi_deg;
  bool truncated;
};

std::vector<FittedModel> fit_all(const IntrinsicCalibration& cal, double lo_deg, double hi_deg, int samples,
                                 double rect_max_deg, std::vector<std::string>& warnings) {
  std::vector<FittedModel> out;
  const double lo = deg2rad(lo_deg), hi = deg2rad(hi_deg);
  for (ModelKind kind : {ModelKind::Rectilinear, ModelKind::Stereographic, ModelKind::Ucm, ModelKind::Eucm}) {
    double top_deg = hi_deg;
    int n = samples;
    bool truncated = false;
    if (kind == ModelKind::Rectilinear && hi_deg > rect_max_deg) {
      top_deg = rect_max_deg;
      const double step = (hi_deg - lo_deg) / (samples - 1);
      n = std::max(10, static_cast<int>(std::floor((top_deg - lo_deg) / step + 1e-9)) + 1);
      truncated = true;
      std::ostringstream os;
      os << "rectilinear fit truncated to " << lo_deg << "-" << top_deg << " deg (tan diverges at 90 deg)";
      warnings.push_back(os.str());
    }
    FitResult fit = fit_model(cal.model(), kind, lo, truncated ? deg2rad(top_deg) : hi, n);
    out.push_back({std::string(to_string(kind)), std::move(fit), lo_deg, top_deg, truncated});
  }
  return out;
}

// Reference polynomial extended over the plotted range.
RadialModel extended_reference(const IntrinsicCalibration& cal, double hi_deg) {
  const double hi = std::max(deg2rad(hi_deg), cal.model().theta_max());
  return RadialModel(cal.model().params(), hi);
}

Eigen::Matrix3d orientation_from_deg(double yaw, double pitch, double roll) {
  return (Eigen::AngleAxisd(deg2rad(yaw), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(deg2rad(pitch), Eigen::Vector3d::UnitX()) *
          Eigen::AngleAxisd(deg2rad(roll), Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

struct Settings {
  std::string output;
  int threads = 0;

  int effective_threads() const {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("WOODGEOM_THREADS")) {
      const int t = std::atoi(env);
      if (t > 0) return t;
    }
    return 1;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"woodgeom: fisheye geometry and perception-evaluation toolkit", "woodgeom"};
  app.require_subcommand(1, 1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option defaults (explicit flags take precedence)");
  app.set_version_flag("--version", kVersion);

  Settings settings;
  app.add_option("-o,--output", settings.output, "Output directory")->required();
  app.add_option("--threads", settings.threads, "Worker threads (fallback: WOODGEOM_THREADS)")
      ->check(CLI::NonNegativeNumber);
  app.fallthrough();

  EvalReport report;
  report.version = kVersion;
  std::function<void(OutputDir&)> action;

  // -- fit-models / curve-export --------------------------------------------
  struct {
    std::string calibration;
    std::vector<double> range_deg{0.0, 120.0};
    int samples = 121;
    double rect_max_deg = 89.0;
  } fit;
  for (const char* name : {"fit-models", "curve-export"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == std::string("fit-models")
                                             ? "Fit rectilinear/stereographic/UCM/eUCM to the calibration polynomial"
                                             : "Export r(theta) curves of the calibration and fitted models as CSV");
    sub->add_option("-c,--calibration", fit.calibration, "Calibration JSON")->required();
    sub->add_option("--range-deg", fit.range_deg, "Incident angle range [lo hi] in degrees")
        ->expected(2)
        ->capture_default_str();
    sub->add_option("--samples", fit.samples, "Angle samples over the range")->capture_default_str();
    sub->add_option("--rect-max-deg", fit.rect_max_deg, "Truncation angle of the rectilinear fit")
        ->capture_default_str();
    const bool curves = std::string(name) == "curve-export";
    sub->callback([&, curves] {
      report.command = curves ? "curve-export" : "fit-models";
      action = [&, curves](OutputDir& dir) {
        require_file(fit.calibration, "calibration");
        const IntrinsicCalibration cal = validate_calibration(fit.calibration);
        const double lo = fit.range_deg.at(0), hi = fit.range_deg.at(1);
        if (fit.samples < 10) throw ValidationError("--samples must be >= 10");
        report.config = {{"calibration", fit.calibration}, {"range_deg", {lo, hi}},
                         {"samples", fit.samples},         {"rect_max_deg", fit.rect_max_deg},
                         {"loss", "unweighted least squares on radius (px)"}};
        const auto fits = fit_all(cal, lo, hi, fit.samples, fit.rect_max_deg, report.warnings);

        const RadialModel reference = extended_reference(cal, hi);
        json models = json::object();
        for (const auto& f : fits) {
          models[f.name] = {{"coeffs", f.fit.fitted.coefficients()},
                            {"max_abs_dev_px", f.fit.max_abs_dev},
                            {"mean_abs_dev_px", f.fit.mean_abs_dev},
                            {"fit_range_deg", {f.range_lo_deg, f.range_hi_deg}},
                            {"truncated", f.truncated}};
        }
        report.results = {{"reference", {{"model", "poly4"}, {"coeffs", cal.model().coefficients()}}},
                          {"models", models}};

        if (curves) {
          std::vector<NamedModel> named{{"poly4", reference}};
          for (const auto& f : fits) named.push_back({f.name, f.fit.fitted});
          const CurveTable table = export_curves(named, deg2rad(lo), deg2rad(hi), fit.samples);
          report.results["rows"] = table.rows();
          report.results["columns"] = table.columns();
          dir.write("curves.csv", [&](std::ostream& os) { write_csv(os, table); });
        } else {
          // Deviation of each fitted model from the reference, NA where the
          // model was not fitted.
          CurveTable dev;
          for (const auto& f : fits) dev.model_names.push_back(f.name);
          for (double theta : angle_grid(deg2rad(lo), deg2rad(hi), fit.samples)) {
            dev.theta_deg.push_back(rad2deg(theta));
            auto& row = dev.radius_px.emplace_back();
            for (const auto& f : fits) {
              if (theta <= f.fit.fitted.theta_max() * (1.0 + 1e-12))
                row.emplace_back(f.fit.fitted.radius_unchecked(std::min(theta, f.fit.fitted.theta_max())) -
                                 reference.radius_unchecked(theta));
              else
                row.emplace_back(std::nullopt);
            }
          }
          dir.write("deviations.csv", [&](std::ostream& os) { write_csv(os, dev); });
        }
      };
    });
  }

  // -- undistort --------------------------------------------------------------
  struct {
    std::string calibration, viewport = "rect", image;
    int width = 1280, height = 966;
    double focal = 300.0, yaw = 0.0, pitch = 0.0, roll = 0.0, fill = 0.0;
  } und;
  {
    auto* sub = app.add_subcommand("undistort", "Build an undistortion remap table (and optionally apply it)");
    sub->add_option("-c,--calibration", und.calibration, "Calibration JSON")->required();
    sub->add_option("--viewport", und.viewport, "Viewport kind")
        ->check(CLI::IsMember({"rect", "piecewise", "cyl"}))
        ->capture_default_str();
    sub->add_option("--width", und.width, "Output width")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--height", und.height, "Output height")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--focal", und.focal, "Viewport focal length (px)")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--yaw-deg", und.yaw, "Viewport yaw")->capture_default_str();
    sub->add_option("--pitch-deg", und.pitch, "Viewport pitch")->capture_default_str();
    sub->add_option("--roll-deg", und.roll, "Viewport roll")->capture_default_str();
    sub->add_option("--image", und.image, "Fisheye image to warp (PGM/PPM)");
    sub->add_option("--fill", und.fill, "Value for pixels without a source")->capture_default_str();
    sub->callback([&] {
      report.command = "undistort";
      action = [&](OutputDir& dir) {
        require_file(und.calibration, "calibration");
        if (!und.image.empty()) require_file(und.image, "image");
        const IntrinsicCalibration cal = validate_calibration(und.calibration);
        std::optional<Image<float>> img;
        if (!und.image.empty()) img = read_netpbm(und.image);
        const ViewportKind kind = und.viewport == "rect"        ? ViewportKind::Rectilinear
                                  : und.viewport == "piecewise" ? ViewportKind::PiecewiseLinear
                                                                : ViewportKind::Cylindrical;
        const ViewportSpec vp(kind, und.width, und.height, und.focal, orientation_from_deg(und.yaw, und.pitch, und.roll));
        const int threads = settings.effective_threads();
        report.config = {{"calibration", und.calibration}, {"viewport", und.viewport}, {"width", und.width},
                         {"height", und.height},           {"focal", und.focal},       {"yaw_deg", und.yaw},
                         {"pitch_deg", und.pitch},         {"roll_deg", und.roll},     {"image", und.image},
                         {"fill", und.fill},               {"threads", threads},       {"interpolation", "bilinear"}};
        if (kind == ViewportKind::PiecewiseLinear) {
          json planes = json::array();
          for (const auto& p : vp.planes())
            planes.push_back({{"yaw_deg", rad2deg(p.yaw)},
                              {"azimuth_deg", {rad2deg(p.azimuth_lo), rad2deg(p.azimuth_hi)}}});
          report.config["planes"] = planes;
        }
        const RemapTable table = build_remap(cal, vp, threads);
        const Image<double> scale = resampling_distortion_map(table);
        const DistortionSummary ds = summarize_distortion(scale);
        const std::size_t valid = table.valid_count();
        const std::size_t total = table.sx.size();
        report.results = {{"valid_pixels", valid},
                          {"invalid_pixels", total - valid},
                          {"valid_fraction", static_cast<double>(valid) / static_cast<double>(total)},
                          {"scale_center_mean", std::isfinite(ds.center_mean) ? json(ds.center_mean) : json(nullptr)},
                          {"scale_periphery_mean",
                           std::isfinite(ds.periphery_mean) ? json(ds.periphery_mean) : json(nullptr)}};
        if (valid < total) report.warnings.push_back("viewport has pixels without fisheye source (FOV loss)");
        dir.write("remap.wsrm", [&](std::ostream& os) { write_remap(os, table); });
        Image<float> scale_f(scale.width, scale.height, 1, 0.0f);
        for (std::size_t i = 0; i < scale.data.size(); ++i)
          if (std::isfinite(scale.data[i])) scale_f.data[i] = static_cast<float>(scale.data[i]);
        dir.write("resampling_scale.pfm", [&](std::ostream& os) { write_pfm(os, scale_f); });
        if (img) {
          const Image<float> warped = apply_remap(table, *img, static_cast<float>(und.fill), threads);
          dir.write(img->channels == 1 ? "undistorted.pgm" : "undistorted.ppm",
                    [&](std::ostream& os) { write_netpbm(os, warped); });
        }
      };
    });
  }

  // -- project-cloud ----------------------------------------------------------
  struct {
    std::string calibration, cloud;
    std::vector<double> pose{0, 0, 0, 0, 0, 0, 1};
    double cell_deg = 0.5, tau = 0.1;
    bool no_occlusion = false;
  } pc;
  {
    auto* sub = app.add_subcommand("project-cloud", "Project a point cloud into sparse fisheye depth");
    sub->add_option("-c,--calibration", pc.calibration, "Calibration JSON")->required();
    sub->add_option("--cloud", pc.cloud, "Point cloud (PLY or x y z text)")->required();
    sub->add_option("--pose", pc.pose, "camera_from_world as tx ty tz qx qy qz qw")->expected(7);
    sub->add_option("--cell-deg", pc.cell_deg, "Occlusion cell size (deg)")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--tau", pc.tau, "Relative occlusion depth tolerance")->check(CLI::NonNegativeNumber)->capture_default_str();
    sub->add_flag("--no-occlusion", pc.no_occlusion, "Skip occlusion correction");
    sub->callback([&] {
      report.command = "project-cloud";
      action = [&](OutputDir& dir) {
        require_file(pc.calibration, "calibration");
        require_file(pc.cloud, "cloud");
        const IntrinsicCalibration cal = validate_calibration(pc.calibration);
        const auto points = read_point_cloud(pc.cloud);
        const auto& p = pc.pose;
        RigidPose pose;
        try {
          pose = RigidPose::normalized(Eigen::Quaterniond(p[6], p[3], p[4], p[5]), {p[0], p[1], p[2]});
        } catch (const std::invalid_argument& e) {
          throw ValidationError(std::string("--pose: ") + e.what());
        }
        report.config = {{"calibration", pc.calibration}, {"cloud", pc.cloud}, {"pose", pc.pose},
                         {"cell_deg", pc.cell_deg},       {"tau", pc.tau},     {"occlusion", !pc.no_occlusion},
                         {"depth", "euclidean range"}};
        const auto projected = project_cloud(points, pose, cal);
        const auto kept = pc.no_occlusion ? projected : occlusion_filter(projected, {pc.cell_deg, pc.tau});
        const SparseDepthMap depth = rasterize_depth(kept, cal);
        report.results = {{"input_points", points.size()},
                          {"projected_points", projected.size()},
                          {"occlusion_removed", projected.size() - kept.size()},
                          {"valid_pixels", depth.valid_count}};
        dir.write("depth.pfm", [&](std::ostream& os) { write_pfm(os, depth_image(depth)); });
        dir.write("depth_mask.pgm", [&](std::ostream& os) { write_netpbm(os, validity_mask(depth)); });
      };
    });
  }

  // -- eval-3d ----------------------------------------------------------------
  struct {
    std::string preds, gts, criterion = "srt";
    double threshold = kDefaultMatchThreshold;
    SrtWeights w;
  } e3;
  {
    auto* sub = app.add_subcommand("eval-3d", "3D box detection AP/AOS with SRT or 3D-IoU matching");
    sub->add_option("--preds", e3.preds, "Predictions (JSON lines)")->required();
    sub->add_option("--gts", e3.gts, "Ground truth (JSON lines)")->required();
    sub->add_option("--criterion", e3.criterion, "Matching criterion")
        ->check(CLI::IsMember({"srt", "iou3d"}))
        ->capture_default_str();
    sub->add_option("--threshold", e3.threshold, "Matching threshold")->capture_default_str();
    sub->add_option("--ws", e3.w.w_s, "SRT size weight w_s")->capture_default_str();
    sub->add_option("--wt", e3.w.w_t, "SRT translation weight w_t")->capture_default_str();
    sub->add_option("--wr", e3.w.w_r, "SRT rotation weight w_r")->capture_default_str();
    sub->add_option("--alpha", e3.w.alpha, "SRT scaling mix")->capture_default_str();
    sub->add_option("--beta", e3.w.beta, "SRT translation mix")->capture_default_str();
    sub->add_option("--gamma", e3.w.gamma, "SRT rotation mix")->capture_default_str();
    sub->callback([&] {
      report.command = "eval-3d";
      action = [&](OutputDir& dir) {
        require_file(e3.preds, "predictions");
        require_file(e3.gts, "ground-truth");
        try {
          e3.w.validate();
        } catch (const std::invalid_argument& e) {
          throw ValidationError(e.what());
        }
        const auto preds = read_boxes3d(e3.preds);
        const auto gts = read_boxes3d(e3.gts);
        const BoxCriterion crit = e3.criterion == "srt" ? BoxCriterion::Srt : BoxCriterion::Iou3d;
        report.config = {{"preds", e3.preds},
                         {"gts", e3.gts},
                         {"criterion", e3.criterion},
                         {"threshold", e3.threshold},
                         {"srt_weights",
                          {{"w_s", e3.w.w_s}, {"w_t", e3.w.w_t}, {"w_r", e3.w.w_r},
                           {"alpha", e3.w.alpha}, {"beta", e3.w.beta}, {"gamma", e3.w.gamma}}},
                         {"size_ratio", "prediction / ground truth"},
                         {"yaw_wrap", "[0, pi]"},
                         {"interpolation", "41-point"},
                         {"difficulty", "single pool"}};
        const Eval3DResult r = evaluate_3d(preds, gts, crit, e3.threshold, e3.w);
        json classes = json::object();
        std::size_t tp = 0, fp = 0, fn = 0;
        for (const auto& [cls, c] : r.per_class) {
          classes[cls] = ap_json(c.ap);
          classes[cls]["fp"] = c.fp;
          classes[cls]["fn"] = c.fn;
          tp += c.ap.tp;
          fp += c.fp;
          fn += c.fn;
        }
        std::optional<double> ap, aos;
        if (r.per_class.size() == 1) {
          ap = r.per_class.begin()->second.ap.ap;
          aos = r.per_class.begin()->second.ap.aos;
        }
        report.results = {{"AP", optional_number(ap)},
                          {"AOS", optional_number(aos)},
                          {"classes", classes},
                          {"counts", {{"tp", tp}, {"fp", fp}, {"fn", fn}}},
                          {"matched_mean_iou3d", r.iou_mean_of_matches},
                          {"histograms",
                           {{"bins", Histogram::kBins},
                            {"srt", histogram_json(r.score_hist)},
                            {"scaling", histogram_json(r.scaling_hist)},
                            {"translation", histogram_json(r.translation_hist)},
                            {"rotation", histogram_json(r.rotation_hist)}}}};
        if (r.per_class.size() > 1) {
          double sum_ap = 0.0, sum_aos = 0.0;
          std::size_t n = 0;
          for (const auto& [cls, c] : r.per_class) {
            if (!c.ap.ap) continue;
            sum_ap += *c.ap.ap;
            sum_aos += *c.ap.aos;
            ++n;
          }
          if (n) {
            report.results["AP"] = sum_ap / static_cast<double>(n);
            report.results["AOS"] = sum_aos / static_cast<double>(n);
          }
        }
      };
    });
  }

  // -- eval-2d ----------------------------------------------------------------
  struct {
    std::string preds, gts;
    double iou = 0.5;
  } e2;
  {
    auto* sub = app.add_subcommand("eval-2d", "2D detection mAP");
    sub->add_option("--preds", e2.preds, "Predictions (JSON lines)")->required();
    sub->add_option("--gts", e2.gts, "Ground truth (JSON lines)")->required();
    sub->add_option("--iou-threshold", e2.iou, "IoU threshold")->capture_default_str();
    sub->callback([&] {
      report.command = "eval-2d";
      action = [&](OutputDir&) {
        require_file(e2.preds, "predictions");
        require_file(e2.gts, "ground-truth");
        const auto r = map_2d(read_boxes2d(e2.preds), read_boxes2d(e2.gts), e2.iou);
        report.config = {{"preds", e2.preds}, {"gts", e2.gts}, {"iou_threshold", e2.iou}, {"interpolation", "41-point"}};
        json classes = json::object();
        for (const auto& [cls, ap] : r.per_class) classes[cls] = ap_json(ap);
        report.results = {{"mAP", optional_number(r.map)}, {"classes", classes}};
      };
    });
  }

  // -- eval-seg ---------------------------------------------------------------
  struct {
    std::string pred, gt;
    int classes = 0;
  } es;
  {
    auto* sub = app.add_subcommand("eval-seg", "Segmentation mean IoU (PGM label masks)");
    sub->add_option("--pred", es.pred, "Predicted label mask")->required();
    sub->add_option("--gt", es.gt, "Ground-truth label mask")->required();
    sub->add_option("--classes", es.classes, "Number of classes")->required()->check(CLI::PositiveNumber);
    sub->callback([&] {
      report.command = "eval-seg";
      action = [&](OutputDir&) {
        require_file(es.pred, "prediction");
        require_file(es.gt, "ground-truth");
        const auto r = mean_iou(read_label_mask(es.pred), read_label_mask(es.gt), static_cast<std::size_t>(es.classes));
        report.config = {{"pred", es.pred}, {"gt", es.gt}, {"classes", es.classes},
                         {"absent_classes", "excluded from mean"}};
        json per = json::array();
        for (const auto& c : r.per_class) per.push_back(optional_number(c));
        report.results = {{"mIoU", r.mean}, {"per_class_iou", per}, {"classes_present", r.classes_present}};
      };
    });
  }

  // -- eval-soiling -----------------------------------------------------------
  struct {
    std::string labels, preds;
  } eso;
  {
    auto* sub = app.add_subcommand("eval-soiling", "Multilabel soiling Jaccard (CSV of 0/1 rows)");
    sub->add_option("--labels", eso.labels, "Ground-truth CSV")->required();
    sub->add_option("--preds", eso.preds, "Prediction CSV")->required();
    sub->callback([&] {
      report.command = "eval-soiling";
      action = [&](OutputDir&) {
        require_file(eso.labels, "labels");
        require_file(eso.preds, "predictions");
        const auto r = soiling_jaccard(read_binary_csv(eso.labels), read_binary_csv(eso.preds));
        report.config = {{"labels", eso.labels}, {"preds", eso.preds}, {"empty_union", 1.0}};
        report.results = {{"mean_jaccard", r.mean_jaccard}, {"exact_match", r.exact_match}, {"samples", r.samples}};
      };
    });
  }

  // -- eval-depth -------------------------------------------------------------
  struct {
    std::string pred, gt, pred_mask, gt_mask;
  } ed;
  {
    auto* sub = app.add_subcommand("eval-depth", "Sparse depth RMSE (PFM, optional PGM masks)");
    sub->add_option("--pred", ed.pred, "Predicted depth PFM")->required();
    sub->add_option("--gt", ed.gt, "Ground-truth depth PFM")->required();
    sub->add_option("--pred-mask", ed.pred_mask, "Validity mask for the prediction");
    sub->add_option("--gt-mask", ed.gt_mask, "Validity mask for the ground truth");
    sub->callback([&] {
      report.command = "eval-depth";
      action = [&](OutputDir&) {
        require_file(ed.pred, "prediction");
        require_file(ed.gt, "ground-truth");
        if (!ed.pred_mask.empty()) require_file(ed.pred_mask, "prediction mask");
        if (!ed.gt_mask.empty()) require_file(ed.gt_mask, "ground-truth mask");
        const auto load = [](const std::string& d, const std::string& m) {
          const Image<float> depth = read_pfm(d);
          if (m.empty()) return depth_map_from_image(depth);
          const Image<float> mask = read_netpbm(m);
          return depth_map_from_image(depth, &mask);
        };
        const auto r = depth_rmse(load(ed.pred, ed.pred_mask), load(ed.gt, ed.gt_mask));
        report.config = {{"pred", ed.pred}, {"gt", ed.gt}, {"pred_mask", ed.pred_mask}, {"gt_mask", ed.gt_mask}};
        report.results = {{"rmse_m", r.rmse}, {"compared_pixels", r.compared}};
      };
    });
  }

  // -- eval-vo ----------------------------------------------------------------
  struct {
    std::string pred, gt;
    double t_tol = 0.005, r_tol = 0.1;
  } ev;
  {
    auto* sub = app.add_subcommand("eval-vo", "Visual odometry tolerance rates (TUM trajectories)");
    sub->add_option("--pred", ev.pred, "Predicted trajectory")->required();
    sub->add_option("--gt", ev.gt, "Ground-truth trajectory")->required();
    sub->add_option("--t-tol", ev.t_tol, "Translation tolerance (m)")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--r-tol", ev.r_tol, "Rotation tolerance (deg)")->check(CLI::PositiveNumber)->capture_default_str();
    sub->callback([&] {
      report.command = "eval-vo";
      action = [&](OutputDir&) {
        require_file(ev.pred, "prediction");
        require_file(ev.gt, "ground-truth");
        const auto r = vo_tolerance(read_tum(ev.pred), read_tum(ev.gt), ev.t_tol, ev.r_tol);
        report.config = {{"pred", ev.pred}, {"gt", ev.gt}, {"t_tol_m", ev.t_tol}, {"r_tol_deg", ev.r_tol},
                         {"errors", "consecutive relative motions"}, {"alignment", "global scale (Umeyama)"}};
        report.results = {{"translation_pct", r.translation_pct},
                          {"rotation_pct", r.rotation_pct},
                          {"scale", r.scale},
                          {"deltas", r.deltas}};
      };
    });
  }

  // -- bench-metric -----------------------------------------------------------
  struct {
    std::size_t pairs = 100000;
    std::uint64_t seed = kDefaultSeed;
  } bm;
  {
    auto* sub = app.add_subcommand("bench-metric", "Per-pair runtime of srt_score vs iou_3d");
    sub->add_option("--pairs", bm.pairs, "Number of random box pairs (>= 10000)")->capture_default_str();
    sub->add_option("--seed", bm.seed, "Seed of the mt19937_64 generator")->capture_default_str();
    sub->callback([&] {
      report.command = "bench-metric";
      action = [&](OutputDir&) {
        if (bm.pairs < 10000) throw ValidationError("--pairs must be >= 10000");
        report.config = {{"pairs", bm.pairs}, {"seed", bm.seed}, {"rng", "mt19937_64"}};
        const auto pairs = random_box_pairs(bm.pairs, bm.seed);
        const BenchResult r = bench_pairwise(pairs);
        json sample = json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(3, pairs.size()); ++i)
          sample.push_back({box3d_to_json({"", pairs[i].first}), box3d_to_json({"", pairs[i].second})});
        report.results = {{"pairs", r.pairs},
                          {"srt_checksum", r.srt_checksum},
                          {"iou3d_checksum", r.iou_checksum},
                          {"sample_pairs", sample}};
        report.timing["srt_ns_per_pair"] = r.srt_ns_per_pair;
        report.timing["iou3d_ns_per_pair"] = r.iou_ns_per_pair;
        report.timing["srt_total_ms"] = r.srt_total_ms;
        report.timing["iou3d_total_ms"] = r.iou_total_ms;
        report.timing["speedup"] = r.speedup();
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    err << e.what() << '\n';
    return kExitIo;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    OutputDir dir(settings.output);
    const auto t0 = std::chrono::steady_clock::now();
    action(dir);
    report.timing["wall_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    dir.write_report(report);
    out << json(report).dump(2) << '\n';
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace woodgeom::cli
