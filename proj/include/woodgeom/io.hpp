#pragma once

// File formats: calibration JSON, detection JSON-lines, TUM trajectories,
// soiling CSV, PLY / text point clouds and PGM label masks.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "woodgeom/box3d_metrics.hpp"
#include "woodgeom/camera.hpp"
#include "woodgeom/errors.hpp"
#include "woodgeom/image.hpp"
#include "woodgeom/task_metrics.hpp"

namespace woodgeom {

using nlohmann::json;

namespace detail {

inline std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(path, mode);
  if (!is) throw IoError("cannot open " + path);
  return is;
}

template <class T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + ": field '" + key + "' has the wrong type");
  }
}

inline Eigen::Vector3d vec3(const json& j, const char* key, const std::string& where) {
  const auto v = required<std::vector<double>>(j, key, where);
  if (v.size() != 3) throw ValidationError(where + ": '" + key + "' needs 3 numbers");
  return {v[0], v[1], v[2]};
}

inline std::string frame_id(const json& j, const std::string& where) {
  if (!j.contains("frame")) throw ValidationError(where + ": missing field 'frame'");
  const json& f = j.at("frame");
  if (f.is_string()) return f.get<std::string>();
  if (f.is_number_integer()) return std::to_string(f.get<long long>());
  throw ValidationError(where + ": 'frame' must be a string or integer");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Calibration:
//   {"model": "poly4|rectilinear|stereographic|ucm|eucm", "coeffs": [...],
//    "cx": f, "cy": f, "width": int, "height": int, "fov_deg": f}

inline json calibration_to_json(const IntrinsicCalibration& cal) {
  return {{"model", std::string(to_string(cal.model().kind()))},
          {"coeffs", cal.model().coefficients()},
          {"cx", cal.cx()},
          {"cy", cal.cy()},
          {"width", cal.width()},
          {"height", cal.height()},
          {"fov_deg", cal.fov_deg()}};
}

/// Schema and monotonicity checked; theta_max = fov_deg / 2. A polynomial
/// that stops increasing before that is rejected with the offending angle.
inline IntrinsicCalibration calibration_from_json(const json& j, const std::string& where = "calibration") {
  if (!j.is_object()) throw ValidationError(where + ": expected a JSON object");
  const auto name = detail::required<std::string>(j, "model", where);
  const auto kind = model_kind_from_string(name);
  if (!kind) throw ValidationError(where + ": unknown model '" + name + "'");
  const auto coeffs = detail::required<std::vector<double>>(j, "coeffs", where);
  try {
    return IntrinsicCalibration::from_fov(params_from_coefficients(*kind, coeffs),
                                          detail::required<double>(j, "cx", where),
                                          detail::required<double>(j, "cy", where),
                                          detail::required<int>(j, "width", where),
                                          detail::required<int>(j, "height", where),
                                          detail::required<double>(j, "fov_deg", where));
  } catch (const DomainError& e) {
    throw ValidationError(where + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

inline IntrinsicCalibration validate_calibration(const std::string& path) {
  auto is = detail::open_input(path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": invalid JSON (" + e.what() + ")");
  }
  return calibration_from_json(j, path);
}

// ---------------------------------------------------------------------------
// 3D detections, one JSON object per line:
//   {"frame": id, "class": str, "center": [x,y,z], "size": [l,w,h],
//    "yaw": f, "conf": f}      ("conf" for predictions only)

inline FrameBox box3d_from_json(const json& j, const std::string& where) {
  std::optional<double> conf;
  if (j.contains("conf")) conf = detail::required<double>(j, "conf", where);
  try {
    return {detail::frame_id(j, where),
            Box3D(detail::vec3(j, "center", where), detail::vec3(j, "size", where),
                  detail::required<double>(j, "yaw", where), detail::required<std::string>(j, "class", where),
                  conf)};
  } catch (const std::invalid_argument& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

inline json box3d_to_json(const FrameBox& fb) {
  const Box3D& b = fb.box;
  json j = {{"frame", fb.frame},
            {"class", b.label},
            {"center", {b.center.x(), b.center.y(), b.center.z()}},
            {"size", {b.size.x(), b.size.y(), b.size.z()}},
            {"yaw", b.yaw}};
  if (b.confidence) j["conf"] = *b.confidence;
  return j;
}

template <class Parse>
auto read_json_lines(const std::string& path, Parse parse) {
  auto is = detail::open_input(path);
  std::vector<decltype(parse(json{}, std::string{}))> out;
  std::string line;
  for (int n = 1; std::getline(is, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(n);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw ValidationError(where + ": invalid JSON");
    }
    out.push_back(parse(j, where));
  }
  return out;
}

inline std::vector<FrameBox> read_boxes3d(const std::string& path) {
  return read_json_lines(path, box3d_from_json);
}

// 2D detections: {"frame": id, "class": str, "box": [x1,y1,x2,y2], "conf": f}
inline FrameBox2D box2d_from_json(const json& j, const std::string& where) {
  const auto v = detail::required<std::vector<double>>(j, "box", where);
  if (v.size() != 4 || !(v[2] > v[0]) || !(v[3] > v[1]))
    throw ValidationError(where + ": 'box' needs [x1,y1,x2,y2] with x1<x2, y1<y2");
  Box2D b{v[0], v[1], v[2], v[3], detail::required<std::string>(j, "class", where), std::nullopt};
  if (j.contains("conf")) b.confidence = detail::required<double>(j, "conf", where);
  return {detail::frame_id(j, where), b};
}

inline std::vector<FrameBox2D> read_boxes2d(const std::string& path) {
  return read_json_lines(path, box2d_from_json);
}

// ---------------------------------------------------------------------------
// TUM trajectory: "timestamp tx ty tz qx qy qz qw" per line, '#' comments.

inline PoseTrack read_tum(const std::string& path) {
  auto is = detail::open_input(path);
  PoseTrack track;
  std::string line;
  for (int n = 1; std::getline(is, line); ++n) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double t, x, y, z, qx, qy, qz, qw;
    if (!(ls >> t >> x >> y >> z >> qx >> qy >> qz >> qw))
      throw ValidationError(path + ":" + std::to_string(n) + ": expected 8 numbers");
    try {
      track.push_back({t, RigidPose::normalized(Eigen::Quaterniond(qw, qx, qy, qz), {x, y, z})});
    } catch (const std::invalid_argument& e) {
      throw ValidationError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  validate_track(track);
  return track;
}

inline void write_tum(std::ostream& os, const PoseTrack& track) {
  os.precision(17);
  for (const auto& s : track) {
    const auto& q = s.pose.rotation();
    const auto& t = s.pose.translation();
    os << s.timestamp << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.x() << ' ' << q.y() << ' '
       << q.z() << ' ' << q.w() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Soiling CSV: one sample per row of 0/1 entries; a non-numeric first row is
// treated as a header.

inline std::vector<std::vector<std::uint8_t>> read_binary_csv(const std::string& path) {
  auto is = detail::open_input(path);
  std::vector<std::vector<std::uint8_t>> rows;
  std::string line;
  for (int n = 1; std::getline(is, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::uint8_t> row;
    std::stringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r"), e = cell.find_last_not_of(" \t\r");
      const std::string v = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      if (v == "0" || v == "1") row.push_back(v == "1");
      else numeric = false;
    }
    if (!numeric) {
      if (rows.empty() && n == 1) continue;
      throw ValidationError(path + ":" + std::to_string(n) + ": entries must be 0 or 1");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Point clouds: PLY (ascii or binary_little_endian; vertex element with x, y,
// z properties) or whitespace-separated text with x y z per line.

namespace detail {

inline std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  throw ValidationError("unsupported PLY property type " + t);
}

inline double ply_read_binary(const char* p, const std::string& t) {
  const std::size_t n = ply_type_size(t);
  if (t == "float" || t == "float32") {
    float f;
    std::memcpy(&f, p, 4);
    return f;
  }
  if (n == 8) {
    double d;
    std::memcpy(&d, p, 8);
    return d;
  }
  std::int64_t v = 0;
  std::memcpy(&v, p, n);
  return static_cast<double>(v);
}

}  // namespace detail

inline std::vector<Eigen::Vector3d> read_point_cloud(const std::string& path) {
  auto is = detail::open_input(path, std::ios::in | std::ios::binary);
  std::string line;
  std::getline(is, line);
  std::vector<Eigen::Vector3d> pts;
  if (line.rfind("ply", 0) != 0) {
    is.seekg(0);
    for (int n = 1; std::getline(is, line); ++n) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream ls(line);
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw ValidationError(path + ":" + std::to_string(n) + ": expected x y z");
      pts.emplace_back(x, y, z);
    }
    return pts;
  }

  std::string format;
  std::size_t count = 0;
  bool in_vertex = false, vertex_seen = false;
  std::vector<std::string> types, names;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end_header") break;
    if (key == "format") ls >> format;
    else if (key == "element") {
      std::string name;
      ls >> name;
      if (name == "vertex") {
        if (vertex_seen) throw ValidationError(path + ": duplicate vertex element");
        ls >> count;
        in_vertex = vertex_seen = true;
      } else {
        if (!vertex_seen) throw ValidationError(path + ": vertex element must come first");
        in_vertex = false;
      }
    } else if (key == "property" && in_vertex) {
      std::string type, name;
      ls >> type;
      if (type == "list") throw ValidationError(path + ": list properties on vertices are not supported");
      ls >> name;
      types.push_back(type);
      names.push_back(name);
    }
  }
  const auto find = [&](const char* n) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return i;
    throw ValidationError(path + ": PLY vertex lacks property " + n);
  };
  const std::size_t ix = find("x"), iy = find("y"), iz = find("z");
  pts.reserve(count);
  if (format == "ascii") {
    std::vector<double> vals(names.size());
    for (std::size_t i = 0; i < count; ++i) {
      for (auto& v : vals)
        if (!(is >> v)) throw ValidationError(path + ": truncated PLY data");
      pts.emplace_back(vals[ix], vals[iy], vals[iz]);
    }
  } else if (format == "binary_little_endian") {
    std::vector<std::size_t> offset(names.size());
    std::size_t stride = 0;
    for (std::size_t i = 0; i < names.size(); ++i) {
      offset[i] = stride;
      stride += detail::ply_type_size(types[i]);
    }
    std::vector<char> buf(stride);
    for (std::size_t i = 0; i < count; ++i) {
      if (!is.read(buf.data(), static_cast<std::streamsize>(stride))) throw ValidationError(path + ": truncated PLY data");
      pts.emplace_back(detail::ply_read_binary(buf.data() + offset[ix], types[ix]),
                       detail::ply_read_binary(buf.data() + offset[iy], types[iy]),
                       detail::ply_read_binary(buf.data() + offset[iz], types[iz]));
    }
  } else {
    throw ValidationError(path + ": unsupported PLY format '" + format + "'");
  }
  return pts;
}

inline void write_ply(std::ostream& os, const std::vector<Eigen::Vector3d>& pts) {
  os << "ply\nformat binary_little_endian 1.0\nelement vertex " << pts.size()
     << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (const auto& p : pts) {
    for (int k = 0; k < 3; ++k) {
      const float f = static_cast<float>(p[k]);
      os.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
}

// ---------------------------------------------------------------------------
// Label masks from 8/16-bit PGM.

inline LabelMask read_label_mask(const std::string& path) {
  const Image<float> img = read_netpbm(path);
  if (img.channels != 1) throw ValidationError(path + ": label mask must be single-channel PGM");
  LabelMask m(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) m.ids[i] = static_cast<std::uint16_t>(img.data[i]);
  return m;
}

inline Image<float> label_mask_image(const LabelMask& m) {
  Image<float> img(m.width, m.height);
  for (std::size_t i = 0; i < m.ids.size(); ++i) img.data[i] = m.ids[i];
  return img;
}

}  // namespace woodgeom
