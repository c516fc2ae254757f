#pragma once

#include "woodgeom/box3d.hpp"
#include "woodgeom/box3d_metrics.hpp"
#include "woodgeom/camera.hpp"
#include "woodgeom/cloud_projection.hpp"
#include "woodgeom/detection_eval.hpp"
#include "woodgeom/errors.hpp"
#include "woodgeom/image.hpp"
#include "woodgeom/io.hpp"
#include "woodgeom/model_fitting.hpp"
#include "woodgeom/radial_model.hpp"
#include "woodgeom/report.hpp"
#include "woodgeom/rigid_pose.hpp"
#include "woodgeom/task_metrics.hpp"
#include "woodgeom/undistortion.hpp"

namespace woodgeom {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace woodgeom
