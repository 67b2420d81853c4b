#include "gaitfuse/branches.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gaitfuse/errors.hpp"

namespace gaitfuse {

namespace {

void check_joints(const GaitTensor& x, const SkeletonTopology& topo) {
  if (x.data.size() != x.channels * x.frames * x.joints) {
    throw ShapeError("gait tensor extents do not match its data");
  }
  if (x.joints != kNumJoints || topo.thorax >= x.joints || topo.pelvis >= x.joints) {
    throw ShapeError("gait tensor must carry the 16 topology joints");
  }
}

}  // namespace

GaitTensor skeleton_center(const GaitTensor& x, const SkeletonTopology& topo) {
  check_joints(x, topo);
  GaitTensor center(x.channels, x.frames, 1);
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t t = 0; t < x.frames; ++t) {
      center.at(c, t, 0) = (x.at(c, t, topo.thorax) + x.at(c, t, topo.pelvis)) / 2.0;
    }
  }
  return center;
}

ProportionFeatures proportion_branch(const GaitTensor& x, const SkeletonTopology& topo) {
  const GaitTensor center = skeleton_center(x, topo);
  const std::size_t C = x.channels;
  GaitTensor out(2 * C, x.frames, x.joints);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < x.frames; ++t) {
      const double mid = center.at(c, t, 0);
      for (std::size_t i = 0; i < x.joints; ++i) {
        out.at(c, t, i) = x.at(c, t, i) - mid;
        out.at(C + c, t, i) = x.at(c, t, i);
      }
    }
  }
  return {std::move(out)};
}

VelocityFeatures velocity_branch(const GaitTensor& x) {
  if (x.frames < kVelocityLag + 2) {
    throw DataError("sequence too short for velocity branch: " + std::to_string(x.frames) +
                    " frames, need at least 8");
  }
  const std::size_t C = x.channels;
  const std::size_t steps = x.frames - kVelocityLag;
  GaitTensor out(2 * C, steps, x.joints);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t i = 0; i < x.joints; ++i) {
        out.at(c, t, i) = x.at(c, t + kVelocityLag, i) - x.at(c, t, i);
        out.at(C + c, t, i) = x.at(c, t + 1, i) - x.at(c, t, i);
      }
    }
  }
  return {std::move(out)};
}

SkeletalMotionFeatures skeletal_motion_branch(const GaitTensor& x, const SkeletonTopology& topo,
                                              double epsilon, AngleMode mode) {
  check_joints(x, topo);
  if (x.channels != 2) throw ShapeError("skeletal motion branch expects 2 coordinate channels");
  if (!(epsilon > 0.0)) throw ConfigError("skeletal motion epsilon must be positive");
  GaitTensor out(3, x.frames, x.joints);
  const double eps2 = epsilon * epsilon;
  for (std::size_t t = 0; t < x.frames; ++t) {
    for (std::size_t i = 0; i < x.joints; ++i) {
      if (i == topo.root) continue;  // zero bone, zero angle
      const std::size_t adj = topo.parent[i];
      const double lx = x.at(0, t, i) - x.at(0, t, adj);
      const double ly = x.at(1, t, i) - x.at(1, t, adj);
      out.at(0, t, i) = lx;
      out.at(1, t, i) = ly;
      if (mode == AngleMode::arccos) {
        const double cosine = std::clamp(ly / std::sqrt(lx * lx + ly * ly + eps2), -1.0, 1.0);
        out.at(2, t, i) = std::acos(cosine);
      } else {
        out.at(2, t, i) = std::atan2(lx, ly);
      }
    }
  }
  return {std::move(out)};
}

BranchBundle build_bundle(const GaitTensor& x, const SkeletonTopology& topo, AngleMode mode) {
  BranchBundle bundle;
  bundle.velocity = velocity_branch(x);
  bundle.proportion = proportion_branch(x, topo);
  bundle.skeletal = skeletal_motion_branch(x, topo, kAngleEpsilon, mode);
  return bundle;
}

}  // namespace gaitfuse
