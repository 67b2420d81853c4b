#pragma once

#include <vector>

#include "gaitfuse/skeleton.hpp"

namespace gaitfuse {

// Short-period velocity offset, in frames.
inline constexpr std::size_t kVelocityLag = 6;
inline constexpr double kAngleEpsilon = 1e-8;

enum class AngleMode {
  arccos,  // arccos(l_y / |l|), range [0, pi]; blind to the sign of l_x
  signed_, // atan2(l_x, l_y), range (-pi, pi]; ablation variant
};

// Channels [0, C) relative positions h, [C, 2C) raw keypoints.
struct ProportionFeatures {
  GaitTensor data;
};

// Channels [0, C) short-period velocity f, [C, 2C) instantaneous velocity e,
// both over the first T - 6 frames.
struct VelocityFeatures {
  GaitTensor data;
};

// Channels (l_x, l_y, angle).
struct SkeletalMotionFeatures {
  GaitTensor data;
};

struct BranchBundle {
  ProportionFeatures proportion;
  VelocityFeatures velocity;
  SkeletalMotionFeatures skeletal;
};

/// C x T array (stored as a GaitTensor with one joint) of thorax/pelvis midpoints.
GaitTensor skeleton_center(const GaitTensor& x, const SkeletonTopology& topo);

ProportionFeatures proportion_branch(const GaitTensor& x, const SkeletonTopology& topo);

// Throws DataError when T < 8.
VelocityFeatures velocity_branch(const GaitTensor& x);

SkeletalMotionFeatures skeletal_motion_branch(const GaitTensor& x, const SkeletonTopology& topo,
                                              double epsilon = kAngleEpsilon,
                                              AngleMode mode = AngleMode::arccos);

BranchBundle build_bundle(const GaitTensor& x, const SkeletonTopology& topo,
                          AngleMode mode = AngleMode::arccos);

}  // namespace gaitfuse
