#include "gaitfuse/skeleton.hpp"

#include <cmath>
#include <string>

#include "gaitfuse/errors.hpp"

namespace gaitfuse {

namespace {

constexpr std::array<std::string_view, kNumJoints> kJointNames{
    "r-ankle",  "r-knee",   "r-hip",      "l-hip",      "l-knee",     "l-ankle",
    "pelvis",   "thorax",   "upper-neck", "head-top",   "r-wrist",    "r-elbow",
    "r-shoulder", "l-shoulder", "l-elbow", "l-wrist"};

SkeletonTopology make_mpii() {
  SkeletonTopology topo;
  auto& p = topo.parent;
  p[kRightAnkle] = kRightKnee;
  p[kRightKnee] = kRightHip;
  p[kRightHip] = kPelvis;
  p[kLeftHip] = kPelvis;
  p[kLeftKnee] = kLeftHip;
  p[kLeftAnkle] = kLeftKnee;
  p[kPelvis] = kPelvis;
  p[kThorax] = kPelvis;
  p[kUpperNeck] = kThorax;
  p[kHeadTop] = kUpperNeck;
  p[kRightWrist] = kRightElbow;
  p[kRightElbow] = kRightShoulder;
  p[kRightShoulder] = kThorax;
  p[kLeftShoulder] = kThorax;
  p[kLeftElbow] = kLeftShoulder;
  p[kLeftWrist] = kLeftElbow;
  topo.root = kPelvis;
  topo.thorax = kThorax;
  topo.pelvis = kPelvis;
  topo.lower_limbs = {kRightAnkle, kRightKnee, kRightHip, kLeftHip, kLeftKnee, kLeftAnkle};
  topo.legs = {{{kRightHip, kRightKnee, kRightAnkle}, {kLeftHip, kLeftKnee, kLeftAnkle}}};
  return topo;
}

}  // namespace

std::string_view joint_name(std::size_t joint) {
  return joint < kNumJoints ? kJointNames[joint] : std::string_view{"?"};
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::NM: return "NM";
    case Condition::BG: return "BG";
    case Condition::CL: return "CL";
  }
  return "?";
}

Condition parse_condition(std::string_view text) {
  if (text == "NM") return Condition::NM;
  if (text == "BG") return Condition::BG;
  if (text == "CL") return Condition::CL;
  throw DataError("unknown condition '" + std::string(text) + "' (expected NM, BG or CL)");
}

const SkeletonTopology& SkeletonTopology::mpii() {
  static const SkeletonTopology topo = make_mpii();
  return topo;
}

void SkeletonTopology::validate() const {
  if (root >= kNumJoints || parent[root] != root) {
    throw ConfigError("topology root must map to itself");
  }
  if (thorax >= kNumJoints || pelvis >= kNumJoints || thorax == pelvis) {
    throw ConfigError("topology center pair must be two distinct joints");
  }
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    std::size_t cur = j;
    for (std::size_t steps = 0; cur != root; ++steps) {
      if (steps > kNumJoints || parent[cur] >= kNumJoints || (parent[cur] == cur)) {
        throw ConfigError("parent chain from joint " + std::to_string(j) +
                          " does not reach the root");
      }
      cur = parent[cur];
    }
  }
}

void validate_sequence(const PoseSequence& seq) {
  const std::string tag = seq.subject_id + "/" + seq.sequence_id;
  if (seq.view_deg < 0 || seq.view_deg > 180) {
    throw DataError(tag + ": view_deg " + std::to_string(seq.view_deg) + " outside [0,180]");
  }
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto& f = seq.frames[k];
    if (k > 0 && f.frame_index != seq.frames[k - 1].frame_index + 1) {
      throw DataError(tag + ": frame_idx " + std::to_string(f.frame_index) +
                      " does not follow " + std::to_string(seq.frames[k - 1].frame_index));
    }
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      const Joint& jt = f.joints[j];
      if (!std::isfinite(jt.x) || !std::isfinite(jt.y)) {
        throw DataError(tag + ": non-finite coordinate at frame " +
                        std::to_string(f.frame_index) + ", joint " + std::to_string(j));
      }
      if (!(jt.confidence >= 0.0 && jt.confidence <= 1.0)) {
        throw DataError(tag + ": confidence outside [0,1] at frame " +
                        std::to_string(f.frame_index) + ", joint " + std::to_string(j));
      }
    }
  }
}

PoseSequence normalize_sequence(const PoseSequence& seq, const SkeletonTopology& topo) {
  PoseSequence out = seq;
  for (auto& frame : out.frames) {
    const Joint& th = frame.joints[topo.thorax];
    const Joint& pv = frame.joints[topo.pelvis];
    const double cx = (th.x + pv.x) / 2.0;
    const double cy = (th.y + pv.y) / 2.0;
    const double len = std::hypot(th.x - pv.x, th.y - pv.y);
    if (!(len > 1e-12)) {
      throw DataError(seq.subject_id + "/" + seq.sequence_id + ": degenerate frame " +
                      std::to_string(frame.frame_index) + " (thorax coincides with pelvis)");
    }
    for (auto& j : frame.joints) {
      j.x = (j.x - cx) / len;
      j.y = (j.y - cy) / len;
    }
  }
  return out;
}

GaitTensor to_gait_tensor(const PoseSequence& seq, std::size_t start, std::size_t window) {
  if (window < 8) {
    throw DataError("window of " + std::to_string(window) + " frames is below the minimum of 8");
  }
  if (start > seq.length() || window > seq.length() - start) {
    throw DataError("window [" + std::to_string(start) + ", " + std::to_string(start + window) +
                    ") exceeds sequence " + seq.sequence_id + " of length " +
                    std::to_string(seq.length()));
  }
  GaitTensor x(2, window, kNumJoints);
  for (std::size_t t = 0; t < window; ++t) {
    const auto& frame = seq.frames[start + t];
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      x.at(0, t, i) = frame.joints[i].x;
      x.at(1, t, i) = frame.joints[i].y;
    }
  }
  return x;
}

}  // namespace gaitfuse
