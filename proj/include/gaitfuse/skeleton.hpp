#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gaitfuse {

inline constexpr std::size_t kNumJoints = 16;

// MPII joint order.
enum JointId : std::size_t {
  kRightAnkle = 0,
  kRightKnee = 1,
  kRightHip = 2,
  kLeftHip = 3,
  kLeftKnee = 4,
  kLeftAnkle = 5,
  kPelvis = 6,
  kThorax = 7,
  kUpperNeck = 8,
  kHeadTop = 9,
  kRightWrist = 10,
  kRightElbow = 11,
  kRightShoulder = 12,
  kLeftShoulder = 13,
  kLeftElbow = 14,
  kLeftWrist = 15,
};

std::string_view joint_name(std::size_t joint);

struct Joint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 1.0;

  friend bool operator==(const Joint&, const Joint&) = default;
};

struct KeypointFrame {
  std::size_t frame_index = 0;
  std::array<Joint, kNumJoints> joints{};

  friend bool operator==(const KeypointFrame&, const KeypointFrame&) = default;
};

enum class Condition { NM, BG, CL };

inline constexpr std::array<Condition, 3> kAllConditions{Condition::NM, Condition::BG,
                                                         Condition::CL};

std::string_view to_string(Condition c);
// Throws DataError on anything other than "NM", "BG" or "CL".
Condition parse_condition(std::string_view text);

struct PoseSequence {
  std::string subject_id;
  std::string sequence_id;
  Condition condition = Condition::NM;
  int view_deg = 90;
  std::vector<KeypointFrame> frames;

  std::size_t length() const { return frames.size(); }

  friend bool operator==(const PoseSequence&, const PoseSequence&) = default;
};

// Checks frame ordering, joint finiteness and confidence range. Throws DataError.
void validate_sequence(const PoseSequence& seq);

/// Kinematic tree over the 16 MPII joints.
///
/// `parent[i]` is adj(i), the joint a bone from `i` is measured against. The
/// root maps to itself.
struct SkeletonTopology {
  std::array<std::size_t, kNumJoints> parent{};
  std::size_t root = kPelvis;
  std::size_t thorax = kThorax;
  std::size_t pelvis = kPelvis;
  std::vector<std::size_t> lower_limbs;

  // Pairs of (left, right)-symmetric lower-limb chains, hip to ankle.
  std::array<std::array<std::size_t, 3>, 2> legs{};

  static const SkeletonTopology& mpii();

  // Throws ConfigError when the parent table is not a tree rooted at `root`.
  void validate() const;
};

/// Dense C x T x I array in row-major order (channel, frame, joint).
struct GaitTensor {
  std::size_t channels = 0;
  std::size_t frames = 0;
  std::size_t joints = 0;
  std::vector<double> data;

  GaitTensor() = default;
  GaitTensor(std::size_t c, std::size_t t, std::size_t i, double fill = 0.0)
      : channels(c), frames(t), joints(i), data(c * t * i, fill) {}

  double& at(std::size_t c, std::size_t t, std::size_t i) {
    return data[(c * frames + t) * joints + i];
  }
  double at(std::size_t c, std::size_t t, std::size_t i) const {
    return data[(c * frames + t) * joints + i];
  }
};

/// Translates each frame so the thorax/pelvis midpoint sits at the origin and
/// scales it so the thorax-pelvis distance is 1. Confidences are untouched.
PoseSequence normalize_sequence(const PoseSequence& seq,
                                const SkeletonTopology& topo = SkeletonTopology::mpii());

GaitTensor to_gait_tensor(const PoseSequence& seq, std::size_t start, std::size_t window);

}  // namespace gaitfuse
