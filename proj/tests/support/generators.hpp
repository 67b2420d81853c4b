#pragma once

#include <cmath>
#include <string>

#include "gaitfuse/random.hpp"
#include "gaitfuse/skeleton.hpp"

namespace gaitfuse::testing {

inline GaitTensor random_gait_tensor(Rng& rng, std::size_t channels, std::size_t frames,
                                     double scale = 1.0) {
  GaitTensor x(channels, frames, kNumJoints);
  for (double& v : x.data) v = scale * normal(rng);
  return x;
}

// Random walk-ish pose sequence, raw image coordinates.
inline PoseSequence random_sequence(Rng& rng, std::size_t frames, std::string subject = "s001",
                                    std::string sequence = "nm-01") {
  PoseSequence seq;
  seq.subject_id = std::move(subject);
  seq.sequence_id = std::move(sequence);
  seq.view_deg = 90;
  for (std::size_t t = 0; t < frames; ++t) {
    KeypointFrame f;
    f.frame_index = t;
    for (auto& j : f.joints) {
      j.x = uniform(rng, 0.0, 1.0);
      j.y = uniform(rng, 0.0, 1.0);
      j.confidence = uniform(rng, 0.0, 1.0);
    }
    f.joints[kThorax] = {0.5, 0.3, 1.0};
    f.joints[kPelvis] = {0.5 + uniform(rng, -0.05, 0.05), 0.5, 1.0};
    seq.frames.push_back(f);
  }
  return seq;
}

}  // namespace gaitfuse::testing
