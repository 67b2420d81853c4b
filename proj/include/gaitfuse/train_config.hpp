#pragma once

#include <cstddef>
#include <cstdint>

namespace gaitfuse {

// Window length and advance. `automatic` derives both from the detected gait
// cycle (twice the mean full cycle); otherwise `frames` is used for both.
struct WindowPolicy {
  bool automatic = true;
  std::size_t frames = 48;

  friend bool operator==(const WindowPolicy&, const WindowPolicy&) = default;
};

struct AugmentConfig {
  bool enabled = false;
  bool mirror = true;            // x -> -x with left/right joint labels swapped
  std::size_t crop_jitter = 2;   // window start offset, +- frames
  double coordinate_sigma = 0.01;

  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  double lr_decay = 0.01;
  double dropout_rate = 0.35;
  std::size_t epochs = 150;
  std::uint64_t seed = 0;
  WindowPolicy window;
  AugmentConfig augment;

  void validate() const;  // throws ConfigError

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

}  // namespace gaitfuse
