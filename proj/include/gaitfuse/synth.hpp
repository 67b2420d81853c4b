#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gaitfuse/skeleton.hpp"

namespace gaitfuse {

// Torso is in image units; every other length is a multiple of the torso.
struct LimbLengths {
  double torso = 0.2;
  double neck = 0.15;
  double head = 0.22;
  double shoulder = 0.08;   // thorax to shoulder, along the torso
  double upper_arm = 0.35;
  double forearm = 0.3;
  double hip = 0.07;        // pelvis to hip, straight down
  double thigh = 0.48;
  double shin = 0.48;
};

/// Subject-level gait parameters. Angles are radians.
struct WalkerParams {
  LimbLengths limbs;
  std::size_t period_frames = 24;
  double phase = 0.0;
  double stride_amplitude = 0.45;  // thigh swing about vertical
  double knee_amplitude = 0.7;     // peak knee flexion
  double arm_amplitude = 0.35;     // upper-arm swing
  double elbow_flex = 0.3;         // resting elbow bend
  double bounce_amplitude = 0.02;  // pelvis vertical oscillation, torso units
  double lean = 0.05;              // forward torso tilt
  double speed = 0.006;            // image units per frame
};

struct SynthConfig {
  std::size_t subjects = 12;
  std::size_t nm_sequences = 6;
  std::size_t bg_sequences = 2;
  std::size_t cl_sequences = 2;
  std::size_t frames = 60;
  std::vector<int> views{0, 90, 180};
  double noise_sigma = 0.01;  // torso units
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

// Deterministic in (seed, subject_index).
WalkerParams sample_subject(std::uint64_t seed, std::size_t subject_index);

struct RenderOptions {
  std::size_t frames = 60;
  int view_deg = 90;
  Condition condition = Condition::NM;
  double noise_sigma = 0.0;
  double phase_offset = 0.0;
  double origin_x = 0.25;
  double origin_y = 0.45;
  std::uint64_t noise_seed = 0;
};

// Floor keeps some swing visible in frontal/rear views.
double view_amplitude_factor(int view_deg);

/// Renders a 16-joint walk. Throws DataError when frames < period.
PoseSequence render_sequence(const WalkerParams& params, const RenderOptions& options,
                             std::string subject_id = "s001", std::string sequence_id = "nm-01");

struct ManifestEntry {
  std::string subject_id;
  std::string sequence_id;
  Condition condition = Condition::NM;
  int view_deg = 90;
  double phase_offset = 0.0;
  WalkerParams params;
};

struct SynthDataset {
  std::vector<PoseSequence> sequences;
  std::vector<ManifestEntry> manifest;
};

SynthDataset generate_dataset(const SynthConfig& config);

void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& manifest);

// Writes keypoints.jsonl and manifest.tsv into `dir`.
void write_dataset(const SynthDataset& data, const std::filesystem::path& dir);

}  // namespace gaitfuse
