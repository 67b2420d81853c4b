#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gaitfuse/branches.hpp"
#include "gaitfuse/checkpoint.hpp"
#include "gaitfuse/extractor.hpp"
#include "gaitfuse/model.hpp"
#include "gaitfuse/skeleton.hpp"
#include "gaitfuse/train_config.hpp"

namespace gaitfuse {

struct WindowPlan {
  std::size_t window = 48;
  std::size_t stride = 48;
};

/// Window length/advance for a sequence population. Under the automatic
/// policy both equal twice the mean detected full cycle (sequences without a
/// detectable cycle are skipped; 48 frames when none is found), clamped to the
/// shortest sequence. `sequences` are raw (unnormalized).
WindowPlan plan_windows(std::span<const PoseSequence> sequences, const WindowPolicy& policy);

// Start frames 0, stride, 2*stride, ... that fit a full window.
std::vector<std::size_t> window_starts(std::size_t length, const WindowPlan& plan);

// Branch bundles for every window of an already-normalized sequence.
std::vector<BranchBundle> sequence_windows(const PoseSequence& normalized, const WindowPlan& plan);

// x -> -x with left/right joints exchanged.
PoseSequence mirror_sequence(const PoseSequence& seq);

struct ArchitectureConfig {
  ExtractorConfig extractor;
  std::size_t reduction_ratio = 4;
};

struct TrainResult {
  Checkpoint checkpoint;              // lowest mean training loss epoch
  std::vector<std::string> subjects;  // class index -> subject id
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Trains the fusion network to classify subject identity.
///
/// Sequences are normalized and cut into windows; masked branches are fed as
/// zero maps. Deterministic in (dataset, config); single-threaded.
/// Throws DataError for fewer than two subjects or sequences shorter than the
/// window, NumericalError when the loss turns non-finite.
TrainResult train(std::span<const PoseSequence> dataset, const TrainConfig& config,
                  const BranchMask& mask, const ArchitectureConfig& arch = {},
                  const EpochCallback& on_epoch = {});

}  // namespace gaitfuse
