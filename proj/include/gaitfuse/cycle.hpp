#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gaitfuse/skeleton.hpp"

namespace gaitfuse {

inline constexpr std::size_t kDefaultBins = 16;
inline constexpr std::size_t kDefaultSmoothing = 3;
inline constexpr std::size_t kDefaultMinSeparation = 6;
inline constexpr std::size_t kFallbackStride = 48;

using BitVector = std::vector<std::uint8_t>;

/// One-hot quantization of the lower-limb joints of a normalized frame.
///
/// Each coordinate falls into one of `bins` equal-width intervals over [-2, 2]
/// (out-of-range values clamp to the edge bins). The two legs are emitted
/// front-most first (larger ankle x), so a frame and its left/right mirror in
/// stance encode identically and troughs repeat every half cycle.
BitVector encode_lower_limbs(const KeypointFrame& frame, const SkeletonTopology& topo,
                             std::size_t bins = kDefaultBins);

std::size_t hamming_distance(const BitVector& a, const BitVector& b);

struct SimilarityWaveform {
  std::vector<std::size_t> values;
  std::size_t reference_index = 0;
};

// `seq` must already be normalized.
SimilarityWaveform similarity_waveform(const PoseSequence& seq, const SkeletonTopology& topo,
                                       std::size_t bins = kDefaultBins);

struct GaitCycleEstimate {
  std::size_t half_cycle_frames = 0;
  std::size_t full_cycle_frames = 0;
  std::vector<std::size_t> trough_indices;
};

std::vector<double> moving_average(std::span<const double> values, std::size_t window);

/// Trough search on the smoothed waveform.
///
/// A trough is an interior run of equal smoothed values with strictly larger
/// neighbours on both sides; its position is the run's lower middle. Troughs
/// closer than `min_separation` keep the lower one. Throws NoPeriodicityError
/// when fewer than two troughs remain.
GaitCycleEstimate detect_cycle(const SimilarityWaveform& waveform,
                               std::size_t smoothing = kDefaultSmoothing,
                               std::size_t min_separation = kDefaultMinSeparation);

/// round(2 * mean(full_cycle_frames)). Throws DataError on an empty list.
std::size_t temporal_stride(std::span<const GaitCycleEstimate> estimates);

// Normalizes, builds the waveform and detects the cycle in one go.
GaitCycleEstimate estimate_cycle(const PoseSequence& raw, const SkeletonTopology& topo,
                                 std::size_t bins = kDefaultBins,
                                 std::size_t smoothing = kDefaultSmoothing,
                                 std::size_t min_separation = kDefaultMinSeparation);

}  // namespace gaitfuse
