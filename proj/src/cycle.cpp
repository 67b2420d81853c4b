#include "gaitfuse/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gaitfuse/errors.hpp"

namespace gaitfuse {

namespace {

constexpr double kRangeLo = -2.0;
constexpr double kRangeHi = 2.0;

std::size_t quantize(double v, std::size_t bins) {
  const double u = (v - kRangeLo) / (kRangeHi - kRangeLo) * static_cast<double>(bins);
  if (!(u > 0.0)) return 0;  // also catches NaN
  const auto b = static_cast<std::size_t>(std::floor(u));
  return std::min(b, bins - 1);
}

}  // namespace

BitVector encode_lower_limbs(const KeypointFrame& frame, const SkeletonTopology& topo,
                             std::size_t bins) {
  if (bins < 2) throw ConfigError("encode_lower_limbs needs at least 2 bins");

  const auto& legs = topo.legs;
  const bool swap = frame.joints[legs[1][2]].x > frame.joints[legs[0][2]].x;
  const std::array<std::size_t, 2> order = swap ? std::array<std::size_t, 2>{1, 0}
                                                : std::array<std::size_t, 2>{0, 1};

  BitVector bits(legs.size() * legs[0].size() * 2 * bins, 0);
  std::size_t slot = 0;
  for (std::size_t leg : order) {
    for (std::size_t joint : legs[leg]) {
      const Joint& j = frame.joints[joint];
      bits[slot * bins + quantize(j.x, bins)] = 1;
      ++slot;
      bits[slot * bins + quantize(j.y, bins)] = 1;
      ++slot;
    }
  }
  return bits;
}

std::size_t hamming_distance(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size()) throw ShapeError("hamming_distance on vectors of different length");
  std::size_t d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] != b[k]) ? 1 : 0;
  return d;
}

SimilarityWaveform similarity_waveform(const PoseSequence& seq, const SkeletonTopology& topo,
                                       std::size_t bins) {
  if (seq.length() < 2) {
    throw DataError("sequence " + seq.sequence_id + " is too short for a similarity waveform");
  }
  SimilarityWaveform wave;
  wave.reference_index = 0;
  wave.values.reserve(seq.length());
  const BitVector ref = encode_lower_limbs(seq.frames.front(), topo, bins);
  for (const auto& frame : seq.frames) {
    wave.values.push_back(hamming_distance(ref, encode_lower_limbs(frame, topo, bins)));
  }
  return wave;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  if (window <= 1) {
    std::copy(values.begin(), values.end(), out.begin());
    return out;
  }
  const std::size_t left = (window - 1) / 2;
  const std::size_t right = window / 2;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= left ? t - left : 0;
    const std::size_t hi = std::min(n - 1, t + right);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) sum += values[k];
    out[t] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

GaitCycleEstimate detect_cycle(const SimilarityWaveform& waveform, std::size_t smoothing,
                               std::size_t min_separation) {
  const std::size_t n = waveform.values.size();
  if (n < 3 || n < 2 * min_separation) {
    throw NoPeriodicityError("no periodicity detected: waveform of " + std::to_string(n) +
                             " frames is too short");
  }
  std::vector<double> raw(waveform.values.begin(), waveform.values.end());
  const std::vector<double> s = moving_average(raw, smoothing);

  std::vector<std::size_t> candidates;
  for (std::size_t a = 1; a + 1 < n;) {
    std::size_t b = a;
    while (b + 1 < n && s[b + 1] == s[a]) ++b;
    if (b + 1 < n && s[a - 1] > s[a] && s[b + 1] > s[b]) {
      candidates.push_back(a + (b - a) / 2);
    }
    a = b + 1;
  }

  std::vector<std::size_t> troughs;
  for (std::size_t c : candidates) {
    if (!troughs.empty() && c - troughs.back() < min_separation) {
      if (s[c] < s[troughs.back()]) troughs.back() = c;
      continue;
    }
    troughs.push_back(c);
  }
  if (troughs.size() < 2) {
    throw NoPeriodicityError("no periodicity detected (" + std::to_string(troughs.size()) +
                             " trough(s) found)");
  }

  std::vector<std::size_t> gaps;
  for (std::size_t k = 1; k < troughs.size(); ++k) gaps.push_back(troughs[k] - troughs[k - 1]);
  std::sort(gaps.begin(), gaps.end());
  const std::size_t half = gaps[(gaps.size() - 1) / 2];

  GaitCycleEstimate est;
  est.half_cycle_frames = half;
  est.full_cycle_frames = 2 * half;
  est.trough_indices = std::move(troughs);
  return est;
}

std::size_t temporal_stride(std::span<const GaitCycleEstimate> estimates) {
  if (estimates.empty()) throw DataError("temporal_stride needs at least one cycle estimate");
  double sum = 0.0;
  for (const auto& e : estimates) sum += static_cast<double>(e.full_cycle_frames);
  return static_cast<std::size_t>(std::llround(2.0 * sum / static_cast<double>(estimates.size())));
}

GaitCycleEstimate estimate_cycle(const PoseSequence& raw, const SkeletonTopology& topo,
                                 std::size_t bins, std::size_t smoothing,
                                 std::size_t min_separation) {
  return detect_cycle(similarity_waveform(normalize_sequence(raw, topo), topo, bins), smoothing,
                      min_separation);
}

}  // namespace gaitfuse
