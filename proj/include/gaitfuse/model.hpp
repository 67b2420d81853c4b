#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "gaitfuse/branches.hpp"
#include "gaitfuse/extractor.hpp"
#include "gaitfuse/mff.hpp"
#include "gaitfuse/tensor.hpp"

namespace gaitfuse {

struct BranchMask {
  bool proportion = true;
  bool velocity = true;
  bool skeletal = true;

  bool any() const { return proportion || velocity || skeletal; }
  // "proportion+skeletal+velocity" style label, fixed order.
  std::string label() const;
  // Accepts '+' or ',' separated branch names, or "all".
  static BranchMask parse(std::string_view text);

  friend bool operator==(const BranchMask&, const BranchMask&) = default;
};

// Input channel counts of the three branch tensors for 2-D keypoints.
inline constexpr std::size_t kProportionChannels = 4;
inline constexpr std::size_t kVelocityChannels = 4;
inline constexpr std::size_t kSkeletalChannels = 3;

struct ModelConfig {
  ExtractorConfig extractor;  // input_channels is set per branch
  std::size_t reduction_ratio = 4;
  std::size_t num_classes = 2;
  std::size_t window = 48;
  double dropout = 0.35;
  BranchMask mask;

  void validate() const;
};

// Stacked branch tensors for a batch of windows, each [N x C x H x W] with
// H = frames and W = joints. Masked branches may be left undefined.
struct BranchBatch {
  Tensor proportion;
  Tensor velocity;
  Tensor skeletal;
  std::size_t size = 0;
};

BranchBatch make_batch(std::span<const BranchBundle* const> windows, const BranchMask& mask);

/// Three independent residual extractors feeding the fusion module and a
/// linear identity classifier.
///
/// Extractors of masked-out branches are not built; their feature maps are
/// replaced by zeros of the shape they would have produced.
class GaitModel {
 public:
  GaitModel(ModelConfig cfg, std::uint64_t seed);
  GaitModel(const GaitModel&) = delete;
  GaitModel& operator=(const GaitModel&) = delete;
  GaitModel(GaitModel&&) = default;
  GaitModel& operator=(GaitModel&&) = default;

  struct Output {
    FusionTrace fusion;
    Tensor logits;
  };

  Output forward(Tape& tape, const BranchBatch& batch, bool training, Rng& dropout_rng) const;
  // Global feature [N x (C_w + C_v)] in inference mode.
  Tensor embed(Tape& tape, const BranchBatch& batch) const;

  const ModelConfig& config() const { return cfg_; }
  FusionConfig fusion_config() const;
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

 private:
  Tensor branch_map(Tape& tape, const std::optional<ResidualExtractor>& extractor,
                    const Tensor& input, std::size_t channels, std::size_t frames,
                    std::size_t batch) const;

  ModelConfig cfg_;
  ParameterSet params_;
  std::optional<ResidualExtractor> proportion_;
  std::optional<ResidualExtractor> velocity_;
  std::optional<ResidualExtractor> skeletal_;
  FusionParams fusion_;
  Tensor classifier_weight_;
  Tensor classifier_bias_;
};

}  // namespace gaitfuse
