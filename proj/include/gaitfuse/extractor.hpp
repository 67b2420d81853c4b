#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gaitfuse/random.hpp"
#include "gaitfuse/tensor.hpp"

namespace gaitfuse {

struct StagePlan {
  std::size_t blocks = 1;
  std::size_t width = 16;
  std::size_t stride = 1;

  friend bool operator==(const StagePlan&, const StagePlan&) = default;
};

struct ExtractorConfig {
  std::size_t input_channels = 4;
  std::size_t stem_channels = 16;
  std::size_t stem_kernel = 7;
  std::size_t stem_stride = 1;
  std::vector<StagePlan> stages{{2, 16, 1}, {2, 32, 2}};

  // Throws ConfigError.
  void validate() const;
  std::size_t output_channels() const { return stages.back().width; }
  // [N x C_in x H x W] -> [N x C_out x H' x W'] by closed-form shape arithmetic.
  Shape output_shape(const Shape& input) const;

  // Stage plan of the 50-layer network: (3, 4, 6, 3) bottleneck blocks.
  static ExtractorConfig resnet50(std::size_t input_channels);

  friend bool operator==(const ExtractorConfig&, const ExtractorConfig&) = default;
};

// Bottleneck width is a quarter of the block output width.
std::size_t bottleneck_width(std::size_t block_width);

/// 1x1 reduce -> 3x3 -> 1x1 expand, with an optional 1x1 projection on the
/// skip path when the block changes channel count or stride.
struct BottleneckBlock {
  Tensor reduce;
  Tensor conv3x3;
  Tensor expand;
  Tensor projection;  // undefined when the skip path is the identity
  std::size_t stride = 1;

  // relu(skip(x) + expand(relu(conv3x3(relu(reduce(x))))))
  Tensor forward(Tape& tape, const Tensor& x) const;
};

/// Stem convolution followed by stages of bottleneck residual blocks.
///
/// Parameters are registered in `params` as
/// `<prefix>.stem` and `<prefix>.<stage>.<block>.{reduce,conv3x3,expand,projection}`.
class ResidualExtractor {
 public:
  ResidualExtractor(ExtractorConfig config, const std::string& prefix, ParameterSet& params,
                    Rng& rng);

  Tensor forward(Tape& tape, const Tensor& x) const;

  const ExtractorConfig& config() const { return config_; }
  const std::vector<BottleneckBlock>& blocks() const { return blocks_; }

 private:
  ExtractorConfig config_;
  Tensor stem_;
  std::vector<BottleneckBlock> blocks_;
};

// Uniform in +-sqrt(6 / fan_in).
Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng);

}  // namespace gaitfuse
