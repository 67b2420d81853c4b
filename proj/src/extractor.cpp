#include "gaitfuse/extractor.hpp"

#include <algorithm>
#include <cmath>

#include "gaitfuse/errors.hpp"

namespace gaitfuse {

namespace {

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

void ExtractorConfig::validate() const {
  if (input_channels == 0 || stem_channels == 0 || stem_stride == 0) {
    throw ConfigError("extractor channels and stem stride must be positive");
  }
  if (stem_kernel == 0 || stem_kernel % 2 == 0) {
    throw ConfigError("extractor stem kernel must be odd");
  }
  if (stages.empty()) throw ConfigError("extractor needs at least one stage");
  for (const auto& s : stages) {
    if (s.blocks == 0 || s.width == 0 || s.stride == 0) {
      throw ConfigError("extractor stage counts, widths and strides must be positive");
    }
  }
}

Shape ExtractorConfig::output_shape(const Shape& input) const {
  validate();
  if (input.size() != 4 || input[1] != input_channels) {
    throw ShapeError("extractor expects [N x " + std::to_string(input_channels) +
                     " x H x W], got " + shape_string(input));
  }
  const std::size_t pad = stem_kernel / 2;
  if (input[2] + 2 * pad < stem_kernel || input[3] + 2 * pad < stem_kernel) {
    throw ShapeError("input " + shape_string(input) + " is smaller than the stem kernel");
  }
  std::size_t h = conv_out(input[2], stem_kernel, stem_stride, pad);
  std::size_t w = conv_out(input[3], stem_kernel, stem_stride, pad);
  for (const auto& s : stages) {
    h = conv_out(h, 3, s.stride, 1);
    w = conv_out(w, 3, s.stride, 1);
  }
  return {input[0], output_channels(), h, w};
}

ExtractorConfig ExtractorConfig::resnet50(std::size_t input_channels) {
  ExtractorConfig c;
  c.input_channels = input_channels;
  c.stem_channels = 64;
  c.stem_kernel = 7;
  c.stem_stride = 2;
  c.stages = {{3, 256, 1}, {4, 512, 2}, {6, 1024, 2}, {3, 2048, 2}};
  return c;
}

std::size_t bottleneck_width(std::size_t block_width) { return std::max<std::size_t>(1, block_width / 4); }

Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = uniform(rng, -bound, bound);
  return t;
}

Tensor BottleneckBlock::forward(Tape& tape, const Tensor& x) const {
  Tensor h = relu(tape, conv2d(tape, x, reduce, 1, 0));
  h = relu(tape, conv2d(tape, h, conv3x3, stride, 1));
  h = conv2d(tape, h, expand, 1, 0);
  const Tensor skip = projection.defined() ? conv2d(tape, x, projection, stride, 0) : x;
  return relu(tape, add(tape, skip, h));
}

ResidualExtractor::ResidualExtractor(ExtractorConfig config, const std::string& prefix,
                                     ParameterSet& params, Rng& rng)
    : config_(std::move(config)) {
  config_.validate();
  const std::size_t k = config_.stem_kernel;
  stem_ = params.add(prefix + ".stem",
                     he_uniform({config_.stem_channels, config_.input_channels, k, k},
                                config_.input_channels * k * k, rng));
  std::size_t in = config_.stem_channels;
  for (std::size_t s = 0; s < config_.stages.size(); ++s) {
    const StagePlan& plan = config_.stages[s];
    for (std::size_t b = 0; b < plan.blocks; ++b) {
      const std::string base = prefix + "." + std::to_string(s) + "." + std::to_string(b);
      const std::size_t mid = bottleneck_width(plan.width);
      BottleneckBlock block;
      block.stride = (b == 0) ? plan.stride : 1;
      block.reduce = params.add(base + ".reduce", he_uniform({mid, in, 1, 1}, in, rng));
      block.conv3x3 = params.add(base + ".conv3x3", he_uniform({mid, mid, 3, 3}, mid * 9, rng));
      block.expand = params.add(base + ".expand", he_uniform({plan.width, mid, 1, 1}, mid, rng));
      if (in != plan.width || block.stride != 1) {
        block.projection =
            params.add(base + ".projection", he_uniform({plan.width, in, 1, 1}, in, rng));
      }
      blocks_.push_back(std::move(block));
      in = plan.width;
    }
  }
}

Tensor ResidualExtractor::forward(Tape& tape, const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != config_.input_channels) {
    throw ShapeError("extractor expects " + std::to_string(config_.input_channels) +
                     " input channels, got " + shape_string(x.shape()));
  }
  Tensor h = relu(tape, conv2d(tape, x, stem_, config_.stem_stride, config_.stem_kernel / 2));
  for (const auto& block : blocks_) h = block.forward(tape, h);
  return h;
}

}  // namespace gaitfuse
