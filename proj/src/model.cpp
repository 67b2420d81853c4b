#include "gaitfuse/model.hpp"

#include <algorithm>
#include <sstream>

#include "gaitfuse/errors.hpp"
#include "gaitfuse/random.hpp"

namespace gaitfuse {

namespace {

// Fixed per-module seed salts so masking one branch leaves the others' init unchanged.
enum : std::uint64_t { kSaltProportion = 1, kSaltVelocity = 2, kSaltSkeletal = 3, kSaltFusion = 4,
                       kSaltClassifier = 5 };

ExtractorConfig with_inputs(ExtractorConfig cfg, std::size_t channels) {
  cfg.input_channels = channels;
  return cfg;
}

template <typename Select>
Tensor stack(std::span<const BranchBundle* const> windows, Select select) {
  const GaitTensor& first = select(*windows.front());
  const std::size_t per = first.data.size();
  std::vector<double> values;
  values.reserve(per * windows.size());
  for (const BranchBundle* w : windows) {
    const GaitTensor& g = select(*w);
    if (g.channels != first.channels || g.frames != first.frames || g.joints != first.joints) {
      throw ShapeError("windows in one batch must share branch shapes");
    }
    values.insert(values.end(), g.data.begin(), g.data.end());
  }
  return Tensor({windows.size(), first.channels, first.frames, first.joints}, std::move(values));
}

}  // namespace

std::string BranchMask::label() const {
  std::string out;
  auto append = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  append(proportion, "proportion");
  append(skeletal, "skeletal");
  append(velocity, "velocity");
  return out.empty() ? "none" : out;
}

BranchMask BranchMask::parse(std::string_view text) {
  if (text == "all") return {};
  BranchMask m{false, false, false};
  std::string token;
  std::string s(text);
  std::replace(s.begin(), s.end(), ',', '+');
  std::istringstream parts(s);
  while (std::getline(parts, token, '+')) {
    if (token == "proportion") m.proportion = true;
    else if (token == "velocity") m.velocity = true;
    else if (token == "skeletal" || token == "skeleton") m.skeletal = true;
    else throw ConfigError("unknown branch '" + token + "'");
  }
  if (!m.any()) throw ConfigError("branch mask selects no branch");
  return m;
}

void ModelConfig::validate() const {
  extractor.validate();
  if (num_classes < 1) throw ConfigError("model needs at least one class");
  if (window < kVelocityLag + 2) throw ConfigError("window must be at least 8 frames");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!mask.any()) throw ConfigError("branch mask selects no branch");
  FusionConfig{2 * extractor.output_channels(), extractor.output_channels(), reduction_ratio}
      .validate();
}

BranchBatch make_batch(std::span<const BranchBundle* const> windows, const BranchMask& mask) {
  if (windows.empty()) throw DataError("empty batch");
  BranchBatch b;
  b.size = windows.size();
  if (mask.proportion) {
    b.proportion = stack(windows, [](const BranchBundle& w) -> const GaitTensor& {
      return w.proportion.data;
    });
  }
  if (mask.velocity) {
    b.velocity = stack(windows, [](const BranchBundle& w) -> const GaitTensor& {
      return w.velocity.data;
    });
  }
  if (mask.skeletal) {
    b.skeletal = stack(windows, [](const BranchBundle& w) -> const GaitTensor& {
      return w.skeletal.data;
    });
  }
  return b;
}

GaitModel::GaitModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.mask.proportion) {
    Rng rng(derive_seed({seed, kSaltProportion}));
    proportion_.emplace(with_inputs(cfg_.extractor, kProportionChannels), "extractor.proportion",
                        params_, rng);
  }
  if (cfg_.mask.velocity) {
    Rng rng(derive_seed({seed, kSaltVelocity}));
    velocity_.emplace(with_inputs(cfg_.extractor, kVelocityChannels), "extractor.velocity",
                      params_, rng);
  }
  if (cfg_.mask.skeletal) {
    Rng rng(derive_seed({seed, kSaltSkeletal}));
    skeletal_.emplace(with_inputs(cfg_.extractor, kSkeletalChannels), "extractor.skeletal",
                      params_, rng);
  }
  {
    Rng rng(derive_seed({seed, kSaltFusion}));
    fusion_ = FusionParams::create(fusion_config(), params_, rng);
  }
  Rng rng(derive_seed({seed, kSaltClassifier}));
  auto [w, b] = init_affine(fusion_config().joint_channels(), cfg_.num_classes, rng);
  classifier_weight_ = params_.add("classifier.weight", w);
  classifier_bias_ = params_.add("classifier.bias", b);
}

FusionConfig GaitModel::fusion_config() const {
  const std::size_t width = cfg_.extractor.output_channels();
  return {2 * width, width, cfg_.reduction_ratio};
}

Tensor GaitModel::branch_map(Tape& tape, const std::optional<ResidualExtractor>& extractor,
                             const Tensor& input, std::size_t channels, std::size_t frames,
                             std::size_t batch) const {
  if (extractor) {
    if (!input.defined()) throw DataError("batch is missing an active branch");
    return extractor->forward(tape, input);
  }
  const Shape out =
      with_inputs(cfg_.extractor, channels).output_shape({batch, channels, frames, kNumJoints});
  return Tensor(out, 0.0);
}

GaitModel::Output GaitModel::forward(Tape& tape, const BranchBatch& batch, bool training,
                                     Rng& dropout_rng) const {
  const std::size_t n = batch.size;
  const std::size_t w = cfg_.window;
  Tensor prop = branch_map(tape, proportion_, batch.proportion, kProportionChannels, w, n);
  Tensor skel = branch_map(tape, skeletal_, batch.skeletal, kSkeletalChannels, w, n);
  Tensor vel = branch_map(tape, velocity_, batch.velocity, kVelocityChannels, w - kVelocityLag, n);
  Output out;
  out.fusion = mff_forward(tape, prop, skel, vel, fusion_);
  Tensor dropped = dropout(tape, out.fusion.global, cfg_.dropout, training, dropout_rng);
  out.logits = affine(tape, dropped, classifier_weight_, classifier_bias_);
  return out;
}

Tensor GaitModel::embed(Tape& tape, const BranchBatch& batch) const {
  Rng unused(0);
  return forward(tape, batch, false, unused).fusion.global;
}

}  // namespace gaitfuse
