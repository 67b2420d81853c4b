#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "gaitfuse/random.hpp"
#include "gaitfuse/tensor.hpp"

namespace gaitfuse {

struct FusionConfig {
  std::size_t spatial_channels = 64;   // C_w = proportion + skeletal extractor widths
  std::size_t velocity_channels = 32;  // C_v
  std::size_t reduction_ratio = 4;

  std::size_t joint_channels() const { return spatial_channels + velocity_channels; }
  std::size_t reduced_channels() const { return joint_channels() / reduction_ratio; }
  void validate() const;  // throws ConfigError
};

// Sigmoid attention weights per channel, [N x C_w] and [N x C_v].
struct Excitation {
  Tensor spatial;
  Tensor velocity;
};

struct FusionParams {
  Tensor reduce_weight, reduce_bias;
  Tensor excite_w_weight, excite_w_bias;
  Tensor excite_v_weight, excite_v_bias;

  // Registers mff.reduce.*, mff.excite_w.* and mff.excite_v.* in `params`.
  static FusionParams create(const FusionConfig& cfg, ParameterSet& params, Rng& rng);
};

// Step 1: channel concatenation. Proportion and skeletal maps must share N, H and W.
Tensor aggregate_spatial(Tape& tape, const Tensor& proportion_map, const Tensor& skeletal_map);

// Step 1: concat(GAP(f_w), GAP(f_v)); the two maps may differ in H and W.
Tensor joint_descriptor(Tape& tape, const Tensor& f_w, const Tensor& f_v);

// Step 2: f_a = f_c W + b.
Tensor reduce(Tape& tape, const Tensor& f_c, const Tensor& weight, const Tensor& bias);

// Step 3: one sigmoid head per branch group from the shared reduced feature.
Excitation excite(Tape& tape, const Tensor& f_a, const Tensor& w_weight, const Tensor& w_bias,
                  const Tensor& v_weight, const Tensor& v_bias);

// Step 4: channel c of each map scaled by its excitation across H x W.
std::pair<Tensor, Tensor> recalibrate(Tape& tape, const Tensor& f_w, const Tensor& f_v,
                                      const Excitation& e);

// Step 5: concat(GAP(recal_w), GAP(recal_v)), [N x (C_w + C_v)].
Tensor global_feature(Tape& tape, const Tensor& recal_w, const Tensor& recal_v);

// Every intermediate of one fusion pass, for inspection and tests.
struct FusionTrace {
  Tensor f_w, f_v, f_c, f_a;
  Excitation excitation;
  Tensor recal_w, recal_v;
  Tensor global;
};

FusionTrace mff_forward(Tape& tape, const Tensor& proportion_map, const Tensor& skeletal_map,
                        const Tensor& velocity_map, const FusionParams& params);

// Weights uniform in +-1/sqrt(fan_in), bias zero.
std::pair<Tensor, Tensor> init_affine(std::size_t in, std::size_t out, Rng& rng);

}  // namespace gaitfuse
