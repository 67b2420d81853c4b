#include "gaitfuse/mff.hpp"

#include <array>
#include <cmath>
#include <tuple>

#include "gaitfuse/errors.hpp"

namespace gaitfuse {

void FusionConfig::validate() const {
  if (spatial_channels == 0 || velocity_channels == 0 || reduction_ratio == 0) {
    throw ConfigError("fusion channel counts and reduction ratio must be positive");
  }
  if (reduced_channels() < 1) {
    throw ConfigError("reduction ratio " + std::to_string(reduction_ratio) +
                      " leaves no channels for " + std::to_string(joint_channels()) + " inputs");
  }
}

std::pair<Tensor, Tensor> init_affine(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor w({in, out});
  for (double& v : w.values()) v = uniform(rng, -bound, bound);
  return {w, Tensor({out}, 0.0)};
}

FusionParams FusionParams::create(const FusionConfig& cfg, ParameterSet& params, Rng& rng) {
  cfg.validate();
  FusionParams p;
  auto [rw, rb] = init_affine(cfg.joint_channels(), cfg.reduced_channels(), rng);
  p.reduce_weight = params.add("mff.reduce.weight", rw);
  p.reduce_bias = params.add("mff.reduce.bias", rb);
  auto [ww, wb] = init_affine(cfg.reduced_channels(), cfg.spatial_channels, rng);
  p.excite_w_weight = params.add("mff.excite_w.weight", ww);
  p.excite_w_bias = params.add("mff.excite_w.bias", wb);
  auto [vw, vb] = init_affine(cfg.reduced_channels(), cfg.velocity_channels, rng);
  p.excite_v_weight = params.add("mff.excite_v.weight", vw);
  p.excite_v_bias = params.add("mff.excite_v.bias", vb);
  return p;
}

Tensor aggregate_spatial(Tape& tape, const Tensor& proportion_map, const Tensor& skeletal_map) {
  const auto& a = proportion_map.shape();
  const auto& b = skeletal_map.shape();
  if (a.size() != 4 || b.size() != 4 || a[0] != b[0] || a[2] != b[2] || a[3] != b[3]) {
    throw ShapeError("aggregate_spatial: proportion map " + shape_string(a) +
                     " and skeletal map " + shape_string(b) + " must share N, H and W");
  }
  const std::array<Tensor, 2> parts{proportion_map, skeletal_map};
  return concat(tape, parts, 1);
}

Tensor joint_descriptor(Tape& tape, const Tensor& f_w, const Tensor& f_v) {
  if (f_w.rank() != 4 || f_v.rank() != 4 || f_w.dim(0) != f_v.dim(0)) {
    throw ShapeError("joint_descriptor: maps " + shape_string(f_w.shape()) + " and " +
                     shape_string(f_v.shape()) + " must be 4-D with equal batch");
  }
  const std::array<Tensor, 2> parts{global_avg_pool(tape, f_w), global_avg_pool(tape, f_v)};
  return concat(tape, parts, 1);
}

Tensor reduce(Tape& tape, const Tensor& f_c, const Tensor& weight, const Tensor& bias) {
  return affine(tape, f_c, weight, bias);
}

Excitation excite(Tape& tape, const Tensor& f_a, const Tensor& w_weight, const Tensor& w_bias,
                  const Tensor& v_weight, const Tensor& v_bias) {
  return {sigmoid(tape, affine(tape, f_a, w_weight, w_bias)),
          sigmoid(tape, affine(tape, f_a, v_weight, v_bias))};
}

std::pair<Tensor, Tensor> recalibrate(Tape& tape, const Tensor& f_w, const Tensor& f_v,
                                      const Excitation& e) {
  if (f_w.rank() != 4 || f_v.rank() != 4 || e.spatial.shape() != Shape{f_w.dim(0), f_w.dim(1)} ||
      e.velocity.shape() != Shape{f_v.dim(0), f_v.dim(1)}) {
    throw ShapeError("recalibrate: excitation shapes do not match the feature maps");
  }
  return {hadamard(tape, f_w, e.spatial), hadamard(tape, f_v, e.velocity)};
}

Tensor global_feature(Tape& tape, const Tensor& recal_w, const Tensor& recal_v) {
  return joint_descriptor(tape, recal_w, recal_v);
}

FusionTrace mff_forward(Tape& tape, const Tensor& proportion_map, const Tensor& skeletal_map,
                        const Tensor& velocity_map, const FusionParams& p) {
  FusionTrace tr;
  tr.f_w = aggregate_spatial(tape, proportion_map, skeletal_map);
  tr.f_v = velocity_map;
  tr.f_c = joint_descriptor(tape, tr.f_w, tr.f_v);
  tr.f_a = reduce(tape, tr.f_c, p.reduce_weight, p.reduce_bias);
  tr.excitation = excite(tape, tr.f_a, p.excite_w_weight, p.excite_w_bias, p.excite_v_weight,
                         p.excite_v_bias);
  std::tie(tr.recal_w, tr.recal_v) = recalibrate(tape, tr.f_w, tr.f_v, tr.excitation);
  tr.global = global_feature(tape, tr.recal_w, tr.recal_v);
  return tr;
}

}  // namespace gaitfuse
