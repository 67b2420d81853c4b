#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gaitfuse/model.hpp"
#include "gaitfuse/tensor.hpp"
#include "gaitfuse/train_config.hpp"

namespace gaitfuse {

inline constexpr char kContainerMagic[4] = {'G', 'M', 'F', 'F'};
inline constexpr std::uint32_t kContainerVersion = 1;

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<float> data;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Little-endian tensor container:
///   "GMFF" | version u32 | count u32 |
///   per tensor: name_len u16, name bytes, rank u8, dims u32 x rank, float32 payload.
/// Throws DataError on duplicate names.
void write_container(std::ostream& out, std::span<const NamedTensor> tensors);
// Throws DataError on bad magic/version, truncation or duplicate names.
std::vector<NamedTensor> read_container(std::istream& in);

void write_container(const std::filesystem::path& file, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_container(const std::filesystem::path& file);

NamedTensor to_named(const std::string& name, const Tensor& t);

/// Model parameters plus the configuration needed to rebuild the model.
/// Metadata travels as `meta.*` tensors inside the container.
struct Checkpoint {
  std::vector<NamedTensor> parameters;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::vector<double> loss_history;
  TrainConfig train;
  ModelConfig model;
};

std::vector<NamedTensor> to_container(const Checkpoint& ckpt);
Checkpoint from_container(std::span<const NamedTensor> tensors);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

// Snapshot of the model's current parameters (rounded to float32).
std::vector<NamedTensor> snapshot_parameters(const ParameterSet& params);

// Rebuilds a model and copies the stored parameter values into it.
GaitModel restore_model(const Checkpoint& ckpt);

}  // namespace gaitfuse
