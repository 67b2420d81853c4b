#pragma once

#include <filesystem>
#include <istream>
#include <string>

#include "gaitfuse/evaluation.hpp"
#include "gaitfuse/model.hpp"
#include "gaitfuse/synth.hpp"
#include "gaitfuse/train_config.hpp"
#include "gaitfuse/training.hpp"

namespace gaitfuse {

/// Settings for every subcommand, read from a sectioned key = value file:
///
///   [synth]     subjects nm_sequences bg_sequences cl_sequences frames views noise_sigma seed
///   [train]     batch_size learning_rate lr_decay dropout epochs seed window branches
///               augment mirror crop_jitter coordinate_sigma
///   [extractor] stem_channels stem_kernel stem_stride stages
///   [fusion]    reduction_ratio
///   [eval]      metric enrol
///
/// `window` is "auto" or a frame count; `stages` is "blocks x width / stride"
/// entries separated by commas, e.g. "2x16/1,2x32/2". '#' and ';' start comments.
struct CommandConfig {
  SynthConfig synth;
  TrainConfig train;
  BranchMask branches;
  ArchitectureConfig arch;
  Metric metric = Metric::euclidean;
  std::size_t enrol = 4;
};

// Throws ConfigError naming the line and the offending section or key.
void apply_config(CommandConfig& cfg, std::istream& in, const std::string& source);
CommandConfig load_command_config(const std::filesystem::path& file);

// Single "section.key=value" override, same validation as the file.
void apply_override(CommandConfig& cfg, const std::string& assignment);

std::vector<StagePlan> parse_stages(const std::string& text);

}  // namespace gaitfuse
