#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaitfuse/checkpoint.hpp"
#include "gaitfuse/model.hpp"
#include "gaitfuse/skeleton.hpp"
#include "gaitfuse/training.hpp"

namespace gaitfuse {

enum class Metric { euclidean, cosine };

Metric parse_metric(std::string_view text);

/// Rank-1 accuracies. `overall` is the unweighted mean of the conditions
/// present in `by_condition`.
struct EvalReport {
  std::map<Condition, double> by_condition;
  std::map<int, std::map<Condition, double>> by_angle;
  std::map<Condition, std::size_t> probe_counts;
  double overall = 0.0;
};

struct Embedded {
  std::string subject_id;
  Condition condition = Condition::NM;
  int view_deg = 0;
  std::vector<double> feature;
};

// Mean global feature over the sequence's windows (window = stride = model window).
std::vector<double> embed_sequence(const GaitModel& model, const PoseSequence& raw);

// Embeds every sequence; `threads` > 1 spreads the work over read-only workers.
std::vector<Embedded> embed_all(const GaitModel& model, std::span<const PoseSequence> sequences,
                                std::size_t threads = 1);

double feature_distance(std::span<const double> a, std::span<const double> b, Metric metric);

/// Nearest-gallery identification. Ties go to the earliest gallery entry.
/// Throws DataError naming a probe subject that is absent from the gallery.
EvalReport rank1_from_embeddings(std::span<const Embedded> gallery, std::span<const Embedded> probe,
                                 Metric metric = Metric::euclidean);

EvalReport rank1_eval(const Checkpoint& ckpt, std::span<const PoseSequence> gallery,
                      std::span<const PoseSequence> probe, Metric metric = Metric::euclidean,
                      std::size_t threads = 1);

struct GalleryProbe {
  std::vector<PoseSequence> gallery;
  std::vector<PoseSequence> probe;
};

// Per (subject, view): the first `enrol` NM sequences by id enrol, the rest probe.
GalleryProbe split_gallery_probe(std::span<const PoseSequence> sequences, std::size_t enrol = 4);

std::string format_report_tsv(const EvalReport& report);
// Condition table followed by a per-angle table.
std::string format_report_tables(const EvalReport& report);

struct PckhScores {
  std::vector<double> per_joint;  // kNumJoints entries
  double mean = 0.0;
};

/// Fraction of persons whose joint error, divided by their head scale, is at
/// most `threshold`. Throws DataError on length mismatch or non-positive scale.
PckhScores pckh(std::span<const KeypointFrame> predicted, std::span<const KeypointFrame> truth,
                std::span<const double> head_scales, double threshold);

// Velocity; proportion+skeletal; proportion+velocity; skeletal+velocity; all three.
std::vector<BranchMask> table1_combinations();

struct AblationCell {
  double mean = 0.0;
  double spread = 0.0;  // half the max-min range over seeds
};

struct AblationRow {
  BranchMask mask;
  std::vector<EvalReport> runs;  // one per seed
  std::map<Condition, AblationCell> by_condition;
  AblationCell overall;
};

using AblationProgress = std::function<void(const BranchMask&, std::uint64_t seed, const EvalReport&)>;

/// Trains and evaluates each combination once per seed; the seed replaces
/// `config.seed`. Throws ConfigError on an empty seed list.
std::vector<AblationRow> ablation_suite(const GalleryProbe& data, const TrainConfig& config,
                                        const ArchitectureConfig& arch,
                                        std::span<const std::uint64_t> seeds,
                                        std::span<const BranchMask> masks,
                                        Metric metric = Metric::euclidean,
                                        const AblationProgress& progress = {});

std::string format_ablation_table(std::span<const AblationRow> rows);

}  // namespace gaitfuse
