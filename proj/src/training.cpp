#include "gaitfuse/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "gaitfuse/cycle.hpp"
#include "gaitfuse/errors.hpp"
#include "gaitfuse/random.hpp"

namespace gaitfuse {

namespace {

constexpr std::uint64_t kSaltInit = 0x11;
constexpr std::uint64_t kSaltLoop = 0x22;

struct TrainItem {
  std::size_t sequence;
  std::size_t start;
  std::size_t label;
};

PoseSequence jitter_coordinates(PoseSequence seq, double sigma, Rng& rng) {
  for (auto& f : seq.frames) {
    for (auto& j : f.joints) {
      j.x += sigma * normal(rng);
      j.y += sigma * normal(rng);
    }
  }
  return seq;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(lr_decay >= 0.0)) throw ConfigError("lr_decay must be non-negative");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (!window.automatic && window.frames < kVelocityLag + 2) {
    throw ConfigError("fixed window must be at least 8 frames");
  }
  if (!(augment.coordinate_sigma >= 0.0)) throw ConfigError("augmentation sigma must be non-negative");
}

WindowPlan plan_windows(std::span<const PoseSequence> sequences, const WindowPolicy& policy) {
  if (sequences.empty()) throw DataError("no sequences to plan windows for");
  std::size_t shortest = std::numeric_limits<std::size_t>::max();
  for (const auto& s : sequences) shortest = std::min(shortest, s.length());

  std::size_t frames = policy.frames;
  if (policy.automatic) {
    std::vector<GaitCycleEstimate> estimates;
    const auto& topo = SkeletonTopology::mpii();
    for (const auto& s : sequences) {
      try {
        estimates.push_back(estimate_cycle(s, topo));
      } catch (const NoPeriodicityError&) {
        // falls back below
      }
    }
    frames = estimates.empty() ? kFallbackStride : temporal_stride(estimates);
    frames = std::min(frames, shortest);
  }
  if (frames < kVelocityLag + 2) {
    throw DataError("window of " + std::to_string(frames) + " frames is too short (minimum 8)");
  }
  return {frames, frames};
}

std::vector<std::size_t> window_starts(std::size_t length, const WindowPlan& plan) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + plan.window <= length; s += plan.stride) starts.push_back(s);
  return starts;
}

std::vector<BranchBundle> sequence_windows(const PoseSequence& normalized, const WindowPlan& plan) {
  std::vector<BranchBundle> out;
  for (std::size_t start : window_starts(normalized.length(), plan)) {
    out.push_back(build_bundle(to_gait_tensor(normalized, start, plan.window),
                               SkeletonTopology::mpii()));
  }
  if (out.empty()) {
    throw DataError("sequence " + normalized.subject_id + "/" + normalized.sequence_id + " has " +
                    std::to_string(normalized.length()) + " frames, shorter than the " +
                    std::to_string(plan.window) + "-frame window");
  }
  return out;
}

PoseSequence mirror_sequence(const PoseSequence& seq) {
  static constexpr std::array<std::size_t, kNumJoints> swap{
      kLeftAnkle,  kLeftKnee,   kLeftHip,     kRightHip,     kRightKnee,    kRightAnkle,
      kPelvis,     kThorax,     kUpperNeck,   kHeadTop,      kLeftWrist,    kLeftElbow,
      kLeftShoulder, kRightShoulder, kRightElbow, kRightWrist};
  PoseSequence out = seq;
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      Joint joint = seq.frames[f].joints[swap[j]];
      joint.x = -joint.x;
      out.frames[f].joints[j] = joint;
    }
  }
  return out;
}

TrainResult train(std::span<const PoseSequence> dataset, const TrainConfig& cfg,
                  const BranchMask& mask, const ArchitectureConfig& arch,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  std::set<std::string> subject_set;
  for (const auto& s : dataset) subject_set.insert(s.subject_id);
  if (subject_set.size() < 2) {
    throw DataError("insufficient data: training needs at least 2 subjects, got " +
                    std::to_string(subject_set.size()));
  }
  TrainResult result;
  result.subjects.assign(subject_set.begin(), subject_set.end());
  std::map<std::string, std::size_t> label_of;
  for (std::size_t k = 0; k < result.subjects.size(); ++k) label_of[result.subjects[k]] = k;

  const WindowPlan plan = plan_windows(dataset, cfg.window);
  const auto& topo = SkeletonTopology::mpii();
  std::vector<PoseSequence> normalized;
  normalized.reserve(dataset.size());
  for (const auto& s : dataset) {
    if (s.length() < plan.window) {
      throw DataError("sequence " + s.subject_id + "/" + s.sequence_id + " has " +
                      std::to_string(s.length()) + " frames, shorter than the " +
                      std::to_string(plan.window) + "-frame window");
    }
    normalized.push_back(normalize_sequence(s, topo));
  }

  std::vector<TrainItem> items;
  for (std::size_t q = 0; q < normalized.size(); ++q) {
    for (std::size_t start : window_starts(normalized[q].length(), plan)) {
      items.push_back({q, start, label_of.at(normalized[q].subject_id)});
    }
  }

  // Without augmentation every window is fixed, so build bundles once.
  std::vector<BranchBundle> cached;
  if (!cfg.augment.enabled) {
    cached.reserve(items.size());
    for (const auto& it : items) {
      cached.push_back(build_bundle(to_gait_tensor(normalized[it.sequence], it.start, plan.window), topo));
    }
  }

  ModelConfig mcfg;
  mcfg.extractor = arch.extractor;
  mcfg.reduction_ratio = arch.reduction_ratio;
  mcfg.num_classes = result.subjects.size();
  mcfg.window = plan.window;
  mcfg.dropout = cfg.dropout_rate;
  mcfg.mask = mask;
  GaitModel model(mcfg, derive_seed({cfg.seed, kSaltInit}));
  Adam adam(model.parameters());
  Rng rng(derive_seed({cfg.seed, kSaltLoop}));

  Checkpoint& best = result.checkpoint;
  best.train = cfg;
  best.model = mcfg;
  double best_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(items.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = decayed_learning_rate(cfg.learning_rate, cfg.lr_decay, epoch);
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t step = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size, ++step) {
      const std::size_t last = std::min(order.size(), first + cfg.batch_size);
      std::vector<BranchBundle> fresh;
      std::vector<const BranchBundle*> windows;
      std::vector<std::size_t> labels;
      fresh.reserve(last - first);
      for (std::size_t k = first; k < last; ++k) {
        const TrainItem& it = items[order[k]];
        labels.push_back(it.label);
        if (!cfg.augment.enabled) {
          windows.push_back(&cached[order[k]]);
          continue;
        }
        const PoseSequence& src = normalized[it.sequence];
        const std::size_t slack = src.length() - it.start - plan.window;
        const std::size_t reach = std::min<std::size_t>(cfg.augment.crop_jitter, 2 * cfg.augment.crop_jitter);
        std::size_t start = it.start;
        const std::size_t lo = it.start >= reach ? it.start - reach : 0;
        const std::size_t hi = it.start + std::min(reach, slack);
        start = lo + static_cast<std::size_t>(uniform_index(rng, hi - lo + 1));
        PoseSequence view = src;
        if (cfg.augment.mirror && uniform01(rng) < 0.5) view = mirror_sequence(view);
        if (cfg.augment.coordinate_sigma > 0.0) {
          view = jitter_coordinates(std::move(view), cfg.augment.coordinate_sigma, rng);
        }
        fresh.push_back(build_bundle(to_gait_tensor(view, start, plan.window), topo));
        windows.push_back(&fresh.back());
      }

      const BranchBatch batch = make_batch(windows, mask);
      Tape tape;
      const auto out = model.forward(tape, batch, true, rng);
      const Tensor loss = softmax_cross_entropy(tape, out.logits, labels);
      if (!std::isfinite(loss.item())) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", step " +
                             std::to_string(step + 1));
      }
      model.parameters().zero_grad();
      backward(loss, tape);
      adam.step(lr);
      loss_sum += loss.item() * static_cast<double>(last - first);
    }
    const double epoch_loss = loss_sum / static_cast<double>(order.size());
    best.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch + 1, epoch_loss);
    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      best.parameters = snapshot_parameters(model.parameters());
      best.epoch = epoch + 1;
      best.train_loss = epoch_loss;
    }
  }
  return result;
}

}  // namespace gaitfuse
