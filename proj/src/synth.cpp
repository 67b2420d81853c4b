#include "gaitfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>

#include "gaitfuse/errors.hpp"
#include "gaitfuse/keypoint_io.hpp"
#include "gaitfuse/random.hpp"

namespace gaitfuse {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kViewFloor = 0.15;

struct Vec2 {
  double x;
  double y;
};

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }

// Unit vector at `angle` from straight down (image y grows downwards),
// positive angles pointing along the walking direction.
Vec2 down(double angle) { return {std::sin(angle), std::cos(angle)}; }

std::uint64_t condition_key(Condition c) { return static_cast<std::uint64_t>(c) + 1; }

std::string sequence_name(Condition c, std::size_t index, int view) {
  char buf[32];
  const char* prefix = c == Condition::NM ? "nm" : (c == Condition::BG ? "bg" : "cl");
  std::snprintf(buf, sizeof(buf), "%s-%02zu-%03d", prefix, index + 1, view);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (subjects == 0 || nm_sequences == 0 || bg_sequences == 0 || cl_sequences == 0 ||
      frames == 0 || views.empty()) {
    throw ConfigError("synthetic dataset counts must be positive");
  }
  for (int v : views) {
    if (v < 0 || v > 180) throw ConfigError("view " + std::to_string(v) + " outside [0,180]");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
}

WalkerParams sample_subject(std::uint64_t seed, std::size_t subject_index) {
  Rng rng(derive_seed({seed, 0x5u, subject_index}));
  WalkerParams p;
  p.period_frames = 16 + static_cast<std::size_t>(uniform_index(rng, 17));  // [16, 32]
  p.phase = uniform(rng, 0.0, 2.0 * kPi);
  p.stride_amplitude = uniform(rng, 0.35, 0.55);
  p.knee_amplitude = uniform(rng, 0.5, 0.9);
  p.arm_amplitude = uniform(rng, 0.2, 0.5);
  p.elbow_flex = uniform(rng, 0.1, 0.5);
  p.bounce_amplitude = uniform(rng, 0.01, 0.04);
  p.lean = uniform(rng, -0.05, 0.15);
  p.speed = uniform(rng, 0.004, 0.009);
  LimbLengths& l = p.limbs;
  l.torso = uniform(rng, 0.16, 0.22);
  l.neck = uniform(rng, 0.12, 0.2);
  l.head = uniform(rng, 0.18, 0.28);
  l.shoulder = uniform(rng, 0.05, 0.12);
  l.upper_arm = uniform(rng, 0.3, 0.42);
  l.forearm = uniform(rng, 0.25, 0.35);
  l.hip = uniform(rng, 0.04, 0.1);
  l.thigh = uniform(rng, 0.4, 0.55);
  l.shin = uniform(rng, 0.4, 0.55);
  return p;
}

double view_amplitude_factor(int view_deg) {
  const double s = std::abs(std::sin(static_cast<double>(view_deg) * kPi / 180.0));
  return std::max(s, kViewFloor);
}

PoseSequence render_sequence(const WalkerParams& params, const RenderOptions& opt,
                             std::string subject_id, std::string sequence_id) {
  if (params.period_frames < 8) throw DataError("walker period must be at least 8 frames");
  if (opt.frames < params.period_frames) {
    throw DataError("cannot render " + std::to_string(opt.frames) +
                    " frames, fewer than the period of " + std::to_string(params.period_frames));
  }
  const bool bag = opt.condition == Condition::BG;
  const bool coat = opt.condition == Condition::CL;
  const double amp = view_amplitude_factor(opt.view_deg);
  // A coat inflates the whole visible outline.
  const double s = params.limbs.torso * (coat ? 1.1 : 1.0);
  const LimbLengths& l = params.limbs;

  PoseSequence seq;
  seq.subject_id = std::move(subject_id);
  seq.sequence_id = std::move(sequence_id);
  seq.condition = opt.condition;
  seq.view_deg = opt.view_deg;
  seq.frames.resize(opt.frames);

  const Vec2 trunk{std::sin(params.lean), -std::cos(params.lean)};  // pelvis -> thorax
  const double omega = 2.0 * kPi / static_cast<double>(params.period_frames);

  for (std::size_t t = 0; t < opt.frames; ++t) {
    const double theta = omega * static_cast<double>(t) + params.phase + opt.phase_offset;
    std::array<Vec2, kNumJoints> p{};
    p[kPelvis] = {opt.origin_x + params.speed * static_cast<double>(t),
                  opt.origin_y - params.bounce_amplitude * s * std::cos(2.0 * theta)};
    p[kThorax] = p[kPelvis] + s * trunk;
    p[kUpperNeck] = p[kThorax] + (s * l.neck) * trunk;
    p[kHeadTop] = p[kUpperNeck] + (s * l.head) * trunk;
    const Vec2 shoulder = p[kThorax] + (-s * l.shoulder) * trunk;
    p[kRightShoulder] = shoulder;
    p[kLeftShoulder] = shoulder;
    const Vec2 hip = p[kPelvis] + (s * l.hip) * down(0.0);
    p[kRightHip] = hip;
    p[kLeftHip] = hip;

    for (int side = 0; side < 2; ++side) {
      const double psi = theta + side * kPi;
      const double swing = amp * params.stride_amplitude * std::sin(psi);
      const double flex = amp * params.knee_amplitude * 0.5 * (1.0 - std::cos(psi - kPi / 2.0));
      const std::size_t knee = side == 0 ? kRightKnee : kLeftKnee;
      const std::size_t ankle = side == 0 ? kRightAnkle : kLeftAnkle;
      p[knee] = hip + (s * l.thigh) * down(swing);
      p[ankle] = p[knee] + (s * l.shin) * down(swing - flex);

      // Arms swing against the leg on the same side.
      double arm = amp * params.arm_amplitude * std::sin(psi + kPi);
      double elbow_bend = params.elbow_flex + amp * 0.5 * params.arm_amplitude *
                                                  0.5 * (1.0 + std::sin(psi + kPi));
      if (bag && side == 0) {
        arm = 0.05;
        elbow_bend = 0.3;
      }
      const std::size_t elbow = side == 0 ? kRightElbow : kLeftElbow;
      const std::size_t wrist = side == 0 ? kRightWrist : kLeftWrist;
      p[elbow] = shoulder + (s * l.upper_arm) * down(arm);
      p[wrist] = p[elbow] + (s * l.forearm) * down(arm + elbow_bend);
    }

    KeypointFrame& frame = seq.frames[t];
    frame.frame_index = t;
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      frame.joints[j] = {p[j].x, p[j].y, coat ? 0.8 : 0.95};
    }
  }

  if (opt.noise_sigma > 0.0) {
    Rng rng(opt.noise_seed);
    for (auto& frame : seq.frames) {
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        double mult = 1.0;
        const bool arm_joint = j == kRightShoulder || j == kLeftShoulder || j == kRightElbow ||
                               j == kLeftElbow || j == kRightWrist || j == kLeftWrist;
        if (coat) mult = 3.0;
        else if (bag && arm_joint) mult = 2.0;
        const double sd = opt.noise_sigma * s * mult;
        frame.joints[j].x += sd * normal(rng);
        frame.joints[j].y += sd * normal(rng);
        if (bag && arm_joint) frame.joints[j].confidence = 0.85;
      }
    }
  }
  return seq;
}

SynthDataset generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  SynthDataset out;
  for (std::size_t subj = 0; subj < cfg.subjects; ++subj) {
    const WalkerParams params = sample_subject(cfg.seed, subj);
    char sid[16];
    std::snprintf(sid, sizeof(sid), "s%03zu", subj + 1);
    for (Condition cond : kAllConditions) {
      const std::size_t count = cond == Condition::NM   ? cfg.nm_sequences
                                : cond == Condition::BG ? cfg.bg_sequences
                                                        : cfg.cl_sequences;
      for (std::size_t k = 0; k < count; ++k) {
        for (int view : cfg.views) {
          const std::uint64_t sub = derive_seed({cfg.seed, subj, condition_key(cond),
                                                 static_cast<std::uint64_t>(view), k});
          Rng rng(sub);
          RenderOptions opt;
          opt.frames = cfg.frames;
          opt.view_deg = view;
          opt.condition = cond;
          opt.noise_sigma = cfg.noise_sigma;
          opt.phase_offset = uniform(rng, 0.0, 2.0 * kPi);
          opt.origin_x = uniform(rng, 0.15, 0.35);
          opt.origin_y = uniform(rng, 0.4, 0.5);
          opt.noise_seed = rng();
          const std::string seq_id = sequence_name(cond, k, view);
          out.sequences.push_back(render_sequence(params, opt, sid, seq_id));
          out.manifest.push_back({sid, seq_id, cond, view, opt.phase_offset, params});
        }
      }
    }
  }
  return out;
}

void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& manifest) {
  out << "subject_id\tsequence_id\tcondition\tview_deg\tphase_offset\tperiod_frames\tphase"
         "\tstride_amplitude\tknee_amplitude\tarm_amplitude\telbow_flex\tbounce_amplitude\tlean"
         "\tspeed\ttorso\tneck\thead\tshoulder\tupper_arm\tforearm\thip\tthigh\tshin\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "\t%.17g", v);
    out << buf;
  };
  for (const auto& e : manifest) {
    const WalkerParams& p = e.params;
    out << e.subject_id << '\t' << e.sequence_id << '\t' << to_string(e.condition) << '\t'
        << e.view_deg;
    num(e.phase_offset);
    out << '\t' << p.period_frames;
    for (double v : {p.phase, p.stride_amplitude, p.knee_amplitude, p.arm_amplitude, p.elbow_flex,
                     p.bounce_amplitude, p.lean, p.speed, p.limbs.torso, p.limbs.neck,
                     p.limbs.head, p.limbs.shoulder, p.limbs.upper_arm, p.limbs.forearm,
                     p.limbs.hip, p.limbs.thigh, p.limbs.shin}) {
      num(v);
    }
    out << '\n';
  }
}

void write_dataset(const SynthDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_sequences(dir / "keypoints.jsonl", data.sequences);
  std::ofstream man(dir / "manifest.tsv", std::ios::binary);
  if (!man) throw DataError("cannot write manifest in " + dir.string());
  write_manifest(man, data.manifest);
}

}  // namespace gaitfuse
