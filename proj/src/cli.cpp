#include "gaitfuse/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "gaitfuse/checkpoint.hpp"
#include "gaitfuse/command_config.hpp"
#include "gaitfuse/cycle.hpp"
#include "gaitfuse/errors.hpp"
#include "gaitfuse/evaluation.hpp"
#include "gaitfuse/keypoint_io.hpp"
#include "gaitfuse/synth.hpp"
#include "gaitfuse/training.hpp"

namespace fs = std::filesystem;

namespace gaitfuse {

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string data;
  std::string out;
  std::string ckpt;
  std::string gallery;
  std::string probe;
  std::string tsv;
  std::string seeds;
  std::string branches;
  std::string metric;
  std::string window;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t threads = 1;
};

CommandConfig resolve_config(const Options& o) {
  CommandConfig cfg = o.config.empty() ? CommandConfig{} : load_command_config(o.config);
  for (const auto& item : o.overrides) apply_override(cfg, item);
  if (!o.branches.empty()) cfg.branches = BranchMask::parse(o.branches);
  if (!o.metric.empty()) cfg.metric = parse_metric(o.metric);
  if (o.epochs > 0) cfg.train.epochs = o.epochs;
  if (o.seed_set) {
    cfg.train.seed = o.seed;
    cfg.synth.seed = o.seed;
  }
  if (!o.window.empty()) apply_override(cfg, "train.window=" + o.window);
  return cfg;
}

// A synth output root holds gallery/ and probe/; any other directory is split.
GalleryProbe load_split(const fs::path& dir, std::size_t enrol) {
  if (fs::is_directory(dir / "gallery") && fs::is_directory(dir / "probe")) {
    return {load_sequences(dir / "gallery"), load_sequences(dir / "probe")};
  }
  const auto all = load_sequences(dir);
  return split_gallery_probe(all, enrol);
}

std::vector<PoseSequence> load_training(const fs::path& dir) {
  if (fs::is_directory(dir / "gallery")) return load_sequences(dir / "gallery");
  return load_sequences(dir);
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const CommandConfig cfg = resolve_config(o);
  const SynthDataset data = generate_dataset(cfg.synth);
  const GalleryProbe split = split_gallery_probe(data.sequences, cfg.enrol);
  const fs::path root(o.out);
  fs::create_directories(root / "gallery");
  fs::create_directories(root / "probe");
  write_sequences(root / "gallery" / "keypoints.jsonl", split.gallery);
  write_sequences(root / "probe" / "keypoints.jsonl", split.probe);
  std::ofstream manifest(root / "manifest.tsv");
  if (!manifest) throw DataError("cannot write " + (root / "manifest.tsv").string());
  write_manifest(manifest, data.manifest);
  out << "wrote " << data.sequences.size() << " sequences (" << split.gallery.size()
      << " gallery, " << split.probe.size() << " probe) to " << root.string() << '\n';
  return kExitOk;
}

int cmd_cycles(const Options& o, std::ostream& out) {
  const auto sequences = load_sequences(o.data);
  const auto& topo = SkeletonTopology::mpii();
  out << "subject\tsequence\tcondition\tview\tframes\thalf_cycle\tfull_cycle\ttroughs\n";
  for (const auto& s : sequences) {
    out << s.subject_id << '\t' << s.sequence_id << '\t' << to_string(s.condition) << '\t'
        << s.view_deg << '\t' << s.length() << '\t';
    try {
      const auto est = estimate_cycle(s, topo);
      out << est.half_cycle_frames << '\t' << est.full_cycle_frames << '\t';
      for (std::size_t k = 0; k < est.trough_indices.size(); ++k) {
        out << (k ? "," : "") << est.trough_indices[k];
      }
      out << '\n';
    } catch (const NoPeriodicityError&) {
      out << "-\t-\tnone\n";
    }
  }
  return kExitOk;
}

int cmd_featurize(const Options& o, std::ostream& out) {
  const CommandConfig cfg = resolve_config(o);
  const auto sequences = load_sequences(o.data);
  const WindowPlan plan = plan_windows(sequences, cfg.train.window);
  const auto& topo = SkeletonTopology::mpii();
  std::vector<NamedTensor> tensors;
  auto push = [&](const std::string& name, const GaitTensor& g) {
    NamedTensor t{name, {g.channels, g.frames, g.joints}, {}};
    t.data.assign(g.data.begin(), g.data.end());
    tensors.push_back(std::move(t));
  };
  std::size_t windows = 0;
  for (const auto& s : sequences) {
    const PoseSequence norm = normalize_sequence(s, topo);
    for (std::size_t start : window_starts(norm.length(), plan)) {
      const BranchBundle b = build_bundle(to_gait_tensor(norm, start, plan.window), topo);
      const std::string key = s.subject_id + "/" + s.sequence_id + "/" + std::to_string(start);
      push(key + "/proportion", b.proportion.data);
      push(key + "/velocity", b.velocity.data);
      push(key + "/skeletal", b.skeletal.data);
      ++windows;
    }
  }
  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_container(dir / "features.gmff", tensors);
  out << "window " << plan.window << " stride " << plan.stride << ": " << windows
      << " windows from " << sequences.size() << " sequences -> "
      << (dir / "features.gmff").string() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const CommandConfig cfg = resolve_config(o);
  const auto sequences = load_training(o.data);
  const TrainResult result =
      train(sequences, cfg.train, cfg.branches, cfg.arch, [&](std::size_t epoch, double loss) {
        out << "epoch " << epoch << " loss " << format_real(loss) << '\n';
      });
  const fs::path ckpt(o.ckpt);
  ensure_parent(ckpt);
  save_checkpoint(result.checkpoint, ckpt);
  fs::path history = ckpt;
  history += ".loss.tsv";
  std::ofstream h(history);
  if (!h) throw DataError("cannot write " + history.string());
  h << "epoch\tloss\n";
  for (std::size_t e = 0; e < result.checkpoint.loss_history.size(); ++e) {
    h << e + 1 << '\t' << format_real(result.checkpoint.loss_history[e]) << '\n';
  }
  out << "saved epoch " << result.checkpoint.epoch << " (loss "
      << format_real(result.checkpoint.train_loss) << ") to " << ckpt.string() << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const CommandConfig cfg = resolve_config(o);
  const Checkpoint ckpt = load_checkpoint(o.ckpt);
  const auto gallery = load_sequences(o.gallery);
  const auto probe = load_sequences(o.probe);
  const EvalReport report = rank1_eval(ckpt, gallery, probe, cfg.metric, o.threads);
  out << format_report_tables(report);
  if (!o.tsv.empty()) {
    ensure_parent(o.tsv);
    std::ofstream t(o.tsv);
    if (!t) throw DataError("cannot write " + o.tsv);
    t << format_report_tsv(report);
  }
  return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  const CommandConfig cfg = resolve_config(o);
  std::vector<std::uint64_t> seeds;
  std::istringstream in(o.seeds);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--seeds: '" + item + "' is not an unsigned integer");
    }
  }
  const GalleryProbe data = load_split(o.data, cfg.enrol);
  const auto masks = table1_combinations();
  const auto rows = ablation_suite(data, cfg.train, cfg.arch, seeds, masks, cfg.metric,
                                   [&](const BranchMask& m, std::uint64_t seed, const EvalReport& r) {
                                     out << m.label() << " seed " << seed << " overall "
                                         << format_real(r.overall) << '\n';
                                   });
  out << format_ablation_table(rows);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skeleton-based gait recognition with multi-branch feature fusion"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Options o;
  bool version = false;
  app.add_flag("--version", version, "Print program and file format versions");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Sectioned key = value configuration file");
    sub->add_option("--set", o.overrides, "Override a config entry, section.key=value")
        ->take_all();
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic walker dataset");
  add_common(synth);
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--seed", o.seed, "Dataset seed")->each([&](const std::string&) { o.seed_set = true; });

  auto* cycles = app.add_subcommand("cycles", "Detect gait cycles per sequence");
  cycles->add_option("--data", o.data, "Keypoint file or directory")->required();

  auto* featurize = app.add_subcommand("featurize", "Write branch tensors for every window");
  add_common(featurize);
  featurize->add_option("--data", o.data, "Keypoint file or directory")->required();
  featurize->add_option("--out", o.out, "Output directory")->required();
  featurize->add_option("--window", o.window, "auto or a frame count");

  auto* trainer = app.add_subcommand("train", "Train the fusion network");
  add_common(trainer);
  trainer->add_option("--data", o.data, "Training keypoints (a synth root uses gallery/)")->required();
  trainer->add_option("--out", o.ckpt, "Checkpoint file")->required();
  trainer->add_option("--epochs", o.epochs, "Override train.epochs");
  trainer->add_option("--seed", o.seed, "Override train.seed")->each([&](const std::string&) { o.seed_set = true; });
  trainer->add_option("--branches", o.branches, "Active branches, e.g. velocity+skeletal");
  trainer->add_option("--window", o.window, "auto or a frame count");

  auto* evaluate = app.add_subcommand("eval", "Rank-1 identification report");
  add_common(evaluate);
  evaluate->add_option("--ckpt", o.ckpt, "Checkpoint file")->required();
  evaluate->add_option("--gallery", o.gallery, "Gallery keypoints")->required();
  evaluate->add_option("--probe", o.probe, "Probe keypoints")->required();
  evaluate->add_option("--metric", o.metric, "euclidean or cosine");
  evaluate->add_option("--tsv", o.tsv, "Also write the report as tab-separated text");

  auto* ablate = app.add_subcommand("ablate", "Branch ablation over several seeds");
  add_common(ablate);
  ablate->add_option("--data", o.data, "Synth root or keypoint directory")->required();
  ablate->add_option("--seeds", o.seeds, "Comma-separated training seeds")->required();
  ablate->add_option("--epochs", o.epochs, "Override train.epochs");
  ablate->add_option("--metric", o.metric, "euclidean or cosine");

  app.add_option("--threads", o.threads, "Evaluation embedding workers")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (version) {
    out << "gaitfuse " << kVersion << "\nkeypoint format " << kKeypointFormatVersion
        << "\ncheckpoint container GMFF " << kContainerVersion << '\n';
    return kExitOk;
  }

  try {
    if (synth->parsed()) return cmd_synth(o, out);
    if (cycles->parsed()) return cmd_cycles(o, out);
    if (featurize->parsed()) return cmd_featurize(o, out);
    if (trainer->parsed()) return cmd_train(o, out);
    if (evaluate->parsed()) return cmd_eval(o, out);
    if (ablate->parsed()) return cmd_ablate(o, out);
    err << "error: a subcommand is required\n" << app.help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace gaitfuse
