#include "gaitfuse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "gaitfuse/errors.hpp"

namespace gaitfuse {

namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

AblationCell summarize(const std::vector<double>& values) {
  AblationCell cell;
  if (values.empty()) return cell;
  double sum = 0.0;
  for (double v : values) sum += v;
  cell.mean = sum / static_cast<double>(values.size());
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  cell.spread = 0.5 * (*hi - *lo);
  return cell;
}

}  // namespace

Metric parse_metric(std::string_view text) {
  if (text == "euclidean") return Metric::euclidean;
  if (text == "cosine") return Metric::cosine;
  throw ConfigError("unknown metric '" + std::string(text) + "' (expected euclidean or cosine)");
}

std::vector<double> embed_sequence(const GaitModel& model, const PoseSequence& raw) {
  const std::size_t window = model.config().window;
  const PoseSequence normalized = normalize_sequence(raw, SkeletonTopology::mpii());
  const auto bundles = sequence_windows(normalized, {window, window});
  std::vector<const BranchBundle*> ptrs;
  for (const auto& b : bundles) ptrs.push_back(&b);
  Tape tape;
  const Tensor g = model.embed(tape, make_batch(ptrs, model.config().mask));
  const std::size_t n = g.dim(0);
  const std::size_t d = g.dim(1);
  std::vector<double> mean(d, 0.0);
  const auto v = g.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) mean[k] += v[i * d + k];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  return mean;
}

std::vector<Embedded> embed_all(const GaitModel& model, std::span<const PoseSequence> sequences,
                                std::size_t threads) {
  std::vector<Embedded> out(sequences.size());
  auto work = [&](std::size_t first, std::size_t step) {
    for (std::size_t k = first; k < sequences.size(); k += step) {
      const auto& s = sequences[k];
      out[k] = {s.subject_id, s.condition, s.view_deg, embed_sequence(model, s)};
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, sequences.size()));
  if (threads == 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        work(t, threads);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

double feature_distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (a.size() != b.size()) throw ShapeError("feature dimensions differ");
  if (metric == Metric::euclidean) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  return denom > 0.0 ? 1.0 - dot / denom : 1.0;
}

EvalReport rank1_from_embeddings(std::span<const Embedded> gallery, std::span<const Embedded> probe,
                                 Metric metric) {
  if (gallery.empty()) throw DataError("empty gallery");
  std::set<std::string> enrolled;
  for (const auto& g : gallery) enrolled.insert(g.subject_id);
  for (const auto& p : probe) {
    if (!enrolled.contains(p.subject_id)) {
      throw DataError("probe subject " + p.subject_id + " is absent from the gallery");
    }
  }

  std::map<Condition, std::pair<std::size_t, std::size_t>> cond;  // hits, total
  std::map<int, std::map<Condition, std::pair<std::size_t, std::size_t>>> angle;
  for (const auto& p : probe) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      const double d = feature_distance(p.feature, gallery[g].feature, metric);
      if (d < best_d) {
        best_d = d;
        best = g;
      }
    }
    const std::size_t hit = gallery[best].subject_id == p.subject_id ? 1 : 0;
    auto& c = cond[p.condition];
    c.first += hit;
    ++c.second;
    auto& a = angle[p.view_deg][p.condition];
    a.first += hit;
    ++a.second;
  }

  EvalReport report;
  double sum = 0.0;
  for (const auto& [c, ht] : cond) {
    const double acc = static_cast<double>(ht.first) / static_cast<double>(ht.second);
    report.by_condition[c] = acc;
    report.probe_counts[c] = ht.second;
    sum += acc;
  }
  for (const auto& [view, row] : angle) {
    for (const auto& [c, ht] : row) {
      report.by_angle[view][c] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
    }
  }
  report.overall = cond.empty() ? 0.0 : sum / static_cast<double>(cond.size());
  return report;
}

EvalReport rank1_eval(const Checkpoint& ckpt, std::span<const PoseSequence> gallery,
                      std::span<const PoseSequence> probe, Metric metric, std::size_t threads) {
  std::set<std::string> enrolled;
  for (const auto& g : gallery) enrolled.insert(g.subject_id);
  for (const auto& p : probe) {
    if (!enrolled.contains(p.subject_id)) {
      throw DataError("probe subject " + p.subject_id + " is absent from the gallery");
    }
  }
  const GaitModel model = restore_model(ckpt);
  const auto g = embed_all(model, gallery, threads);
  const auto p = embed_all(model, probe, threads);
  return rank1_from_embeddings(g, p, metric);
}

GalleryProbe split_gallery_probe(std::span<const PoseSequence> sequences, std::size_t enrol) {
  std::vector<const PoseSequence*> sorted;
  for (const auto& s : sequences) sorted.push_back(&s);
  std::stable_sort(sorted.begin(), sorted.end(), [](const PoseSequence* a, const PoseSequence* b) {
    return std::tie(a->subject_id, a->view_deg, a->sequence_id) <
           std::tie(b->subject_id, b->view_deg, b->sequence_id);
  });
  GalleryProbe out;
  std::map<std::pair<std::string, int>, std::size_t> taken;
  for (const PoseSequence* s : sorted) {
    auto& n = taken[{s->subject_id, s->view_deg}];
    if (s->condition == Condition::NM && n < enrol) {
      ++n;
      out.gallery.push_back(*s);
    } else {
      out.probe.push_back(*s);
    }
  }
  return out;
}

std::string format_report_tsv(const EvalReport& report) {
  std::ostringstream out;
  out << "scope\tview\tcondition\trank1\n";
  for (const auto& [c, acc] : report.by_condition) {
    out << "condition\t*\t" << to_string(c) << '\t' << fixed(acc, 6) << '\n';
  }
  for (const auto& [view, row] : report.by_angle) {
    for (const auto& [c, acc] : row) {
      out << "angle\t" << view << '\t' << to_string(c) << '\t' << fixed(acc, 6) << '\n';
    }
  }
  out << "overall\t*\t*\t" << fixed(report.overall, 6) << '\n';
  return out.str();
}

std::string format_report_tables(const EvalReport& report) {
  std::ostringstream out;
  out << "Rank-1 accuracy (%)\n";
  out << "| Condition | NM | BG | CL | Overall |\n|---|---|---|---|---|\n| all views |";
  for (Condition c : kAllConditions) {
    const auto it = report.by_condition.find(c);
    out << ' ' << (it == report.by_condition.end() ? std::string("-") : percent(it->second)) << " |";
  }
  out << ' ' << percent(report.overall) << " |\n\n";
  out << "Rank-1 accuracy by view (%)\n| View |";
  for (Condition c : kAllConditions) out << ' ' << to_string(c) << " |";
  out << "\n|---|---|---|---|\n";
  for (const auto& [view, row] : report.by_angle) {
    out << "| " << view << " |";
    for (Condition c : kAllConditions) {
      const auto it = row.find(c);
      out << ' ' << (it == row.end() ? std::string("-") : percent(it->second)) << " |";
    }
    out << '\n';
  }
  return out.str();
}

PckhScores pckh(std::span<const KeypointFrame> predicted, std::span<const KeypointFrame> truth,
                std::span<const double> head_scales, double threshold) {
  if (predicted.size() != truth.size() || predicted.size() != head_scales.size()) {
    throw DataError("pckh: predicted, truth and head scales must have equal lengths");
  }
  if (predicted.empty()) throw DataError("pckh: no persons");
  for (std::size_t m = 0; m < head_scales.size(); ++m) {
    if (!(head_scales[m] > 0.0)) {
      throw DataError("pckh: head scale of person " + std::to_string(m) + " is not positive");
    }
  }
  PckhScores s;
  s.per_joint.assign(kNumJoints, 0.0);
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    std::size_t hits = 0;
    for (std::size_t m = 0; m < predicted.size(); ++m) {
      const Joint& p = predicted[m].joints[i];
      const Joint& t = truth[m].joints[i];
      const double d = std::hypot(p.x - t.x, p.y - t.y);
      if (d / head_scales[m] <= threshold) ++hits;
    }
    s.per_joint[i] = static_cast<double>(hits) / static_cast<double>(predicted.size());
  }
  double sum = 0.0;
  for (double v : s.per_joint) sum += v;
  s.mean = sum / static_cast<double>(kNumJoints);
  return s;
}

std::vector<BranchMask> table1_combinations() {
  return {{false, true, false}, {true, false, true}, {true, true, false}, {false, true, true},
          {true, true, true}};
}

std::vector<AblationRow> ablation_suite(const GalleryProbe& data, const TrainConfig& config,
                                        const ArchitectureConfig& arch,
                                        std::span<const std::uint64_t> seeds,
                                        std::span<const BranchMask> masks, Metric metric,
                                        const AblationProgress& progress) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  if (masks.empty()) throw ConfigError("ablation needs at least one branch combination");
  std::vector<AblationRow> rows;
  for (const BranchMask& mask : masks) {
    AblationRow row;
    row.mask = mask;
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = config;
      cfg.seed = seed;
      const TrainResult trained = train(data.gallery, cfg, mask, arch);
      row.runs.push_back(rank1_eval(trained.checkpoint, data.gallery, data.probe, metric));
      if (progress) progress(mask, seed, row.runs.back());
    }
    std::map<Condition, std::vector<double>> cells;
    std::vector<double> overall;
    for (const auto& r : row.runs) {
      for (const auto& [c, acc] : r.by_condition) cells[c].push_back(acc);
      overall.push_back(r.overall);
    }
    for (const auto& [c, values] : cells) row.by_condition[c] = summarize(values);
    row.overall = summarize(overall);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation_table(std::span<const AblationRow> rows) {
  std::ostringstream out;
  out << "| Proportion | Velocity | Skeletal | NM | BG | CL | Overall |\n"
      << "|---|---|---|---|---|---|---|\n";
  auto cell = [](const AblationCell& c) { return percent(c.mean) + " ± " + percent(c.spread); };
  for (const auto& row : rows) {
    out << "| " << (row.mask.proportion ? "x" : " ") << " | " << (row.mask.velocity ? "x" : " ")
        << " | " << (row.mask.skeletal ? "x" : " ") << " |";
    for (Condition c : kAllConditions) {
      const auto it = row.by_condition.find(c);
      out << ' ' << (it == row.by_condition.end() ? std::string("-") : cell(it->second)) << " |";
    }
    out << ' ' << cell(row.overall) << " |\n";
  }
  return out.str();
}

}  // namespace gaitfuse
