#include "gaitfuse/keypoint_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <utility>

#include <json.hpp>

#include "gaitfuse/errors.hpp"

namespace gaitfuse {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& why) {
  throw DataError(source + ":" + std::to_string(line) + ": " + why);
}

template <typename T>
T required(const json& obj, const char* key, const std::string& source, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(source, line, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(source, line, std::string("field '") + key + "' has the wrong type");
  }
}

struct Pending {
  PoseSequence seq;
  std::map<std::size_t, std::size_t> first_line;  // frame_idx -> line
};

}  // namespace

std::vector<PoseSequence> parse_sequences(std::istream& in, const std::string& source) {
  std::map<std::pair<std::string, std::string>, Pending> groups;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;

    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(source, line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) fail(source, line, "expected a JSON object");

    const auto subject = required<std::string>(obj, "subject_id", source, line);
    const auto sequence = required<std::string>(obj, "sequence_id", source, line);
    const auto cond_text = required<std::string>(obj, "condition", source, line);
    const auto view = required<long long>(obj, "view_deg", source, line);
    const auto frame_idx = required<long long>(obj, "frame_idx", source, line);
    if (frame_idx < 0) fail(source, line, "negative frame_idx");
    if (view < 0 || view > 180) fail(source, line, "view_deg outside [0,180]");

    Condition cond;
    try {
      cond = parse_condition(cond_text);
    } catch (const DataError& e) {
      fail(source, line, e.what());
    }

    auto jt = obj.find("joints");
    if (jt == obj.end() || !jt->is_array()) fail(source, line, "missing 'joints' array");
    if (jt->size() != kNumJoints) {
      fail(source, line, "expected 16 joints, found " + std::to_string(jt->size()));
    }
    KeypointFrame frame;
    frame.frame_index = static_cast<std::size_t>(frame_idx);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      const json& triple = (*jt)[j];
      if (!triple.is_array() || triple.size() != 3 || !triple[0].is_number() ||
          !triple[1].is_number() || !triple[2].is_number()) {
        fail(source, line, "joint " + std::to_string(j) + " is not a [x, y, confidence] triple");
      }
      Joint& joint = frame.joints[j];
      joint.x = triple[0].get<double>();
      joint.y = triple[1].get<double>();
      joint.confidence = triple[2].get<double>();
      if (!std::isfinite(joint.x) || !std::isfinite(joint.y)) {
        fail(source, line, "joint " + std::to_string(j) + " has a non-finite coordinate");
      }
      if (!(joint.confidence >= 0.0 && joint.confidence <= 1.0)) {
        fail(source, line, "joint " + std::to_string(j) + " confidence outside [0,1]");
      }
    }

    auto [it, inserted] = groups.try_emplace({subject, sequence});
    Pending& p = it->second;
    if (inserted) {
      p.seq.subject_id = subject;
      p.seq.sequence_id = sequence;
      p.seq.condition = cond;
      p.seq.view_deg = static_cast<int>(view);
    } else if (p.seq.condition != cond || p.seq.view_deg != view) {
      fail(source, line, "condition/view disagree with earlier lines of sequence " + sequence);
    }
    auto [prev, fresh] = p.first_line.emplace(frame.frame_index, line);
    if (!fresh) {
      fail(source, line, "duplicate frame_idx " + std::to_string(frame.frame_index) +
                             " (first seen on line " + std::to_string(prev->second) + ")");
    }
    p.seq.frames.push_back(frame);
  }

  std::vector<PoseSequence> out;
  out.reserve(groups.size());
  for (auto& [key, p] : groups) {
    auto& frames = p.seq.frames;
    std::sort(frames.begin(), frames.end(),
              [](const KeypointFrame& a, const KeypointFrame& b) {
                return a.frame_index < b.frame_index;
              });
    try {
      validate_sequence(p.seq);
    } catch (const DataError& e) {
      throw DataError(source + ": " + e.what());
    }
    out.push_back(std::move(p.seq));
  }
  return out;
}

std::vector<PoseSequence> load_sequences(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(path)) {
    files.push_back(path);
  } else {
    throw DataError("keypoint file not found: " + path.string());
  }

  std::vector<PoseSequence> all;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open keypoint file: " + file.string());
    auto part = parse_sequences(in, file.string());
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  std::stable_sort(all.begin(), all.end(), [](const PoseSequence& a, const PoseSequence& b) {
    return std::tie(a.subject_id, a.sequence_id) < std::tie(b.subject_id, b.sequence_id);
  });
  for (std::size_t k = 1; k < all.size(); ++k) {
    if (all[k].subject_id == all[k - 1].subject_id &&
        all[k].sequence_id == all[k - 1].sequence_id) {
      throw DataError("sequence " + all[k].subject_id + "/" + all[k].sequence_id +
                      " is split across several files");
    }
  }
  return all;
}

void write_sequences(std::ostream& out, std::span<const PoseSequence> sequences) {
  for (const auto& seq : sequences) {
    for (const auto& frame : seq.frames) {
      ordered_json obj;
      obj["subject_id"] = seq.subject_id;
      obj["sequence_id"] = seq.sequence_id;
      obj["condition"] = std::string(to_string(seq.condition));
      obj["view_deg"] = seq.view_deg;
      obj["frame_idx"] = frame.frame_index;
      ordered_json joints = ordered_json::array();
      for (const auto& j : frame.joints) {
        joints.push_back(ordered_json::array({j.x, j.y, j.confidence}));
      }
      obj["joints"] = std::move(joints);
      out << obj.dump() << '\n';
    }
  }
}

void write_sequences(const std::filesystem::path& file, std::span<const PoseSequence> sequences) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write keypoint file: " + file.string());
  write_sequences(out, sequences);
  if (!out) throw DataError("write failed: " + file.string());
}

}  // namespace gaitfuse
