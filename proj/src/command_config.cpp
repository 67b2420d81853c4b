#include "gaitfuse/command_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "gaitfuse/errors.hpp"

namespace gaitfuse {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t to_count(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects an unsigned integer, got '" + v + "'");
  }
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void assign(CommandConfig& cfg, const std::string& section, const std::string& key,
            const std::string& v) {
  const std::string full = section + "." + key;
  SynthConfig& s = cfg.synth;
  TrainConfig& t = cfg.train;
  ExtractorConfig& e = cfg.arch.extractor;
  if (section == "synth") {
    if (key == "subjects") return void(s.subjects = to_count(full, v));
    if (key == "nm_sequences") return void(s.nm_sequences = to_count(full, v));
    if (key == "bg_sequences") return void(s.bg_sequences = to_count(full, v));
    if (key == "cl_sequences") return void(s.cl_sequences = to_count(full, v));
    if (key == "frames") return void(s.frames = to_count(full, v));
    if (key == "noise_sigma") return void(s.noise_sigma = to_real(full, v));
    if (key == "seed") return void(s.seed = to_u64(full, v));
    if (key == "views") {
      s.views.clear();
      for (const auto& item : split(v, ',')) s.views.push_back(static_cast<int>(to_count(full, item)));
      return;
    }
  } else if (section == "train") {
    if (key == "batch_size") return void(t.batch_size = to_count(full, v));
    if (key == "learning_rate") return void(t.learning_rate = to_real(full, v));
    if (key == "lr_decay") return void(t.lr_decay = to_real(full, v));
    if (key == "dropout") return void(t.dropout_rate = to_real(full, v));
    if (key == "epochs") return void(t.epochs = to_count(full, v));
    if (key == "seed") return void(t.seed = to_u64(full, v));
    if (key == "augment") return void(t.augment.enabled = to_bool(full, v));
    if (key == "mirror") return void(t.augment.mirror = to_bool(full, v));
    if (key == "crop_jitter") return void(t.augment.crop_jitter = to_count(full, v));
    if (key == "coordinate_sigma") return void(t.augment.coordinate_sigma = to_real(full, v));
    if (key == "branches") return void(cfg.branches = BranchMask::parse(v));
    if (key == "window") {
      if (v == "auto") {
        t.window.automatic = true;
      } else {
        t.window.automatic = false;
        t.window.frames = to_count(full, v);
      }
      return;
    }
  } else if (section == "extractor") {
    if (key == "stem_channels") return void(e.stem_channels = to_count(full, v));
    if (key == "stem_kernel") return void(e.stem_kernel = to_count(full, v));
    if (key == "stem_stride") return void(e.stem_stride = to_count(full, v));
    if (key == "stages") return void(e.stages = parse_stages(v));
  } else if (section == "fusion") {
    if (key == "reduction_ratio") return void(cfg.arch.reduction_ratio = to_count(full, v));
  } else if (section == "eval") {
    if (key == "metric") return void(cfg.metric = parse_metric(v));
    if (key == "enrol") return void(cfg.enrol = to_count(full, v));
  } else {
    throw ConfigError("unknown section [" + section + "]");
  }
  throw ConfigError("unknown key '" + full + "'");
}

}  // namespace

std::vector<StagePlan> parse_stages(const std::string& text) {
  std::vector<StagePlan> stages;
  for (const auto& item : split(text, ',')) {
    const auto x = item.find('x');
    const auto slash = item.find('/');
    if (x == std::string::npos || slash == std::string::npos || slash < x) {
      throw ConfigError("stage '" + item + "' is not of the form BLOCKSxWIDTH/STRIDE");
    }
    stages.push_back({to_count("extractor.stages", trim(item.substr(0, x))),
                      to_count("extractor.stages", trim(item.substr(x + 1, slash - x - 1))),
                      to_count("extractor.stages", trim(item.substr(slash + 1)))});
  }
  if (stages.empty()) throw ConfigError("extractor.stages is empty");
  return stages;
}

void apply_config(CommandConfig& cfg, std::istream& in, const std::string& source) {
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section != "synth" && section != "train" && section != "extractor" &&
            section != "fusion" && section != "eval") {
          throw ConfigError("unknown section [" + section + "]");
        }
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key = value");
      if (section.empty()) throw ConfigError("key outside of a section");
      assign(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& err) {
      throw ConfigError(where + err.what());
    } catch (const DataError& err) {
      throw ConfigError(where + err.what());
    }
  }
}

CommandConfig load_command_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open config " + file.string());
  CommandConfig cfg;
  apply_config(cfg, in, file.string());
  return cfg;
}

void apply_override(CommandConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  }
  assign(cfg, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
         trim(assignment.substr(eq + 1)));
}

}  // namespace gaitfuse
