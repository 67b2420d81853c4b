#include "gaitfuse/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "gaitfuse/errors.hpp"

namespace gaitfuse {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T take(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw DataError(std::string("truncated container while reading ") + what);
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

NamedTensor meta(const std::string& name, std::vector<double> values, Shape shape = {}) {
  if (shape.empty()) shape = {values.size()};
  NamedTensor t{name, std::move(shape), {}};
  t.data.reserve(values.size());
  for (double v : values) t.data.push_back(static_cast<float>(v));
  return t;
}

const NamedTensor& need(std::span<const NamedTensor> tensors, const std::string& name,
                        std::size_t min_size) {
  for (const auto& t : tensors) {
    if (t.name == name) {
      if (t.data.size() < min_size) throw DataError("checkpoint entry '" + name + "' is too short");
      return t;
    }
  }
  throw DataError("checkpoint is missing '" + name + "'");
}

std::size_t as_count(float v) { return static_cast<std::size_t>(v); }

// Reals stored as four 16-bit chunks of their bit pattern so configs survive float32 storage.
void push_exact(std::vector<double>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int k = 3; k >= 0; --k) out.push_back(static_cast<double>((bits >> (16 * k)) & 0xFFFF));
}

double read_exact(const float* chunks) {
  std::uint64_t bits = 0;
  for (int k = 0; k < 4; ++k) bits = (bits << 16) | static_cast<std::uint64_t>(chunks[k]);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_container(std::ostream& out, std::span<const NamedTensor> tensors) {
  std::set<std::string> seen;
  for (const auto& t : tensors) {
    if (!seen.insert(t.name).second) throw DataError("duplicate tensor name '" + t.name + "'");
    if (t.name.size() > 0xFFFF) throw DataError("tensor name too long: " + t.name);
    if (t.shape.size() > 0xFF) throw DataError("tensor rank too large: " + t.name);
    if (shape_numel(t.shape) != t.data.size()) {
      throw DataError("tensor '" + t.name + "' payload does not match its shape");
    }
  }
  out.write(kContainerMagic, 4);
  put<std::uint32_t>(out, kContainerVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
    for (std::size_t d : t.shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float v : t.data) put<float>(out, v);
  }
}

std::vector<NamedTensor> read_container(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw DataError("truncated container: missing magic bytes");
  if (!std::equal(magic, magic + 4, kContainerMagic)) {
    throw DataError("not a GMFF container (bad magic bytes); unsupported format version");
  }
  const auto version = take<std::uint32_t>(in, "version");
  if (version != kContainerVersion) {
    throw DataError("unsupported container version " + std::to_string(version) + " (expected " +
                    std::to_string(kContainerVersion) + ")");
  }
  const auto count = take<std::uint32_t>(in, "tensor count");
  std::vector<NamedTensor> tensors;
  std::set<std::string> seen;
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    const auto len = take<std::uint16_t>(in, "name length");
    t.name.resize(len);
    if (len > 0 && !in.read(t.name.data(), len)) throw DataError("truncated container in tensor name");
    if (!seen.insert(t.name).second) throw DataError("duplicate tensor name '" + t.name + "'");
    const auto rank = take<std::uint8_t>(in, "rank");
    for (std::uint8_t d = 0; d < rank; ++d) t.shape.push_back(take<std::uint32_t>(in, "dims"));
    const std::size_t n = shape_numel(t.shape);
    t.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.data[i] = take<float>(in, "payload");
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void write_container(const std::filesystem::path& file, std::span<const NamedTensor> tensors) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  write_container(out, tensors);
  if (!out) throw DataError("write failed: " + file.string());
}

std::vector<NamedTensor> read_container(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open " + file.string());
  return read_container(in);
}

NamedTensor to_named(const std::string& name, const Tensor& t) {
  NamedTensor out{name, t.shape(), {}};
  out.data.reserve(t.numel());
  for (double v : t.values()) out.data.push_back(static_cast<float>(v));
  return out;
}

std::vector<NamedTensor> snapshot_parameters(const ParameterSet& params) {
  std::vector<NamedTensor> out;
  for (const auto& p : params.items()) out.push_back(to_named(p.name, p.tensor));
  return out;
}

std::vector<NamedTensor> to_container(const Checkpoint& ckpt) {
  std::vector<NamedTensor> out = ckpt.parameters;
  for (const auto& t : out) {
    if (t.name.starts_with("meta.")) throw DataError("parameter name uses reserved prefix: " + t.name);
  }
  const TrainConfig& tc = ckpt.train;
  const ModelConfig& mc = ckpt.model;
  out.push_back(meta("meta.epoch", {static_cast<double>(ckpt.epoch)}));
  out.push_back(meta("meta.train_loss", {ckpt.train_loss}));
  if (!ckpt.loss_history.empty()) out.push_back(meta("meta.loss_history", ckpt.loss_history));
  std::vector<double> train{static_cast<double>(tc.batch_size), static_cast<double>(tc.epochs),
                            tc.window.automatic ? 1.0 : 0.0, static_cast<double>(tc.window.frames),
                            tc.augment.enabled ? 1.0 : 0.0, tc.augment.mirror ? 1.0 : 0.0,
                            static_cast<double>(tc.augment.crop_jitter)};
  for (double v : {tc.learning_rate, tc.lr_decay, tc.dropout_rate, tc.augment.coordinate_sigma}) {
    push_exact(train, v);
  }
  out.push_back(meta("meta.train", train));
  std::vector<double> seed;
  for (int k = 3; k >= 0; --k) seed.push_back(static_cast<double>((tc.seed >> (16 * k)) & 0xFFFF));
  out.push_back(meta("meta.seed", seed));
  out.push_back(meta("meta.model",
                     {static_cast<double>(mc.reduction_ratio), static_cast<double>(mc.num_classes),
                      static_cast<double>(mc.window), mc.mask.proportion ? 1.0 : 0.0,
                      mc.mask.velocity ? 1.0 : 0.0, mc.mask.skeletal ? 1.0 : 0.0}));
  std::vector<double> model_dropout;
  push_exact(model_dropout, mc.dropout);
  out.push_back(meta("meta.model.dropout", model_dropout));
  const ExtractorConfig& ec = mc.extractor;
  out.push_back(meta("meta.extractor", {static_cast<double>(ec.stem_channels),
                                        static_cast<double>(ec.stem_kernel),
                                        static_cast<double>(ec.stem_stride)}));
  std::vector<double> stages;
  for (const auto& s : ec.stages) {
    stages.push_back(static_cast<double>(s.blocks));
    stages.push_back(static_cast<double>(s.width));
    stages.push_back(static_cast<double>(s.stride));
  }
  out.push_back(meta("meta.extractor.stages", stages, {ec.stages.size(), 3}));
  return out;
}

Checkpoint from_container(std::span<const NamedTensor> tensors) {
  Checkpoint ck;
  for (const auto& t : tensors) {
    if (!t.name.starts_with("meta.")) ck.parameters.push_back(t);
  }
  ck.epoch = as_count(need(tensors, "meta.epoch", 1).data[0]);
  ck.train_loss = need(tensors, "meta.train_loss", 1).data[0];
  for (const auto& t : tensors) {
    if (t.name == "meta.loss_history") ck.loss_history.assign(t.data.begin(), t.data.end());
  }
  const auto& tr = need(tensors, "meta.train", 23).data;
  ck.train.batch_size = as_count(tr[0]);
  ck.train.epochs = as_count(tr[1]);
  ck.train.window.automatic = tr[2] != 0.0f;
  ck.train.window.frames = as_count(tr[3]);
  ck.train.augment.enabled = tr[4] != 0.0f;
  ck.train.augment.mirror = tr[5] != 0.0f;
  ck.train.augment.crop_jitter = as_count(tr[6]);
  ck.train.learning_rate = read_exact(&tr[7]);
  ck.train.lr_decay = read_exact(&tr[11]);
  ck.train.dropout_rate = read_exact(&tr[15]);
  ck.train.augment.coordinate_sigma = read_exact(&tr[19]);
  const auto& sd = need(tensors, "meta.seed", 4).data;
  ck.train.seed = 0;
  for (int k = 0; k < 4; ++k) ck.train.seed = (ck.train.seed << 16) | static_cast<std::uint64_t>(sd[k]);
  const auto& md = need(tensors, "meta.model", 6).data;
  ck.model.reduction_ratio = as_count(md[0]);
  ck.model.num_classes = as_count(md[1]);
  ck.model.window = as_count(md[2]);
  ck.model.mask = {md[3] != 0.0f, md[4] != 0.0f, md[5] != 0.0f};
  ck.model.dropout = read_exact(need(tensors, "meta.model.dropout", 4).data.data());
  const auto& ex = need(tensors, "meta.extractor", 3).data;
  ck.model.extractor.stem_channels = as_count(ex[0]);
  ck.model.extractor.stem_kernel = as_count(ex[1]);
  ck.model.extractor.stem_stride = as_count(ex[2]);
  const auto& st = need(tensors, "meta.extractor.stages", 3);
  if (st.shape.size() != 2 || st.shape[1] != 3) throw DataError("malformed meta.extractor.stages");
  ck.model.extractor.stages.clear();
  for (std::size_t s = 0; s < st.shape[0]; ++s) {
    ck.model.extractor.stages.push_back(
        {as_count(st.data[3 * s]), as_count(st.data[3 * s + 1]), as_count(st.data[3 * s + 2])});
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file) {
  write_container(file, to_container(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  return from_container(read_container(file));
}

GaitModel restore_model(const Checkpoint& ckpt) {
  GaitModel model(ckpt.model, 0);
  const auto& params = model.parameters();
  if (params.size() != ckpt.parameters.size()) {
    throw DataError("checkpoint holds " + std::to_string(ckpt.parameters.size()) +
                    " parameters, model expects " + std::to_string(params.size()));
  }
  for (const auto& stored : ckpt.parameters) {
    const Parameter* p = params.find(stored.name);
    if (p == nullptr) throw DataError("checkpoint parameter '" + stored.name + "' is unknown");
    if (p->tensor.shape() != stored.shape) {
      throw DataError("checkpoint parameter '" + stored.name + "' has shape " +
                      shape_string(stored.shape) + ", expected " +
                      shape_string(p->tensor.shape()));
    }
    Tensor t = p->tensor;
    std::copy(stored.data.begin(), stored.data.end(), t.values().begin());
  }
  return model;
}

}  // namespace gaitfuse
