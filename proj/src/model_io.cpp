#include "exmo/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace exmo {
namespace fs = std::filesystem;

namespace {

class Writer {
 public:
  template <typename U>
  void put(U v) {
    static_assert(std::is_unsigned_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void put_f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  float get_f32(const char* what) { return std::bit_cast<float>(get<std::uint32_t>(what)); }
  double get_f64(const char* what) { return std::bit_cast<double>(get<std::uint64_t>(what)); }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("model file truncated while reading ") + what, pos_);
    }
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(crc, bytes.data(), static_cast<uInt>(bytes.size())));
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model& model) {
  Writer w;
  w.raw(kModelMagic, sizeof kModelMagic);
  w.put(kModelFormatVersion);
  const NetworkConfig& c = model.config;
  w.put(static_cast<std::uint32_t>(c.base_channels));
  w.put(static_cast<std::uint32_t>(c.input_frames));
  w.put(static_cast<std::uint32_t>(c.input_size));
  w.put(static_cast<std::uint64_t>(c.seed));
  const TrainingMetadata& m = model.metadata;
  w.put(m.epochs_seen);
  w.put(m.steps_seen);
  w.put(static_cast<std::uint64_t>(m.loss_history.size()));
  for (double l : m.loss_history) w.put_f64(l);
  w.put(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    for (int e : layer.weights.shape()) w.put(static_cast<std::uint32_t>(e));
    for (float v : layer.weights.values()) w.put_f32(v);
    for (float v : layer.bias.values()) w.put_f32(v);
  }
  const std::uint32_t crc = crc32_of(w.bytes());
  w.put(crc);
  return std::move(w.bytes());
}

Model deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(sizeof kModelMagic, "magic");
  if (std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0) throw FormatError("bad magic, not an EXMO model", 0);
  for (std::size_t i = 0; i < sizeof kModelMagic; ++i) r.get<std::uint8_t>("magic");
  const std::size_t version_at = r.pos();
  const auto version = r.get<std::uint16_t>("format version");
  if (version != kModelFormatVersion) {
    throw UnsupportedVersionError("unsupported model format version " + std::to_string(version) + " (expected " +
                                      std::to_string(kModelFormatVersion) + ")",
                                  version_at);
  }

  Model model;
  const std::size_t config_at = r.pos();
  model.config.base_channels = static_cast<int>(r.get<std::uint32_t>("base_channels"));
  model.config.input_frames = static_cast<int>(r.get<std::uint32_t>("input_frames"));
  model.config.input_size = static_cast<int>(r.get<std::uint32_t>("input_size"));
  model.config.seed = r.get<std::uint64_t>("seed");
  try {
    model.config.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("invalid network config: ") + e.what(), config_at);
  }

  model.metadata.epochs_seen = r.get<std::uint32_t>("epochs_seen");
  model.metadata.steps_seen = r.get<std::uint64_t>("steps_seen");
  const auto n_losses = r.get<std::uint64_t>("loss count");
  if (n_losses > r.remaining() / sizeof(double)) throw FormatError("model file truncated in loss history", r.pos());
  model.metadata.loss_history.reserve(n_losses);
  for (std::uint64_t i = 0; i < n_losses; ++i) model.metadata.loss_history.push_back(r.get_f64("loss history"));

  const Model reference = build<float>(model.config);
  const std::size_t count_at = r.pos();
  const auto n_layers = r.get<std::uint32_t>("layer count");
  if (n_layers != reference.layers.size()) {
    throw FormatError("expected " + std::to_string(reference.layers.size()) + " layers, file has " +
                          std::to_string(n_layers),
                      count_at);
  }
  for (const auto& ref : reference.layers) {
    const std::size_t header_at = r.pos();
    Shape shape(4);
    for (int& e : shape) e = static_cast<int>(r.get<std::uint32_t>("layer shape"));
    if (shape != ref.weights.shape()) {
      throw FormatError("layer shape " + shape_string(shape) + " does not match architecture " +
                            shape_string(ref.weights.shape()),
                        header_at);
    }
    auto bank = FilterBank<float>::zeros(shape[0], shape[1]);
    r.need((bank.weights.size() + bank.bias.size()) * sizeof(float), "layer weights");
    for (float& v : bank.weights.values()) v = r.get_f32("weights");
    for (float& v : bank.bias.values()) v = r.get_f32("bias");
    model.layers.push_back(std::move(bank));
  }

  const std::size_t payload_end = r.pos();
  const auto stored_crc = r.get<std::uint32_t>("CRC-32");
  if (r.remaining() != 0) throw FormatError("trailing bytes after CRC-32", r.pos());
  if (crc32_of(bytes.first(payload_end)) != stored_crc) throw FormatError("CRC-32 mismatch", payload_end);
  return model;
}

void save_model(const Model& model, const fs::path& path) {
  const auto bytes = serialize_model(model);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

Model load_model(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path.string(), 0);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace exmo
