#include "floodcast/nn/serialize.hpp"

#include <algorithm>

#include "floodcast/errors.hpp"
#include "floodcast/tensor/binary_io.hpp"

namespace floodcast {

namespace {

constexpr char kModelMagic[8] = {'F', 'C', 'M', 'O', 'D', 'E', 'L', '1'};

struct Block {
  std::string name;
  Tensor* tensor;
};

// Every tensor stored in a model file, in file order.
std::vector<Block> blocks(ModelParams& p) {
  std::vector<Block> out;
  const auto names = parameter_names(p);
  const auto tensors = parameter_tensors(p);
  for (std::size_t i = 0; i < tensors.size(); ++i) out.push_back({names[i], tensors[i]});
  for (std::size_t i = 0; i < p.fcn.size(); ++i) {
    out.push_back({"fcn." + std::to_string(i) + ".bn_running_mean", &p.fcn[i].bn.running_mean});
    out.push_back({"fcn." + std::to_string(i) + ".bn_running_var", &p.fcn[i].bn.running_var});
  }
  out.push_back({"scaler.shift", &p.scaler.shift});
  out.push_back({"scaler.scale", &p.scaler.scale});
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const SavedModel& model) {
  model.config.validate();
  check_params(model.config, model.params);
  ModelParams copy = model.params;
  BinaryWriter w;
  w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kModelMagic), sizeof kModelMagic));
  w.u32(kModelFormatVersion);
  w.string(model.config.to_text());
  w.f64(model.threshold);
  w.u64(model.trained_epochs);
  const auto bs = blocks(copy);
  w.u32(static_cast<std::uint32_t>(bs.size()));
  for (const auto& b : bs) {
    w.string(b.name);
    w.tensor(*b.tensor);
  }
  w.seal();
  return w.bytes();
}

SavedModel decode_model(std::span<const std::uint8_t> bytes, const std::string& what) {
  BinaryReader head(bytes, what);
  const auto m = head.raw(sizeof kModelMagic);
  if (!std::equal(m.begin(), m.end(), reinterpret_cast<const std::uint8_t*>(kModelMagic))) {
    throw LoadError(LoadError::Kind::BadMagic, what + ": not a model file");
  }
  const auto version = head.u32();
  if (version != kModelFormatVersion) {
    throw LoadError(LoadError::Kind::VersionMismatch, what + ": model format version " + std::to_string(version) +
                                                          ", expected " + std::to_string(kModelFormatVersion));
  }
  if (bytes.size() < head.position() + 8) throw LoadError(LoadError::Kind::Truncated, what + ": truncated");
  BinaryReader r(bytes.first(bytes.size() - 8), what);
  r.raw(head.position());

  SavedModel out;
  try {
    out.config = ModelConfig::from_text(r.string());
    out.config.validate();
  } catch (const ConfigError& e) {
    throw LoadError(LoadError::Kind::ShapeInconsistent, what + ": bad config block: " + e.what());
  }
  out.threshold = r.f64();
  out.trained_epochs = r.u64();

  // Expected layout from the configuration; stored blocks must match it exactly.
  RngState layout_rng(0);
  out.params = init_model(out.config, layout_rng);
  auto expected = blocks(out.params);
  const std::uint32_t n = r.u32();
  if (n != expected.size()) {
    throw LoadError(LoadError::Kind::ShapeInconsistent, what + ": expected " + std::to_string(expected.size()) +
                                                            " tensor blocks, found " + std::to_string(n));
  }
  for (auto& b : expected) {
    const std::string name = r.string();
    if (name != b.name) {
      throw LoadError(LoadError::Kind::ShapeInconsistent, what + ": expected block " + b.name + ", found " + name);
    }
    Tensor t = r.tensor();
    if (t.shape() != b.tensor->shape()) {
      throw LoadError(LoadError::Kind::ShapeInconsistent, what + ": block " + name + " has shape " +
                                                              shape_string(t.shape()) + ", expected " +
                                                              shape_string(b.tensor->shape()));
    }
    *b.tensor = std::move(t);
  }
  if (r.remaining() != 0) throw LoadError(LoadError::Kind::ShapeInconsistent, what + ": trailing bytes");
  verify_sealed(bytes, what);
  for (double v : out.params.scaler.scale.data())
    if (!(v > 0.0)) throw LoadError(LoadError::Kind::ShapeInconsistent, what + ": non-positive scaler entry");
  return out;
}

void save_model(const SavedModel& model, const std::string& path) { write_file_bytes(path, encode_model(model)); }

SavedModel load_model(const std::string& path) { return decode_model(read_file_bytes(path), path); }

}  // namespace floodcast
