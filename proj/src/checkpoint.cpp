#include <cstring>
#include <fstream>
#include <sstream>

#include "frnet/nn.hpp"
#include "frnet/serialize.hpp"

namespace frnet::nn {

namespace {

struct ManifestEntry {
  std::string name;
  Shape shape;
  std::uint64_t offset;
};

struct CheckpointHeader {
  ModelConfig config;
  std::vector<ManifestEntry> manifest;
};

CheckpointHeader read_header(std::istream& is, const std::filesystem::path& path) {
  const std::string magic = io::read_bytes(is, 4, "checkpoint magic");
  if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0)
    throw FormatError(path.string() + ": not a checkpoint (bad magic)");
  const auto version = io::read_u32(is, "checkpoint version");
  if (version != kCheckpointVersion)
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  const auto config_len = io::read_u32(is, "config length");
  if (config_len > (1u << 20)) throw FormatError(path.string() + ": implausible config length");
  CheckpointHeader h;
  try {
    h.config = ModelConfig::from_text(io::read_bytes(is, config_len, "config"));
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": bad embedded config: " + e.what());
  }
  const auto count = io::read_u32(is, "parameter count");
  if (count > (1u << 20)) throw FormatError(path.string() + ": implausible parameter count");
  h.manifest.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    ManifestEntry e;
    const auto name_len = io::read_u32(is, "manifest name length");
    if (name_len > 4096) throw FormatError(path.string() + ": implausible parameter name length");
    e.name = io::read_bytes(is, name_len, "manifest name");
    const auto rank = io::read_u32(is, "manifest rank");
    if (rank == 0 || rank > 16) throw FormatError(path.string() + ": bad rank for " + e.name);
    e.shape.resize(rank);
    for (auto& d : e.shape) d = io::read_u32(is, "manifest dims");
    e.offset = io::read_u64(is, "manifest offset");
    h.manifest.push_back(std::move(e));
  }
  return h;
}

void read_values(std::istream& is, const std::filesystem::path& path,
                 const std::vector<ManifestEntry>& manifest, FrNet& model) {
  auto params = model.parameters();
  if (params.size() != manifest.size())
    throw FormatError(path.string() + ": checkpoint has " + std::to_string(manifest.size()) +
                      " tensors, model expects " + std::to_string(params.size()));
  const auto payload_start = is.tellg();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = manifest[i];
    auto* p = params[i];
    if (e.name != p->name())
      throw FormatError(path.string() + ": tensor " + std::to_string(i) + " is '" + e.name +
                        "', model expects '" + p->name() + "'");
    if (e.shape != p->value().shape())
      throw FormatError(path.string() + ": shape mismatch for " + e.name + ": checkpoint " +
                        shape_string(e.shape) + ", model " + shape_string(p->value().shape()));
    is.seekg(payload_start + static_cast<std::streamoff>(e.offset));
    if (!is) throw IntegrityError(path.string() + ": offset of " + e.name + " is past end of file");
    Tensor t;
    try {
      t = read_tensor(is);
    } catch (const Error& err) {
      throw IntegrityError(path.string() + ": record for " + e.name + ": " + err.what());
    }
    if (t.shape() != e.shape)
      throw IntegrityError(path.string() + ": record for " + e.name +
                           " disagrees with its manifest shape");
    p->value() = std::move(t);
    p->grad() = Tensor(p->value().shape());
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const FrNet& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  const std::string config = model.config().to_text();
  os.write(kCheckpointMagic, 4);
  io::write_u32(os, kCheckpointVersion);
  io::write_u32(os, static_cast<std::uint32_t>(config.size()));
  io::write_bytes(os, config);
  const auto params = model.parameters();
  io::write_u32(os, static_cast<std::uint32_t>(params.size()));
  std::uint64_t offset = 0;
  for (const auto* p : params) {
    io::write_u32(os, static_cast<std::uint32_t>(p->name().size()));
    io::write_bytes(os, p->name());
    io::write_u32(os, static_cast<std::uint32_t>(p->value().rank()));
    for (auto d : p->value().shape()) io::write_u32(os, static_cast<std::uint32_t>(d));
    io::write_u64(os, offset);
    offset += tensor_record_size(p->value().shape(), Dtype::F64);
  }
  for (const auto* p : params) write_tensor(os, p->value(), Dtype::F64);
  if (!os) throw IoError("failed writing checkpoint " + path.string());
}

ModelConfig read_checkpoint_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  return read_header(is, path).config;
}

FrNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  auto header = read_header(is, path);
  FrNet model(header.config);
  read_values(is, path, header.manifest, model);
  return model;
}

void load_checkpoint_into(const std::filesystem::path& path, FrNet& model) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  auto header = read_header(is, path);
  if (!(header.config == model.config()))
    throw FormatError(path.string() + ": checkpoint config differs from the model config");
  read_values(is, path, header.manifest, model);
}

}  // namespace frnet::nn
