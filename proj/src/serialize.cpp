#include "frnet/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace frnet {

namespace io {

namespace {

template <typename T>
void write_le(std::ostream& os, T v) {
  std::array<char, sizeof(T)> buf;
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf.data(), buf.size());
}

template <typename T>
T read_le(std::istream& is, const char* what) {
  std::array<unsigned char, sizeof(T)> buf;
  is.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (is.gcount() != static_cast<std::streamsize>(buf.size()))
    throw IntegrityError(std::string("truncated input while reading ") + what);
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u8(std::ostream& os, std::uint8_t v) { write_le(os, v); }
void write_u32(std::ostream& os, std::uint32_t v) { write_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { write_le(os, v); }
void write_bytes(std::ostream& os, const std::string& s) {
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint8_t read_u8(std::istream& is, const char* what) { return read_le<std::uint8_t>(is, what); }
std::uint32_t read_u32(std::istream& is, const char* what) {
  return read_le<std::uint32_t>(is, what);
}
std::uint64_t read_u64(std::istream& is, const char* what) {
  return read_le<std::uint64_t>(is, what);
}
std::string read_bytes(std::istream& is, std::size_t n, const char* what) {
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (is.gcount() != static_cast<std::streamsize>(n))
    throw IntegrityError(std::string("truncated input while reading ") + what);
  return s;
}

}  // namespace io

std::size_t tensor_record_size(const Shape& shape, Dtype dtype) {
  const std::size_t elem = dtype == Dtype::F64 ? 8 : 4;
  return 4 + 4 + 4 + 4 * shape.size() + 1 + elem * shape_numel(shape);
}

void write_tensor(std::ostream& os, const Tensor& t, Dtype dtype) {
  static_assert(std::endian::native == std::endian::little, "payload written in host order");
  os.write(kTensorMagic, 4);
  io::write_u32(os, kTensorVersion);
  io::write_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) io::write_u32(os, static_cast<std::uint32_t>(d));
  io::write_u8(os, static_cast<std::uint8_t>(dtype));
  if (dtype == Dtype::F64) {
    if constexpr (std::is_same_v<real_t, double>) {
      os.write(reinterpret_cast<const char*>(t.data()),
               static_cast<std::streamsize>(t.size() * sizeof(double)));
    } else {
      Eigen::ArrayXd wide = t.array().template cast<double>();
      os.write(reinterpret_cast<const char*>(wide.data()),
               static_cast<std::streamsize>(wide.size() * sizeof(double)));
    }
  } else {
    Eigen::ArrayXf narrow = t.array().template cast<float>();
    os.write(reinterpret_cast<const char*>(narrow.data()),
             static_cast<std::streamsize>(narrow.size() * sizeof(float)));
  }
  if (!os) throw IoError("failed writing tensor record");
}

Tensor read_tensor(std::istream& is) {
  const std::string magic = io::read_bytes(is, 4, "tensor magic");
  if (std::memcmp(magic.data(), kTensorMagic, 4) != 0)
    throw FormatError("bad tensor magic (expected FRTN)");
  const auto version = io::read_u32(is, "tensor version");
  if (version != kTensorVersion)
    throw FormatError("unsupported tensor version " + std::to_string(version));
  const auto rank = io::read_u32(is, "tensor rank");
  if (rank == 0 || rank > 16) throw FormatError("implausible tensor rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) {
    d = io::read_u32(is, "tensor dims");
    if (d == 0) throw FormatError("zero dimension in tensor header");
  }
  const auto dtype = io::read_u8(is, "tensor dtype");
  if (dtype > 1) throw FormatError("unknown tensor dtype " + std::to_string(dtype));
  const std::size_t n = shape_numel(shape);
  Tensor out(shape);
  if (dtype == 0) {
    Eigen::ArrayXd wide(static_cast<Eigen::Index>(n));
    is.read(reinterpret_cast<char*>(wide.data()), static_cast<std::streamsize>(n * 8));
    if (is.gcount() != static_cast<std::streamsize>(n * 8))
      throw IntegrityError("truncated tensor payload: expected " + std::to_string(n * 8) +
                           " bytes, got " + std::to_string(is.gcount()));
    out.array() = wide.cast<real_t>();
  } else {
    Eigen::ArrayXf narrow(static_cast<Eigen::Index>(n));
    is.read(reinterpret_cast<char*>(narrow.data()), static_cast<std::streamsize>(n * 4));
    if (is.gcount() != static_cast<std::streamsize>(n * 4))
      throw IntegrityError("truncated tensor payload: expected " + std::to_string(n * 4) +
                           " bytes, got " + std::to_string(is.gcount()));
    out.array() = narrow.cast<real_t>();
  }
  return out;
}

void save_tensor(const std::filesystem::path& path, const Tensor& t, Dtype dtype) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_tensor(os, t, dtype);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return read_tensor(is);
  } catch (const IntegrityError& e) {
    throw IntegrityError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace frnet
