#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "frnet/tensor.hpp"

namespace frnet {

// Tensor record layout, all integers little-endian:
//   "FRTN" | version u32 | rank u32 | dims u32 x rank | dtype u8 | row-major payload
inline constexpr char kTensorMagic[4] = {'F', 'R', 'T', 'N'};
inline constexpr std::uint32_t kTensorVersion = 1;

enum class Dtype : std::uint8_t { F64 = 0, F32 = 1 };

/// Serialized byte length of a record for `shape` and `dtype`.
std::size_t tensor_record_size(const Shape& shape, Dtype dtype);

void write_tensor(std::ostream& os, const Tensor& t, Dtype dtype = Dtype::F64);

/// Throws FormatError on bad magic/version/dtype and IntegrityError on a short payload.
Tensor read_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const Tensor& t, Dtype dtype = Dtype::F64);
Tensor load_tensor(const std::filesystem::path& path);

namespace io {

void write_u8(std::ostream& os, std::uint8_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_bytes(std::ostream& os, const std::string& s);

std::uint8_t read_u8(std::istream& is, const char* what);
std::uint32_t read_u32(std::istream& is, const char* what);
std::uint64_t read_u64(std::istream& is, const char* what);
std::string read_bytes(std::istream& is, std::size_t n, const char* what);

}  // namespace io

}  // namespace frnet
