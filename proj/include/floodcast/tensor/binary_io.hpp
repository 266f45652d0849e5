#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "floodcast/tensor/tensor.hpp"

namespace floodcast {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(const std::string& text);

// Little-endian byte sink. Doubles are stored as their IEEE-754 bit pattern so
// a write/read cycle is bit exact.
class BinaryWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void raw(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  void string(const std::string& s);
  void tensor(const Tensor& t);

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  // Appends fnv1a64 of everything written so far.
  void seal();

 private:
  std::vector<std::uint8_t> bytes_;
};

// Bounds-checked reader; running past the end raises LoadError(Truncated).
class BinaryReader {
 public:
  explicit BinaryReader(std::span<const std::uint8_t> bytes, std::string what = "file")
      : bytes_(bytes), what_(std::move(what)) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string string();
  Tensor tensor();
  std::span<const std::uint8_t> raw(std::size_t n);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n);

  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

// Verifies the trailing checksum written by BinaryWriter::seal and returns the
// payload without it.
std::span<const std::uint8_t> verify_sealed(std::span<const std::uint8_t> bytes, const std::string& what);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace floodcast
