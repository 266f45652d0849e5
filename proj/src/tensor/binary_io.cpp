#include "floodcast/tensor/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "floodcast/errors.hpp"

namespace floodcast {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& text) {
  return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void BinaryWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void BinaryWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::string(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void BinaryWriter::tensor(const Tensor& t) {
  u32(static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) u64(d);
  for (double v : t.data()) f64(v);
}

void BinaryWriter::seal() { u64(fnv1a64(bytes_)); }

void BinaryReader::need(std::size_t n) {
  if (remaining() < n) {
    throw LoadError(LoadError::Kind::Truncated, what_ + ": truncated at byte " + std::to_string(pos_) + " (needed " +
                                                    std::to_string(n) + " more)");
  }
}

std::uint8_t BinaryReader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t BinaryReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t BinaryReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::string() {
  const std::uint32_t n = u32();
  need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::span<const std::uint8_t> BinaryReader::raw(std::size_t n) {
  need(n);
  auto s = bytes_.subspan(pos_, n);
  pos_ += n;
  return s;
}

Tensor BinaryReader::tensor() {
  const std::uint32_t rank = u32();
  if (rank == 0 || rank > 8) {
    throw LoadError(LoadError::Kind::ShapeInconsistent, what_ + ": implausible tensor rank " + std::to_string(rank));
  }
  Shape shape(rank);
  std::size_t n = 1;
  for (auto& d : shape) {
    d = u64();
    if (d == 0 || d > (std::size_t{1} << 40)) {
      throw LoadError(LoadError::Kind::ShapeInconsistent, what_ + ": implausible tensor extent " + std::to_string(d));
    }
    n *= d;
  }
  need(n * 8);
  std::vector<double> data(n);
  for (auto& v : data) v = f64();
  return Tensor(std::move(shape), std::move(data));
}

std::span<const std::uint8_t> verify_sealed(std::span<const std::uint8_t> bytes, const std::string& what) {
  if (bytes.size() < 8) throw LoadError(LoadError::Kind::Truncated, what + ": too short to hold a checksum");
  const auto payload = bytes.first(bytes.size() - 8);
  BinaryReader tail(bytes.last(8), what);
  if (tail.u64() != fnv1a64(payload)) {
    throw LoadError(LoadError::Kind::ChecksumMismatch, what + ": checksum mismatch (file corrupt)");
  }
  return payload;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace floodcast
