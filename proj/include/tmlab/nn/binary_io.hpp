#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "tmlab/nn/mlp.hpp"
#include "tmlab/nn/optim.hpp"

namespace tmlab::nn {

// Little-endian primitive writer. All multi-byte values are written
// byte-by-byte so the file layout does not depend on the host.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void bytes(const void* data, std::size_t n);
  void string(const std::string& s);
  void tag(const std::array<char, 4>& t) { bytes(t.data(), 4); }

 private:
  std::ostream& out_;
};

// Reader counterpart; any short read raises CorruptionError.
class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  void bytes(void* data, std::size_t n);
  std::string string();
  std::array<char, 4> tag();

 private:
  std::istream& in_;
};

// Layer dims, activations, then every parameter as little-endian f64 in the
// canonical flat order.
void write_mlp(BinaryWriter& w, const Mlp& net);
Mlp read_mlp(BinaryReader& r);

void write_adam(BinaryWriter& w, const AdamState& s);
// `net` supplies the expected moment layout.
AdamState read_adam(BinaryReader& r, const Mlp& net);

}  // namespace tmlab::nn
