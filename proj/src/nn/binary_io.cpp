#include "tmlab/nn/binary_io.hpp"

#include <bit>

#include "tmlab/errors.hpp"

namespace tmlab::nn {
namespace {

constexpr std::uint32_t kMaxLayers = 64;
constexpr std::uint32_t kMaxLayerWidth = 1u << 20;
constexpr std::uint32_t kMaxStringLength = 1u << 24;

void write_gradients(BinaryWriter& w, const Gradients& g) {
  w.u64(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) w.f64(g.flat(i));
}

void read_gradients_into(BinaryReader& r, Gradients& g) {
  const std::uint64_t n = r.u64();
  if (n != g.size()) throw FormatError("optimizer moment size does not match network");
  for (auto& l : g.layers) {
    for (Eigen::Index row = 0; row < l.weight.rows(); ++row) {
      for (Eigen::Index col = 0; col < l.weight.cols(); ++col) l.weight(row, col) = r.f64();
    }
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) l.bias(k) = r.f64();
  }
}

Activation to_activation(std::uint8_t v) {
  if (v > static_cast<std::uint8_t>(Activation::kSigmoid)) {
    throw FormatError("unknown activation code " + std::to_string(v));
  }
  return static_cast<Activation>(v);
}

}  // namespace

void BinaryWriter::u8(std::uint8_t v) { bytes(&v, 1); }

void BinaryWriter::u32(std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  bytes(b, 4);
}

void BinaryWriter::u64(std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  bytes(b, 8);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::bytes(const void* data, std::size_t n) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out_) throw IoError("write failed");
}

void BinaryWriter::string(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s.data(), s.size());
}

std::uint8_t BinaryReader::u8() {
  std::uint8_t v = 0;
  bytes(&v, 1);
  return v;
}

std::uint32_t BinaryReader::u32() {
  unsigned char b[4];
  bytes(b, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t BinaryReader::u64() {
  unsigned char b[8];
  bytes(b, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

void BinaryReader::bytes(void* data, std::size_t n) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) throw CorruptionError("unexpected end of file");
}

std::string BinaryReader::string() {
  const std::uint32_t n = u32();
  if (n > kMaxStringLength) throw CorruptionError("string length out of range");
  std::string s(n, '\0');
  bytes(s.data(), n);
  return s;
}

std::array<char, 4> BinaryReader::tag() {
  std::array<char, 4> t{};
  bytes(t.data(), 4);
  return t;
}

void write_mlp(BinaryWriter& w, const Mlp& net) {
  w.u32(static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (int s : net.layer_sizes()) w.u32(static_cast<std::uint32_t>(s));
  w.u8(static_cast<std::uint8_t>(net.hidden_activation()));
  w.u8(static_cast<std::uint8_t>(net.output_activation()));
  for (std::size_t i = 0; i < net.parameter_count(); ++i) w.f64(net.parameter(i));
}

Mlp read_mlp(BinaryReader& r) {
  const std::uint32_t count = r.u32();
  if (count < 2 || count > kMaxLayers) throw CorruptionError("network layer count out of range");
  std::vector<int> sizes(count);
  for (auto& s : sizes) {
    const std::uint32_t v = r.u32();
    if (v == 0 || v > kMaxLayerWidth) throw CorruptionError("network layer width out of range");
    s = static_cast<int>(v);
  }
  const Activation hidden = to_activation(r.u8());
  const Activation output = to_activation(r.u8());
  Mlp net(std::move(sizes), hidden, output);
  for (auto& l : net.layers()) {
    for (Eigen::Index row = 0; row < l.weight.rows(); ++row) {
      for (Eigen::Index col = 0; col < l.weight.cols(); ++col) l.weight(row, col) = r.f64();
    }
    for (Eigen::Index k = 0; k < l.bias.size(); ++k) l.bias(k) = r.f64();
  }
  return net;
}

void write_adam(BinaryWriter& w, const AdamState& s) {
  w.f64(s.config.learning_rate);
  w.f64(s.config.beta1);
  w.f64(s.config.beta2);
  w.f64(s.config.epsilon);
  w.u64(s.step);
  write_gradients(w, s.first);
  write_gradients(w, s.second);
}

AdamState read_adam(BinaryReader& r, const Mlp& net) {
  AdamConfig c;
  c.learning_rate = r.f64();
  c.beta1 = r.f64();
  c.beta2 = r.f64();
  c.epsilon = r.f64();
  AdamState s = AdamState::for_net(net, c);
  s.step = r.u64();
  read_gradients_into(r, s.first);
  read_gradients_into(r, s.second);
  return s;
}

}  // namespace tmlab::nn
