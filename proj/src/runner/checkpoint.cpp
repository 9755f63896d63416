#include "tmlab/runner/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "tmlab/errors.hpp"
#include "tmlab/nn/binary_io.hpp"

namespace tmlab::runner {
namespace {

constexpr std::array<char, 4> kMagic{'T', 'M', 'L', 'B'};
constexpr std::array<char, 4> kConfigTag{'C', 'O', 'N', 'F'};

}  // namespace

void save_checkpoint(const std::string& path, const ExperimentConfig& config, std::uint64_t seed,
                     const cmaddpg::Trainer* trainer, const incentive::SacAgent* sac) {
  // Written beside the target and renamed, so a crash never leaves a
  // half-written checkpoint under the final name.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    nn::BinaryWriter w(out);
    w.tag(kMagic);
    w.u32(kCheckpointVersion);
    w.tag(kConfigTag);
    w.string(to_text(config));
    w.u64(seed);
    w.u8(trainer ? 1 : 0);
    if (trainer) trainer->save(w);
    w.u8(sac ? 1 : 0);
    if (sac) incentive::write_sac(w, *sac);
    out.flush();
    if (!out) throw IoError("write failed for checkpoint '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  nn::BinaryReader r(in);
  if (r.tag() != kMagic) throw FormatError("'" + path + "' is not a tmlab checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint '" + path + "' has version " + std::to_string(version) +
                      ", expected " + std::to_string(kCheckpointVersion));
  }
  if (r.tag() != kConfigTag) throw FormatError("checkpoint '" + path + "': missing config section");
  Checkpoint cp;
  try {
    cp.config = parse_config(r.string());
  } catch (const UsageError& e) {
    throw FormatError("checkpoint '" + path + "': stored config rejected: " + e.what());
  }
  cp.seed = r.u64();
  if (r.u8() != 0) {
    cp.trainer = std::make_unique<cmaddpg::Trainer>(cp.config.train_config(), cp.seed);
    cp.trainer->load(r);
  }
  if (r.u8() != 0) cp.sac = incentive::read_sac(r);
  return cp;
}

}  // namespace tmlab::runner
