#pragma once

// Binary checkpoints. Layout, all integers little-endian:
//   "S2CG" | u32 version (1) | u32 network count
//   per network: u8 role | u32 entry count
//     per entry: u16 name length | name bytes | u32 rank | u64 extents | f64 values
//   u8 moments flag; when 1, per network and entry: first then second moment
//     as u32 rank | u64 extents | f64 values
//   32-byte SHA-256 of the canonical config

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "s2cgan/trainer.hpp"

namespace s2cgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::vector<NetworkParams> networks;
  // Parallel to networks and their entries when present.
  std::optional<std::vector<std::vector<AdamMoments>>> moments;
  std::array<std::uint8_t, 32> config_hash{};

  bool operator==(const Checkpoint& other) const;
  const NetworkParams& network(NetworkRole role) const;
};

Checkpoint make_checkpoint(const TrainState& state, bool with_moments = true);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

// Written to a sibling temp file and renamed into place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Replaces the state's networks (and moments, when stored) with the
// checkpoint's. The config hash must match the state's config.
void restore_state(TrainState& state, const Checkpoint& ckpt);

// Writes `bytes` to `path` through a temp file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace s2cgan
