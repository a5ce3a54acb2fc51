#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "psguard/nn/model.hpp"

namespace psguard::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers little-endian:
///   "PSGCKPT\0", u32 version, u32 n + n bytes of config JSON,
///   u32 tensor count, then per tensor: u32 n + name, u32 rank,
///   rank x u32 dims, float32 values row-major.
/// Values are stored as float; parameters already at float precision
/// (see round_to_storage_precision) survive a round trip bit for bit.
void save_checkpoint(std::ostream& out, const Model& model);
void save_checkpoint(const std::filesystem::path& file, const Model& model);

/// Throws psguard::Error on bad magic, unknown version, a tensor name or
/// shape that does not match the stored config, or truncation.
[[nodiscard]] Model load_checkpoint(std::istream& in);
[[nodiscard]] Model load_checkpoint(const std::filesystem::path& file);

}  // namespace psguard::nn
