#pragma once

// Versioned binary model container.
//
// Layout (all integers and floats little-endian):
//   magic "CSCGMDL\0" | u32 format version | u32 flags
//   u64 n_actions | u64 n_states | u64 n_obs | u64 n_groups | u64 size[n_groups]
//   u32 schema version | u64 name length | name bytes
//   f64 T[n_actions][n_states][n_states] | f64 E[n_states][n_obs] | f64 pi[n_states]
//   if flags & 1: u64 K | u64 dim | f64 centroids[K][dim] | f64 priors[K] | f64 sigma2

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "cscg/model.hpp"
#include "cscg/quantizer.hpp"

namespace cscg {

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelBundle {
  GroundedSchema schema;
  std::optional<Quantizer> quantizer;

  bool operator==(const ModelBundle&) const = default;
};

std::vector<std::uint8_t> serialize(const ModelBundle& bundle);
/// Throws FormatError on bad magic, version mismatch, truncation, or a payload
/// that violates the model invariants.
ModelBundle deserialize(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace cscg
