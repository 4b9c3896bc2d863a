#pragma once

#include <string>

#include "bioqa/model.hpp"

namespace bioqa {

// Single-file checkpoint: magic, JSON manifest (hyperparameters plus tensor
// names/shapes/counts), one little-endian float64 blob per tensor, and a
// trailing FNV-1a checksum over everything before it. load(save(p)) == p
// bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

// Checksum of an arbitrary file, used by the determinism checks.
uint64_t fnv1a_file(const std::string& path);

}  // namespace bioqa
