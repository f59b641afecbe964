#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "atomizer/latent_encoder.hpp"
#include "atomizer/modality_forge.hpp"

namespace atomizer {

// Raster file: one line of JSON (dims, gsd, band catalog, dtype, target),
// then a little-endian float32 planar payload.
void save_raster(const Sample& sample, const std::filesystem::path& path);
Sample load_raster(const std::filesystem::path& path);

// Manifest: JSON-lines, {"sample_id", "split", "modality"} per record.
void save_manifest(const SplitManifest& manifest, const std::filesystem::path& path);
SplitManifest load_manifest(const std::filesystem::path& path);

// Token dump: flat little-endian float32 matrix with a JSON sidecar
// (N, D, provenance, config hash) at <path>.json.
void save_token_set(const TokenSet& tokens, const std::string& config_hash,
                    const std::filesystem::path& path);

// Checkpoint: magic, JSON header (embedded config JSON, array table, payload
// hash), then named arrays as little-endian float32.
void save_checkpoint(const ParameterStore<float>& params,
                     const std::string& config_json, const std::string& config_hash,
                     const std::filesystem::path& path);

struct Checkpoint {
    ParameterStore<float> params;
    std::string config_json;
    std::string config_hash;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace atomizer
