#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "atomizer/modality_forge.hpp"
#include "atomizer/train_eval.hpp"

namespace atomizer {

// Modality entry in the run config; bands come from the base raster catalog
// via source_bands at forge time.
struct ModalityEntry {
    std::string name;
    int height = 1;
    int width = 1;
    double gsd = 10.0;
    std::vector<int> source_bands;
    int crop_row = 0;
    int crop_col = 0;

    ForgeSpec to_forge_spec() const {
        ForgeSpec spec;
        spec.modality.name = name;
        spec.modality.height = height;
        spec.modality.width = width;
        spec.modality.gsd = gsd;
        spec.source_band_indices = source_bands;
        spec.crop_row = crop_row;
        spec.crop_col = crop_col;
        return spec;
    }
};

struct ForgeSection {
    std::vector<ModalityEntry> train_modalities;
    std::vector<ModalityEntry> test_modalities;
    double train_fraction = 0.7;
    double val_fraction = 0.15;
    int synth_scenes = 0;  // when > 0, forge may synthesize base scenes
    int num_classes = 4;
};

struct PathsSection {
    std::string dataset_dir = "data";
    std::string manifest = "data/manifest.jsonl";
    std::string out_dir = "out";
};

// The single human-editable JSON config every subcommand consumes.
struct RunConfig {
    CodecBundle codec;
    EncoderConfig encoder;
    TrainConfig train;
    ForgeSection forge;
    PathsSection paths;
    uint64_t seed = 0;

    void validate() const;
    std::string to_json() const;        // canonical (sorted keys)
    std::string config_hash() const;    // fnv1a64 of the canonical JSON
    static RunConfig from_json(const std::string& text);
    static RunConfig load(const std::filesystem::path& path);
    static RunConfig defaults();
};

}  // namespace atomizer
