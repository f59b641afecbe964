#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atomizer/tokenizer.hpp"

namespace atomizer {

// Recipe for rendering one modality out of a base raster:
// crop -> integer-factor block-average resample -> band subset.
struct ForgeSpec {
    ModalityConfig modality;               // bands may be left empty; filled from base
    std::vector<int> source_band_indices;  // modality band -> base band
    int crop_row = 0;
    int crop_col = 0;
};

enum class Split { kTrain, kVal, kTest };

std::string split_name(Split s);
Split split_from_name(const std::string& s);

struct SplitRecord {
    std::string sample_id;
    Split split = Split::kTrain;
    std::string modality_name;
};

struct SplitManifest {
    std::vector<SplitRecord> records;

    // Disjoint train/test modality sets and one record per sample id.
    void validate(const std::vector<std::string>& train_modalities,
                  const std::vector<std::string>& test_modalities) const;
};

// Non-overlapping s x s block averaging per band, s = target_gsd / base_gsd.
Sample resample_to_gsd(const Sample& raster, double target_gsd);

// Crop, resample and band-subset the base raster; band metadata is carried
// from the base catalog for the selected indices, target is unchanged.
Sample forge_sample(const Sample& base, const ForgeSpec& spec);

// Assigns every sample id a split (by the given fractions) and a uniformly
// random modality from the matching side of the protocol. Train and val
// samples render under train modalities, test samples under test modalities.
SplitManifest assign_modalities(const std::vector<std::string>& sample_ids,
                                const std::vector<std::string>& train_modalities,
                                const std::vector<std::string>& test_modalities,
                                uint64_t seed, double train_fraction = 0.7,
                                double val_fraction = 0.15);

// ---- synthetic desk-scale dataset ------------------------------------------

// Base scenes are 128 x 128 x 10 at 10 m/px over a Sentinel-2-like catalog.
inline constexpr int kSceneSize = 128;
inline constexpr double kSceneGsd = 10.0;

const std::vector<BandSpec>& base_band_catalog();

// Class signature over the base bands: roughly half the bands "high".
// Patterns are pairwise distinct and share the same value multiset, so an
// image's value histogram alone does not identify the class.
bool class_band_high(int class_index, int band_index);

// One scene: noisy background plus, per class present, a rectangular blob
// carrying that class's spectral signature. Exactly floor(C/2) classes are
// present per scene (uniform subset), so total blob coverage carries no
// information about which classes they are. Blobs stay inside the central
// 48 x 48 window so every forged crop contains them. Labels are assigned
// before any rendering.
Sample synth_scene(const std::string& id, int num_classes, uint64_t seed);

struct SynthDataset {
    std::vector<Sample> samples;  // rendered, one per manifest record
    SplitManifest manifest;
};

// Full desk-scale pipeline: scenes -> split/modality assignment -> forging.
SynthDataset synth_dataset(int num_samples, int num_classes,
                           const std::vector<ForgeSpec>& train_modalities,
                           const std::vector<ForgeSpec>& test_modalities,
                           uint64_t seed, double train_fraction = 0.7,
                           double val_fraction = 0.15);

}  // namespace atomizer
