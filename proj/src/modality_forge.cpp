#include "atomizer/modality_forge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace atomizer {

std::string split_name(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kVal: return "val";
        case Split::kTest: return "test";
    }
    throw ConfigError("split_name: bad split");
}

Split split_from_name(const std::string& s) {
    if (s == "train") return Split::kTrain;
    if (s == "val") return Split::kVal;
    if (s == "test") return Split::kTest;
    throw ConfigError("split_from_name: unknown split '" + s + "'");
}

void SplitManifest::validate(const std::vector<std::string>& train_modalities,
                             const std::vector<std::string>& test_modalities) const {
    std::set<std::string> train_set(train_modalities.begin(), train_modalities.end());
    std::set<std::string> test_set(test_modalities.begin(), test_modalities.end());
    for (const auto& name : train_set)
        if (test_set.count(name))
            throw ProtocolError("SplitManifest: modality '" + name +
                                "' appears in both train and test sets");
    std::unordered_set<std::string> seen;
    for (const auto& rec : records) {
        if (!seen.insert(rec.sample_id).second)
            throw ProtocolError("SplitManifest: sample '" + rec.sample_id +
                                "' appears more than once");
        const bool is_test = rec.split == Split::kTest;
        const auto& side = is_test ? test_set : train_set;
        if (!side.count(rec.modality_name))
            throw ProtocolError("SplitManifest: sample '" + rec.sample_id +
                                "' assigned to out-of-protocol modality '" +
                                rec.modality_name + "'");
    }
}

Sample resample_to_gsd(const Sample& raster, double target_gsd) {
    raster.validate();
    const double base_gsd = raster.modality.gsd;
    const double ratio = target_gsd / base_gsd;
    const int s = static_cast<int>(std::lround(ratio));
    if (s < 1 || std::abs(ratio - s) > 1e-9)
        throw ConfigError("resample_to_gsd: factor " + std::to_string(ratio) +
                          " is not a positive integer");
    if (s == 1) return raster;
    const int h = raster.modality.height, w = raster.modality.width;
    if (h % s != 0 || w % s != 0)
        throw ConfigError("resample_to_gsd: dims not divisible by factor");

    Sample out;
    out.id = raster.id;
    out.target = raster.target;
    out.modality = raster.modality;
    out.modality.gsd = target_gsd;
    out.modality.height = h / s;
    out.modality.width = w / s;
    const int nb = static_cast<int>(raster.modality.bands.size());
    out.cube.assign(static_cast<size_t>(out.modality.height) *
                        out.modality.width * nb,
                    0.0f);
    const double inv = 1.0 / (static_cast<double>(s) * s);
    for (int b = 0; b < nb; ++b)
        for (int y = 0; y < out.modality.height; ++y)
            for (int x = 0; x < out.modality.width; ++x) {
                double acc = 0.0;
                for (int dy = 0; dy < s; ++dy)
                    for (int dx = 0; dx < s; ++dx)
                        acc += raster.at(y * s + dy, x * s + dx, b);
                out.at(y, x, b) = static_cast<float>(acc * inv);
            }
    return out;
}

Sample forge_sample(const Sample& base, const ForgeSpec& spec) {
    base.validate();
    const double ratio = spec.modality.gsd / base.modality.gsd;
    const int s = static_cast<int>(std::lround(ratio));
    if (s < 1 || std::abs(ratio - s) > 1e-9)
        throw ConfigError("forge_sample: resampling factor must be integral >= 1");
    const int crop_h = spec.modality.height * s;
    const int crop_w = spec.modality.width * s;
    if (spec.crop_row < 0 || spec.crop_col < 0 ||
        spec.crop_row + crop_h > base.modality.height ||
        spec.crop_col + crop_w > base.modality.width)
        throw ConfigError("forge_sample: crop exceeds base raster");
    for (int src : spec.source_band_indices)
        if (src < 0 || src >= static_cast<int>(base.modality.bands.size()))
            throw ConfigError("forge_sample: source band index out of range");
    if (spec.source_band_indices.empty())
        throw ConfigError("forge_sample: needs at least one source band");

    // Crop all base bands first.
    Sample cropped;
    cropped.id = base.id;
    cropped.target = base.target;
    cropped.modality = base.modality;
    cropped.modality.height = crop_h;
    cropped.modality.width = crop_w;
    cropped.cube.resize(static_cast<size_t>(crop_h) * crop_w *
                        base.modality.bands.size());
    for (int b = 0; b < static_cast<int>(base.modality.bands.size()); ++b)
        for (int y = 0; y < crop_h; ++y)
            for (int x = 0; x < crop_w; ++x)
                cropped.at(y, x, b) =
                    base.at(spec.crop_row + y, spec.crop_col + x, b);

    Sample coarse = resample_to_gsd(cropped, spec.modality.gsd);

    Sample out;
    out.id = base.id;
    out.target = base.target;
    out.modality = spec.modality;
    out.modality.bands.clear();
    for (int src : spec.source_band_indices)
        out.modality.bands.push_back(base.modality.bands[static_cast<size_t>(src)]);
    out.cube.resize(static_cast<size_t>(out.modality.height) *
                    out.modality.width * spec.source_band_indices.size());
    for (size_t bi = 0; bi < spec.source_band_indices.size(); ++bi)
        for (int y = 0; y < out.modality.height; ++y)
            for (int x = 0; x < out.modality.width; ++x)
                out.at(y, x, static_cast<int>(bi)) =
                    coarse.at(y, x, spec.source_band_indices[bi]);
    out.validate();
    return out;
}

SplitManifest assign_modalities(const std::vector<std::string>& sample_ids,
                                const std::vector<std::string>& train_modalities,
                                const std::vector<std::string>& test_modalities,
                                uint64_t seed, double train_fraction,
                                double val_fraction) {
    if (train_modalities.empty() || test_modalities.empty())
        throw ProtocolError("assign_modalities: both modality sets must be nonempty");
    for (const auto& name : train_modalities)
        if (std::find(test_modalities.begin(), test_modalities.end(), name) !=
            test_modalities.end())
            throw ProtocolError("assign_modalities: modality '" + name +
                                "' in both train and test sets");
    if (train_fraction <= 0.0 || val_fraction < 0.0 ||
        train_fraction + val_fraction >= 1.0)
        throw ConfigError("assign_modalities: bad split fractions");

    std::mt19937_64 rng(seed);
    std::vector<size_t> order(sample_ids.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const size_t n = sample_ids.size();
    const size_t n_train = static_cast<size_t>(std::floor(n * train_fraction));
    const size_t n_val = static_cast<size_t>(std::floor(n * val_fraction));

    SplitManifest manifest;
    manifest.records.reserve(n);
    std::uniform_int_distribution<size_t> pick_train(0, train_modalities.size() - 1);
    std::uniform_int_distribution<size_t> pick_test(0, test_modalities.size() - 1);
    for (size_t i = 0; i < n; ++i) {
        SplitRecord rec;
        rec.sample_id = sample_ids[order[i]];
        if (i < n_train)
            rec.split = Split::kTrain;
        else if (i < n_train + n_val)
            rec.split = Split::kVal;
        else
            rec.split = Split::kTest;
        rec.modality_name = rec.split == Split::kTest
                                ? test_modalities[pick_test(rng)]
                                : train_modalities[pick_train(rng)];
        manifest.records.push_back(std::move(rec));
    }
    manifest.validate(train_modalities, test_modalities);
    return manifest;
}

const std::vector<BandSpec>& base_band_catalog() {
    // Sentinel-2-like: visible/red-edge/NIR/SWIR centers and bandwidths (nm).
    static const std::vector<BandSpec> catalog = {
        {490.0, 65.0},  {560.0, 35.0},  {665.0, 30.0},  {705.0, 15.0},
        {740.0, 15.0},  {783.0, 20.0},  {842.0, 115.0}, {865.0, 20.0},
        {1610.0, 90.0}, {2190.0, 180.0},
    };
    return catalog;
}

bool class_band_high(int class_index, int band_index) {
    const int j = band_index % 10;
    switch (class_index) {
        case 0: return j < 5;
        case 1: return j >= 5;
        case 2: return j % 2 == 0;
        case 3: return j % 2 == 1;
        default: return ((j + 1) * (class_index - 1)) % 10 < 5;
    }
}

Sample synth_scene(const std::string& id, int num_classes, uint64_t seed) {
    if (num_classes < 2) throw ConfigError("synth_scene: need >= 2 classes");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Sample scene;
    scene.id = id;
    scene.modality.name = "base";
    scene.modality.bands = base_band_catalog();
    scene.modality.gsd = kSceneGsd;
    scene.modality.height = kSceneSize;
    scene.modality.width = kSceneSize;
    const int nb = static_cast<int>(scene.modality.bands.size());
    scene.cube.resize(static_cast<size_t>(kSceneSize) * kSceneSize * nb);
    for (float& v : scene.cube)
        v = static_cast<float>(0.08 + 0.04 * unit(rng));

    // Blobs live in the central 48x48 window shared by every modality crop.
    const int win_lo = (kSceneSize - 48) / 2;
    const int win_hi = win_lo + 48;
    scene.target.assign(static_cast<size_t>(num_classes), 0);
    // Exactly floor(C/2) classes are present, as a uniformly random subset.
    // Keeping the count fixed means total blob coverage is identical across
    // scenes, so coverage alone reveals nothing about which classes are in.
    std::vector<int> order(static_cast<size_t>(num_classes));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int ci = 0; ci < num_classes / 2; ++ci) {
        const int c = order[static_cast<size_t>(ci)];
        scene.target[static_cast<size_t>(c)] = 1;
        const int size = 12 + static_cast<int>(rng() % 9);  // 12..20 base px
        std::uniform_int_distribution<int> pos(win_lo, win_hi - size);
        const int r0 = pos(rng);
        const int c0 = pos(rng);
        for (int b = 0; b < nb; ++b) {
            const float v = class_band_high(c, b) ? 0.85f : 0.30f;
            for (int y = r0; y < r0 + size; ++y)
                for (int x = c0; x < c0 + size; ++x)
                    scene.at(y, x, b) = std::max(scene.at(y, x, b), v);
        }
    }
    return scene;
}

SynthDataset synth_dataset(int num_samples, int num_classes,
                           const std::vector<ForgeSpec>& train_modalities,
                           const std::vector<ForgeSpec>& test_modalities,
                           uint64_t seed, double train_fraction,
                           double val_fraction) {
    if (num_samples < 1) throw ConfigError("synth_dataset: need >= 1 sample");
    std::vector<std::string> ids, train_names, test_names;
    for (int i = 0; i < num_samples; ++i)
        ids.push_back("scene_" + std::to_string(i));
    std::unordered_map<std::string, const ForgeSpec*> by_name;
    for (const auto& spec : train_modalities) {
        train_names.push_back(spec.modality.name);
        by_name[spec.modality.name] = &spec;
    }
    for (const auto& spec : test_modalities) {
        test_names.push_back(spec.modality.name);
        by_name[spec.modality.name] = &spec;
    }

    SynthDataset out;
    out.manifest = assign_modalities(ids, train_names, test_names,
                                     derive_seed(seed, 1), train_fraction,
                                     val_fraction);
    std::unordered_map<std::string, size_t> id_pos;
    for (size_t i = 0; i < ids.size(); ++i) id_pos[ids[i]] = i;
    out.samples.reserve(out.manifest.records.size());
    for (const auto& rec : out.manifest.records) {
        const uint64_t scene_seed =
            derive_seed(seed, 1000 + id_pos.at(rec.sample_id));
        Sample base = synth_scene(rec.sample_id, num_classes, scene_seed);
        out.samples.push_back(forge_sample(base, *by_name.at(rec.modality_name)));
    }
    return out;
}

}  // namespace atomizer
