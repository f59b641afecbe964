#include "atomizer/config.hpp"

#include <fstream>

#include <json.hpp>

namespace atomizer {

namespace {

using nlohmann::json;

json modality_entry_to_json(const ModalityEntry& m) {
    return {{"name", m.name},       {"height", m.height},
            {"width", m.width},     {"gsd", m.gsd},
            {"source_bands", m.source_bands},
            {"crop_row", m.crop_row}, {"crop_col", m.crop_col}};
}

ModalityEntry modality_entry_from_json(const json& j) {
    ModalityEntry m;
    m.name = j.at("name").get<std::string>();
    m.height = j.at("height").get<int>();
    m.width = j.at("width").get<int>();
    m.gsd = j.at("gsd").get<double>();
    m.source_bands = j.at("source_bands").get<std::vector<int>>();
    m.crop_row = j.value("crop_row", 0);
    m.crop_col = j.value("crop_col", 0);
    return m;
}

}  // namespace

void RunConfig::validate() const {
    codec.validate();
    encoder.validate();
    train.validate();
    if (forge.train_fraction <= 0.0 || forge.val_fraction < 0.0 ||
        forge.train_fraction + forge.val_fraction >= 1.0)
        throw ConfigError("RunConfig: bad forge split fractions");
    if (forge.num_classes < 2)
        throw ConfigError("RunConfig: forge.num_classes must be >= 2");
    if (paths.dataset_dir.empty() || paths.manifest.empty() || paths.out_dir.empty())
        throw ConfigError("RunConfig: paths must be nonempty");
}

std::string RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["codec"] = {
        {"fourier", {{"num_frequencies", codec.reflectance.num_frequencies},
                     {"max_frequency", codec.reflectance.max_frequency}}},
        {"reference_gsd", codec.position.reference_gsd},
        {"bank", {{"centers_nm", codec.bank.centers_nm},
                  {"sigmas_nm", codec.bank.sigmas_nm}}},
        {"spectral_samples", codec.spectral_samples},
        {"zero_metadata", codec.zero_metadata}};
    j["encoder"] = {{"num_latents", encoder.num_latents},
                    {"latent_dim", encoder.latent_dim},
                    {"num_blocks", encoder.num_blocks},
                    {"self_layers_per_block", encoder.self_layers_per_block},
                    {"num_heads", encoder.num_heads},
                    {"share_weights_after_first", encoder.share_weights_after_first},
                    {"prune_p", encoder.prune_p},
                    {"num_classes", encoder.num_classes}};
    j["train"] = {{"epochs", train.epochs},
                  {"warmup_epochs", train.warmup_epochs},
                  {"peak_lr", train.peak_lr},
                  {"batch_size", train.batch_size},
                  {"beta1", train.beta1},
                  {"beta2", train.beta2},
                  {"adam_eps", train.adam_eps},
                  {"weight_decay", train.weight_decay}};
    json train_mods = json::array(), test_mods = json::array();
    for (const auto& m : forge.train_modalities)
        train_mods.push_back(modality_entry_to_json(m));
    for (const auto& m : forge.test_modalities)
        test_mods.push_back(modality_entry_to_json(m));
    j["forge"] = {{"train_modalities", train_mods},
                  {"test_modalities", test_mods},
                  {"train_fraction", forge.train_fraction},
                  {"val_fraction", forge.val_fraction},
                  {"synth_scenes", forge.synth_scenes},
                  {"num_classes", forge.num_classes}};
    j["paths"] = {{"dataset_dir", paths.dataset_dir},
                  {"manifest", paths.manifest},
                  {"out_dir", paths.out_dir}};
    return j.dump(2);
}

std::string RunConfig::config_hash() const {
    const std::string canon = to_json();
    return hex64(fnv1a64(canon.data(), canon.size()));
}

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("RunConfig: JSON parse failure: ") + e.what());
    }
    RunConfig cfg = defaults();
    try {
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("codec")) {
            const auto& c = j["codec"];
            if (c.contains("fourier")) {
                cfg.codec.reflectance.num_frequencies =
                    c["fourier"].value("num_frequencies",
                                       cfg.codec.reflectance.num_frequencies);
                cfg.codec.reflectance.max_frequency = c["fourier"].value(
                    "max_frequency", cfg.codec.reflectance.max_frequency);
                cfg.codec.position.fourier = cfg.codec.reflectance;
            }
            cfg.codec.position.reference_gsd =
                c.value("reference_gsd", cfg.codec.position.reference_gsd);
            if (c.contains("bank")) {
                cfg.codec.bank.centers_nm =
                    c["bank"].at("centers_nm").get<std::vector<double>>();
                cfg.codec.bank.sigmas_nm =
                    c["bank"].at("sigmas_nm").get<std::vector<double>>();
            }
            cfg.codec.spectral_samples =
                c.value("spectral_samples", cfg.codec.spectral_samples);
            cfg.codec.zero_metadata = c.value("zero_metadata", false);
        }
        if (j.contains("encoder")) {
            const auto& e = j["encoder"];
            auto& enc = cfg.encoder;
            enc.num_latents = e.value("num_latents", enc.num_latents);
            enc.latent_dim = e.value("latent_dim", enc.latent_dim);
            enc.num_blocks = e.value("num_blocks", enc.num_blocks);
            enc.self_layers_per_block =
                e.value("self_layers_per_block", enc.self_layers_per_block);
            enc.num_heads = e.value("num_heads", enc.num_heads);
            enc.share_weights_after_first =
                e.value("share_weights_after_first", enc.share_weights_after_first);
            enc.prune_p = e.value("prune_p", enc.prune_p);
            enc.num_classes = e.value("num_classes", enc.num_classes);
        }
        if (j.contains("train")) {
            const auto& t = j["train"];
            auto& tr = cfg.train;
            tr.epochs = t.value("epochs", tr.epochs);
            tr.warmup_epochs = t.value("warmup_epochs", tr.warmup_epochs);
            tr.peak_lr = t.value("peak_lr", tr.peak_lr);
            tr.batch_size = t.value("batch_size", tr.batch_size);
            tr.beta1 = t.value("beta1", tr.beta1);
            tr.beta2 = t.value("beta2", tr.beta2);
            tr.adam_eps = t.value("adam_eps", tr.adam_eps);
            tr.weight_decay = t.value("weight_decay", tr.weight_decay);
        }
        if (j.contains("forge")) {
            const auto& f = j["forge"];
            cfg.forge.train_modalities.clear();
            cfg.forge.test_modalities.clear();
            for (const auto& m : f.value("train_modalities", json::array()))
                cfg.forge.train_modalities.push_back(modality_entry_from_json(m));
            for (const auto& m : f.value("test_modalities", json::array()))
                cfg.forge.test_modalities.push_back(modality_entry_from_json(m));
            cfg.forge.train_fraction =
                f.value("train_fraction", cfg.forge.train_fraction);
            cfg.forge.val_fraction = f.value("val_fraction", cfg.forge.val_fraction);
            cfg.forge.synth_scenes = f.value("synth_scenes", cfg.forge.synth_scenes);
            cfg.forge.num_classes = f.value("num_classes", cfg.forge.num_classes);
        }
        if (j.contains("paths")) {
            const auto& p = j["paths"];
            cfg.paths.dataset_dir = p.value("dataset_dir", cfg.paths.dataset_dir);
            cfg.paths.manifest = p.value("manifest", cfg.paths.manifest);
            cfg.paths.out_dir = p.value("out_dir", cfg.paths.out_dir);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("RunConfig: bad field: ") + e.what());
    }
    cfg.train.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("RunConfig: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_json(text);
}

RunConfig RunConfig::defaults() {
    RunConfig cfg;
    cfg.codec.reflectance = {16, 64.0};
    cfg.codec.position.fourier = cfg.codec.reflectance;
    cfg.codec.position.reference_gsd = 10.0;
    cfg.codec.bank = build_default_bank();
    cfg.codec.spectral_samples = kDefaultSpectralSamples;
    cfg.encoder = EncoderConfig{};
    cfg.encoder.num_classes = 4;
    cfg.train = TrainConfig{};
    return cfg;
}

}  // namespace atomizer
