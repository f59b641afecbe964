// Command-line front end: forge datasets, dump token sets, train, evaluate
// across modalities, and run gradient checks.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <unordered_map>

#include "atomizer/config.hpp"
#include "atomizer/io.hpp"
#include "atomizer/latent_encoder.hpp"
#include "atomizer/train_eval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace atomizer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitProtocol = 2;
constexpr int kExitNumeric = 3;

struct GlobalOpts {
    std::string config_path;
    std::string out_override;
    int64_t seed_override = -1;
};

RunConfig load_config(const GlobalOpts& g) {
    if (g.config_path.empty())
        throw ConfigError("missing required --config <file>");
    RunConfig cfg = RunConfig::load(g.config_path);
    if (g.seed_override >= 0) {
        cfg.seed = static_cast<uint64_t>(g.seed_override);
        cfg.train.seed = cfg.seed;
    }
    if (!g.out_override.empty()) cfg.paths.out_dir = g.out_override;
    if (const char* env = std::getenv("ATOMIZER_OUT_DIR"))
        cfg.paths.out_dir = env;
    return cfg;
}

std::vector<fs::path> list_rasters(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".raster")
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_forge(const RunConfig& cfg, const std::string& base_dir) {
    if (cfg.forge.train_modalities.empty() || cfg.forge.test_modalities.empty())
        throw ProtocolError("forge: config must list train and test modalities");

    std::vector<Sample> bases;
    const auto paths = list_rasters(base_dir);
    for (const auto& p : paths) bases.push_back(load_raster(p));
    if (bases.empty()) {
        if (cfg.forge.synth_scenes > 0) {
            for (int i = 0; i < cfg.forge.synth_scenes; ++i)
                bases.push_back(synth_scene("scene_" + std::to_string(i),
                                            cfg.forge.num_classes,
                                            derive_seed(cfg.seed, 1000 + i)));
        } else {
            throw ConfigError("forge: no samples found in '" + base_dir +
                              "' and synth_scenes is 0");
        }
    }

    std::vector<std::string> ids, train_names, test_names;
    std::unordered_map<std::string, ForgeSpec> specs;
    for (const auto& m : cfg.forge.train_modalities) {
        train_names.push_back(m.name);
        specs[m.name] = m.to_forge_spec();
    }
    for (const auto& m : cfg.forge.test_modalities) {
        test_names.push_back(m.name);
        specs[m.name] = m.to_forge_spec();
    }
    for (const auto& b : bases) ids.push_back(b.id);

    const SplitManifest manifest =
        assign_modalities(ids, train_names, test_names, derive_seed(cfg.seed, 1),
                          cfg.forge.train_fraction, cfg.forge.val_fraction);

    // All protocol checks passed; only now touch the filesystem.
    const fs::path out_dir = cfg.paths.dataset_dir;
    fs::create_directories(out_dir);
    std::unordered_map<std::string, const Sample*> by_id;
    for (const auto& b : bases) by_id[b.id] = &b;
    std::unordered_map<std::string, int> counts;
    for (const auto& rec : manifest.records) {
        const Sample forged =
            forge_sample(*by_id.at(rec.sample_id), specs.at(rec.modality_name));
        save_raster(forged, out_dir / (rec.sample_id + ".raster"));
        ++counts[rec.modality_name];
    }
    save_manifest(manifest, cfg.paths.manifest);
    for (const auto& [name, n] : counts)
        std::cout << name << ": " << n << " samples\n";
    std::cout << "wrote " << manifest.records.size() << " samples to "
              << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_atomize(const RunConfig& cfg, const std::string& raster_path,
                const std::string& out_path) {
    const Sample sample = load_raster(raster_path);
    const TokenSet tokens = tokenize(sample, cfg.codec);
    save_token_set(tokens, cfg.config_hash(), out_path);
    std::cout << "tokens: n=" << tokens.count() << " d=" << tokens.dim()
              << " -> " << out_path << "\n";
    return kExitOk;
}

struct LoadedDataset {
    std::vector<Sample> samples;
    SplitManifest manifest;
};

LoadedDataset load_dataset(const RunConfig& cfg) {
    LoadedDataset out;
    out.manifest = load_manifest(cfg.paths.manifest);
    out.samples.reserve(out.manifest.records.size());
    for (const auto& rec : out.manifest.records)
        out.samples.push_back(load_raster(fs::path(cfg.paths.dataset_dir) /
                                          (rec.sample_id + ".raster")));
    return out;
}

int cmd_train(const RunConfig& cfg, bool dry_run) {
    if (dry_run) {
        const auto params = init_parameters<float>(cfg.encoder, cfg.codec.token_dim(),
                                                   derive_seed(cfg.seed, 0xA11));
        std::cout << cfg.to_json() << "\n";
        std::cout << "token_dim: " << cfg.codec.token_dim() << "\n";
        std::cout << "parameter_count: " << params.scalar_count() << "\n";
        return kExitOk;
    }
    if (!fs::exists(cfg.paths.manifest))
        throw ConfigError("train: manifest not found at paths.manifest='" +
                          cfg.paths.manifest + "'");
    const LoadedDataset data = load_dataset(cfg);

    fs::create_directories(cfg.paths.out_dir);
    const fs::path out_dir = cfg.paths.out_dir;
    std::ofstream metrics(out_dir / "metrics.jsonl");
    const auto on_epoch = [&](const EpochRecord& r) {
        json j = {{"epoch", r.epoch},
                  {"lr", r.lr},
                  {"train_loss", r.train_loss},
                  {"val_mAP", r.val_map},
                  {"val_subset_acc", r.val_subset_acc},
                  {"val_micro_acc", r.val_micro_acc}};
        metrics << j.dump() << "\n";
        metrics.flush();
        std::cout << "epoch " << r.epoch << " loss " << std::setprecision(5)
                  << r.train_loss << " val_mAP " << r.val_map << "\n";
    };
    const TrainResult result =
        train(data.samples, data.manifest, cfg.train, cfg.encoder, cfg.codec,
              on_epoch);
    save_checkpoint(result.best_params, cfg.to_json(), cfg.config_hash(),
                    out_dir / "checkpoint.atmz");
    std::ofstream snapshot(out_dir / "config-snapshot.json");
    snapshot << cfg.to_json() << "\n";
    std::cout << "best epoch " << result.best_epoch << "; checkpoint written\n";
    return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& ckpt_path,
             const std::string& modality_filter, const std::string& split_filter) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.config_hash != cfg.config_hash())
        throw ConfigError("eval: config/checkpoint hash mismatch: config=" +
                          cfg.config_hash() + " checkpoint=" + ckpt.config_hash);
    const LoadedDataset data = load_dataset(cfg);

    // Group samples by modality within the selected split.
    std::unordered_map<std::string, std::vector<Sample>> groups;
    for (size_t i = 0; i < data.manifest.records.size(); ++i) {
        const auto& rec = data.manifest.records[i];
        if (!split_filter.empty() && split_name(rec.split) != split_filter) continue;
        if (!modality_filter.empty() && rec.modality_name != modality_filter)
            continue;
        groups[rec.modality_name].push_back(data.samples[i]);
    }
    if (groups.empty()) {
        std::cout << "warning: no modalities selected; empty table\n";
        return kExitOk;
    }

    std::vector<std::string> names;
    for (const auto& [name, _] : groups) names.push_back(name);
    std::sort(names.begin(), names.end());

    json out = json::array();
    std::cout << std::left << std::setw(16) << "modality" << std::setw(8) << "n"
              << std::setw(10) << "mAP" << std::setw(12) << "subset_acc"
              << std::setw(12) << "micro_acc" << "\n";
    for (const auto& name : names) {
        const EvalReport r =
            evaluate(ckpt.params, groups[name], cfg.encoder, cfg.codec, name);
        std::cout << std::left << std::setw(16) << name << std::setw(8)
                  << r.sample_count << std::setw(10) << std::setprecision(4)
                  << r.map << std::setw(12) << r.subset_accuracy << std::setw(12)
                  << r.micro_accuracy << "\n";
        json aps = json::array();
        for (double ap : r.per_class_ap)
            aps.push_back(std::isnan(ap) ? json() : json(ap));
        out.push_back({{"modality", name},
                       {"n", r.sample_count},
                       {"mAP", r.map},
                       {"subset_acc", r.subset_accuracy},
                       {"micro_acc", r.micro_accuracy},
                       {"per_class_ap", aps},
                       {"config_hash", cfg.config_hash()}});
    }
    fs::create_directories(cfg.paths.out_dir);
    std::ofstream jf(fs::path(cfg.paths.out_dir) / "eval.json");
    jf << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_gradcheck(const RunConfig& cfg, const std::string& flip_param) {
    // Fixed small double-precision instance.
    EncoderConfig enc;
    enc.num_latents = 2;
    enc.latent_dim = 8;
    enc.num_blocks = 2;
    enc.self_layers_per_block = 1;
    enc.num_heads = 2;
    enc.num_classes = 3;
    enc.prune_p = 0.0;

    CodecBundle codec = cfg.codec;
    codec.reflectance.num_frequencies = 2;
    codec.reflectance.max_frequency = 4.0;
    codec.position.fourier = codec.reflectance;

    Sample sample;
    sample.id = "gradcheck";
    sample.modality.name = "toy";
    sample.modality.height = 2;
    sample.modality.width = 3;
    sample.modality.gsd = 10.0;
    sample.modality.bands = {base_band_catalog()[0]};
    sample.cube = {0.1f, 0.4f, 0.9f, 0.2f, 0.6f, 0.3f};
    const TokenSet tokens = tokenize(sample, codec);

    auto params = init_parameters<double>(enc, static_cast<int>(tokens.dim()),
                                          derive_seed(cfg.seed, 71));
    Mat<double> dtokens = tokens.tokens.cast<double>();
    Mat<double> target(1, 3);
    target << 1.0, 0.0, 1.0;

    GradCheckOptions opt;
    opt.seed = derive_seed(cfg.seed, 72);
    opt.flip_sign_param = flip_param;
    const GradCheckReport report = grad_check(params, enc, dtokens, target, opt);

    std::cout << "checked " << report.num_checked
              << " parameters; max relative error " << std::scientific
              << report.max_rel_err << "\n";
    std::cout << "worst offenders:\n";
    for (const auto& e : report.worst)
        std::cout << "  " << e.param << "[" << e.flat_index << "] analytic "
                  << e.analytic << " numeric " << e.numeric << " rel "
                  << e.rel_err << "\n";
    const double tolerance = 1e-4;
    if (!report.passed(tolerance)) {
        std::cout << "FAIL: worst parameter " << report.worst.front().param
                  << " exceeds tolerance " << tolerance << "\n";
        return kExitNumeric;
    }
    std::cout << "PASS at tolerance " << tolerance << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Atomizer: scalar tokenization and latent encoding for "
                 "multispectral rasters"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "run config JSON file");
    app.add_option("--seed", g.seed_override, "override the run seed");
    app.add_option("--out", g.out_override, "override paths.out_dir");

    auto* forge = app.add_subcommand("forge", "forge modality datasets");
    std::string base_dir = "base";
    forge->add_option("--base-dir", base_dir, "directory of base rasters");

    auto* atomize = app.add_subcommand("atomize", "dump a raster's token set");
    std::string raster_path, tokens_out = "tokens.bin";
    atomize->add_option("--raster", raster_path, "input .raster file")->required();
    atomize->add_option("--tokens-out", tokens_out, "output token binary");

    auto* train_cmd = app.add_subcommand("train", "train the encoder");
    bool dry_run = false;
    train_cmd->add_flag("--dry-run", dry_run,
                        "print resolved config and parameter count, then exit");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string ckpt_path, modality_filter, split_filter = "test";
    eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    eval_cmd->add_option("--modality", modality_filter, "restrict to one modality");
    eval_cmd->add_option("--split", split_filter, "split to evaluate (default test)");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check");
    std::string flip_param;
    gradcheck->add_option("--flip-sign", flip_param,
                          "test hook: negate this parameter's gradient");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        const RunConfig cfg = load_config(g);
        if (forge->parsed()) return cmd_forge(cfg, base_dir);
        if (atomize->parsed()) return cmd_atomize(cfg, raster_path, tokens_out);
        if (train_cmd->parsed()) return cmd_train(cfg, dry_run);
        if (eval_cmd->parsed())
            return cmd_eval(cfg, ckpt_path, modality_filter, split_filter);
        if (gradcheck->parsed()) return cmd_gradcheck(cfg, flip_param);
    } catch (const ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return kExitProtocol;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
