#include "atomizer/io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace atomizer {

namespace {

using nlohmann::json;

void write_exact(std::ofstream& out, const void* data, size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw ConfigError("io: short write");
}

void read_exact(std::ifstream& in, void* data, size_t n) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
        throw ConfigError("io: short read");
}

json modality_to_json(const ModalityConfig& m) {
    json bands = json::array();
    for (const auto& b : m.bands)
        bands.push_back({{"center_nm", b.center_wavelength},
                         {"bandwidth_nm", b.bandwidth}});
    return {{"name", m.name},   {"bands", bands},  {"gsd", m.gsd},
            {"height", m.height}, {"width", m.width}};
}

ModalityConfig modality_from_json(const json& j) {
    ModalityConfig m;
    m.name = j.value("name", "");
    m.gsd = j.at("gsd").get<double>();
    m.height = j.at("height").get<int>();
    m.width = j.at("width").get<int>();
    for (const auto& b : j.at("bands"))
        m.bands.push_back({b.at("center_nm").get<double>(),
                           b.at("bandwidth_nm").get<double>()});
    return m;
}

}  // namespace

void save_raster(const Sample& sample, const std::filesystem::path& path) {
    sample.validate();
    json header = {{"format", "atomizer-raster-v1"},
                   {"dtype", "float32le"},
                   {"id", sample.id},
                   {"modality", modality_to_json(sample.modality)},
                   {"target", sample.target}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("save_raster: cannot open " + path.string());
    const std::string line = header.dump() + "\n";
    write_exact(out, line.data(), line.size());
    write_exact(out, sample.cube.data(), sample.cube.size() * sizeof(float));
}

Sample load_raster(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("load_raster: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("load_raster: missing header in " + path.string());
    const json header = json::parse(line);
    if (header.value("format", "") != "atomizer-raster-v1")
        throw ConfigError("load_raster: unsupported format in " + path.string());
    Sample sample;
    sample.id = header.at("id").get<std::string>();
    sample.modality = modality_from_json(header.at("modality"));
    sample.target = header.at("target").get<std::vector<int>>();
    const size_t n = static_cast<size_t>(sample.modality.height) *
                     sample.modality.width * sample.modality.bands.size();
    sample.cube.resize(n);
    read_exact(in, sample.cube.data(), n * sizeof(float));
    sample.validate();
    return sample;
}

void save_manifest(const SplitManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("save_manifest: cannot open " + path.string());
    for (const auto& rec : manifest.records) {
        json j = {{"sample_id", rec.sample_id},
                  {"split", split_name(rec.split)},
                  {"modality", rec.modality_name}};
        out << j.dump() << "\n";
    }
}

SplitManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("load_manifest: cannot open " + path.string());
    SplitManifest manifest;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        manifest.records.push_back({j.at("sample_id").get<std::string>(),
                                    split_from_name(j.at("split").get<std::string>()),
                                    j.at("modality").get<std::string>()});
    }
    return manifest;
}

void save_token_set(const TokenSet& tokens, const std::string& config_hash,
                    const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("save_token_set: cannot open " + path.string());
    write_exact(out, tokens.tokens.data(),
                static_cast<size_t>(tokens.tokens.size()) * sizeof(float));

    json prov = json::array();
    for (const auto& p : tokens.provenance)
        prov.push_back({{"x", p.x}, {"y", p.y}, {"band", p.band_index}});
    json sidecar = {{"format", "atomizer-tokens-v1"},
                    {"dtype", "float32le"},
                    {"n", tokens.count()},
                    {"d", tokens.dim()},
                    {"config_hash", config_hash},
                    {"provenance", prov}};
    std::ofstream side(path.string() + ".json");
    side << sidecar.dump(2) << "\n";
}

namespace {
constexpr char kCheckpointMagic[8] = {'A', 'T', 'M', 'Z', 'C', 'K', 'P', '1'};
}

void save_checkpoint(const ParameterStore<float>& params,
                     const std::string& config_json, const std::string& config_hash,
                     const std::filesystem::path& path) {
    json arrays = json::array();
    std::vector<float> payload;
    for (const auto& [name, var] : params.entries) {
        arrays.push_back({{"name", name},
                          {"rows", var->value.rows()},
                          {"cols", var->value.cols()},
                          {"offset", payload.size()}});
        payload.insert(payload.end(), var->value.data(),
                       var->value.data() + var->value.size());
    }
    const uint64_t payload_hash =
        fnv1a64(payload.data(), payload.size() * sizeof(float));
    json header = {{"format", "atomizer-checkpoint-v1"},
                   {"config", json::parse(config_json)},
                   {"config_hash", config_hash},
                   {"arrays", arrays},
                   {"payload_hash", hex64(payload_hash)}};
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("save_checkpoint: cannot open " + path.string());
    write_exact(out, kCheckpointMagic, sizeof(kCheckpointMagic));
    const uint64_t len = header_str.size();
    write_exact(out, &len, sizeof(len));
    write_exact(out, header_str.data(), header_str.size());
    write_exact(out, payload.data(), payload.size() * sizeof(float));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("load_checkpoint: cannot open " + path.string());
    char magic[8];
    read_exact(in, magic, sizeof(magic));
    if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw ConfigError("load_checkpoint: bad magic in " + path.string());
    uint64_t len = 0;
    read_exact(in, &len, sizeof(len));
    std::string header_str(len, '\0');
    read_exact(in, header_str.data(), len);
    const json header = json::parse(header_str);

    size_t total = 0;
    for (const auto& a : header.at("arrays"))
        total += a.at("rows").get<size_t>() * a.at("cols").get<size_t>();
    std::vector<float> payload(total);
    read_exact(in, payload.data(), total * sizeof(float));
    const uint64_t payload_hash =
        fnv1a64(payload.data(), payload.size() * sizeof(float));
    if (hex64(payload_hash) != header.at("payload_hash").get<std::string>())
        throw ConfigError("load_checkpoint: payload hash mismatch in " +
                          path.string());

    Checkpoint ckpt;
    ckpt.config_json = header.at("config").dump();
    ckpt.config_hash = header.at("config_hash").get<std::string>();
    for (const auto& a : header.at("arrays")) {
        const auto rows = a.at("rows").get<Eigen::Index>();
        const auto cols = a.at("cols").get<Eigen::Index>();
        const auto offset = a.at("offset").get<size_t>();
        MatF m(rows, cols);
        std::copy(payload.begin() + static_cast<long>(offset),
                  payload.begin() + static_cast<long>(offset) +
                      static_cast<long>(rows * cols),
                  m.data());
        ckpt.params.add(a.at("name").get<std::string>(), std::move(m));
    }
    return ckpt;
}

}  // namespace atomizer
