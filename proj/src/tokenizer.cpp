#include "atomizer/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace atomizer {

void Sample::validate() const {
    modality.validate();
    const size_t expected = static_cast<size_t>(modality.height) *
                            modality.width * modality.bands.size();
    if (cube.size() != expected)
        throw ConfigError("Sample '" + id + "': cube size " +
                          std::to_string(cube.size()) + " != H*W*B " +
                          std::to_string(expected));
    for (float v : cube)
        if (!std::isfinite(v))
            throw NumericError("Sample '" + id + "': non-finite cube value");
}

TokenSet tokenize(const Sample& sample, const CodecBundle& codecs) {
    sample.validate();
    codecs.validate();

    const int h = sample.modality.height;
    const int w = sample.modality.width;
    const int nb = static_cast<int>(sample.modality.bands.size());
    const int refl_dim = codecs.reflectance.output_dim();
    const int pos_dim = codecs.position.output_dim();
    const int spec_dim = static_cast<int>(codecs.bank.size());
    const int d = refl_dim + pos_dim + spec_dim;
    const Eigen::Index n = static_cast<Eigen::Index>(h) * w * nb;

    // Per-band spectral encodings, computed once and broadcast.
    std::vector<std::vector<double>> spectral(static_cast<size_t>(nb));
    for (int b = 0; b < nb; ++b) {
        if (codecs.zero_metadata)
            spectral[static_cast<size_t>(b)].assign(static_cast<size_t>(spec_dim), 0.0);
        else
            spectral[static_cast<size_t>(b)] =
                encode_band(sample.modality.bands[static_cast<size_t>(b)],
                            codecs.bank, codecs.spectral_samples);
    }

    // Per-pixel positional encodings, shared across bands.
    std::vector<std::vector<double>> positional(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto& slot = positional[static_cast<size_t>(y) * w + x];
            if (codecs.zero_metadata) {
                slot.assign(static_cast<size_t>(pos_dim), 0.0);
            } else {
                auto [xd, yd] = normalize_coords(x, y, w, h);
                slot = encode_position(xd, yd, sample.modality.gsd, codecs.position);
            }
        }
    }

    TokenSet out;
    out.tokens.resize(n, d);
    out.provenance.resize(static_cast<size_t>(n));
    std::vector<double> refl(static_cast<size_t>(refl_dim));

    Eigen::Index row = 0;
    for (int b = 0; b < nb; ++b) {
        const auto& spec = spectral[static_cast<size_t>(b)];
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x, ++row) {
                const double value =
                    std::clamp<double>(sample.at(y, x, b), 0.0, 1.0);
                fourier_features_into(value, codecs.reflectance, refl.data());
                float* t = out.tokens.row(row).data();
                for (int i = 0; i < refl_dim; ++i)
                    t[i] = static_cast<float>(refl[static_cast<size_t>(i)]);
                const auto& pos = positional[static_cast<size_t>(y) * w + x];
                for (int i = 0; i < pos_dim; ++i)
                    t[refl_dim + i] = static_cast<float>(pos[static_cast<size_t>(i)]);
                for (int i = 0; i < spec_dim; ++i)
                    t[refl_dim + pos_dim + i] =
                        static_cast<float>(spec[static_cast<size_t>(i)]);
                out.provenance[static_cast<size_t>(row)] = {x, y, b};
            }
        }
    }
    return out;
}

std::vector<Eigen::Index> prune_indices(Eigen::Index n, double p, uint64_t seed) {
    if (p < 0.0 || p >= 1.0)
        throw ConfigError("prune_tokens: p must lie in [0, 1)");
    if (n < 1) throw ConfigError("prune_tokens: empty token set");
    std::vector<Eigen::Index> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    if (p == 0.0) return idx;  // identity, input order preserved
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto keep = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::floor(static_cast<double>(n) * (1.0 - p))));
    idx.resize(static_cast<size_t>(keep));
    return idx;
}

TokenSet prune_tokens(const TokenSet& tokens, double p, uint64_t seed) {
    const auto idx = prune_indices(tokens.count(), p, seed);
    TokenSet out;
    out.tokens.resize(static_cast<Eigen::Index>(idx.size()), tokens.dim());
    out.provenance.resize(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        out.tokens.row(static_cast<Eigen::Index>(i)) = tokens.tokens.row(idx[i]);
        out.provenance[i] = tokens.provenance[static_cast<size_t>(idx[i])];
    }
    return out;
}

}  // namespace atomizer
