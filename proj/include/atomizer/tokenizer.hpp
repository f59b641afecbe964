#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "atomizer/position_codec.hpp"
#include "atomizer/spectral_codec.hpp"

namespace atomizer {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatF = Mat<float>;
using MatD = Mat<double>;

// One sensor configuration: ordered band set, GSD, spatial extent.
struct ModalityConfig {
    std::string name;
    std::vector<BandSpec> bands;
    double gsd = 10.0;  // meters per pixel
    int height = 1;
    int width = 1;

    void validate() const {
        if (bands.empty()) throw ConfigError("ModalityConfig: needs >= 1 band");
        if (gsd <= 0.0) throw ConfigError("ModalityConfig: gsd must be > 0");
        if (height < 1 || width < 1)
            throw ConfigError("ModalityConfig: dims must be >= 1");
        for (const auto& b : bands) b.validate();
    }
};

// A raster cube with its modality and multilabel target.
// cube is planar: band-major, then row-major within a band.
struct Sample {
    std::string id;
    ModalityConfig modality;
    std::vector<float> cube;    // size H*W*B
    std::vector<int> target;    // C entries in {0,1}

    float& at(int y, int x, int b) {
        return cube[static_cast<size_t>(b) * modality.height * modality.width +
                    static_cast<size_t>(y) * modality.width + x];
    }
    float at(int y, int x, int b) const {
        return cube[static_cast<size_t>(b) * modality.height * modality.width +
                    static_cast<size_t>(y) * modality.width + x];
    }
    void validate() const;
};

struct TokenProvenance {
    int x = 0;
    int y = 0;
    int band_index = 0;
};

// N tokens of constant width D; provenance rows parallel the token rows.
struct TokenSet {
    MatF tokens;  // N x D
    std::vector<TokenProvenance> provenance;

    Eigen::Index count() const { return tokens.rows(); }
    Eigen::Index dim() const { return tokens.cols(); }
};

struct CodecBundle {
    PositionConfig position;
    FourierConfig reflectance;
    GaussianBank bank;
    int spectral_samples = kDefaultSpectralSamples;
    // Ablation switch: zero the positional and spectral metadata blocks,
    // leaving only the reflectance encoding. Token width is unchanged.
    bool zero_metadata = false;

    void validate() const {
        position.validate();
        reflectance.validate();
        bank.validate();
        if (spectral_samples < 1)
            throw ConfigError("CodecBundle: spectral_samples must be >= 1");
    }
    int token_dim() const {
        return reflectance.output_dim() + position.output_dim() +
               static_cast<int>(bank.size());
    }
};

// One token per (pixel, band) scalar: [phi_I | phi_res | phi_lambda].
// Spectral encodings are computed once per band and broadcast.
TokenSet tokenize(const Sample& sample, const CodecBundle& codecs);

// Keeps exactly max(1, floor(N*(1-p))) tokens via a seeded uniform shuffle.
TokenSet prune_tokens(const TokenSet& tokens, double p, uint64_t seed);

// Index form of the pruning selection, in kept order.
std::vector<Eigen::Index> prune_indices(Eigen::Index n, double p, uint64_t seed);

}  // namespace atomizer
