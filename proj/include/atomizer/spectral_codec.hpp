#pragma once

#include <vector>

#include "atomizer/common.hpp"

namespace atomizer {

// One spectral band: central wavelength and bandwidth, both in nm.
struct BandSpec {
    double center_wavelength = 0.0;  // lambda
    double bandwidth = 0.0;          // delta-lambda

    void validate() const {
        if (center_wavelength <= 0.0)
            throw ConfigError("BandSpec: center_wavelength must be > 0");
        if (bandwidth < 0.0)
            throw ConfigError("BandSpec: bandwidth must be >= 0");
        if (center_wavelength - bandwidth / 2.0 <= 0.0)
            throw ConfigError("BandSpec: support lower edge must be > 0");
    }
};

// Non-uniform Gaussian basis over wavelength. Centers strictly increasing.
struct GaussianBank {
    std::vector<double> centers_nm;
    std::vector<double> sigmas_nm;

    size_t size() const { return centers_nm.size(); }
    void validate() const;
};

// Default bank: 48 narrow Gaussians (sigma 10 nm) on [400, 800] nm covering
// the visible range densely, 16 wide ones (sigma 110 nm) on [850, 2500] nm.
GaussianBank build_default_bank();

// Wavelengths evenly spaced on the band support [lambda - bw/2, lambda + bw/2],
// endpoints included. Zero bandwidth or n_samples == 1 collapses to {lambda}.
std::vector<double> band_support(const BandSpec& band, int n_samples);

// Per-Gaussian maximum activation over the band support, L2-normalized.
// The max over the interval has a closed form (Gaussian center clamped into
// the support), so the result is sample-grid independent; n_samples bounds
// the support resolution used elsewhere and is validated here.
std::vector<double> encode_band(const BandSpec& band, const GaussianBank& bank,
                                int n_samples);

inline constexpr int kDefaultSpectralSamples = 32;

}  // namespace atomizer
