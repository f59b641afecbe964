#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "atomizer/common.hpp"

namespace atomizer {

// Sinusoidal embedding of a scalar at L frequencies linearly spaced on
// [1, f_max]. Output layout: [sin(pi f_1 x), cos(pi f_1 x), ...,
// sin(pi f_L x), cos(pi f_L x)], size 2L.
struct FourierConfig {
    int num_frequencies = 16;  // L
    double max_frequency = 64.0;  // f_max

    void validate() const {
        if (num_frequencies < 1)
            throw ConfigError("FourierConfig: num_frequencies must be >= 1");
        if (max_frequency < 1.0)
            throw ConfigError("FourierConfig: max_frequency must be >= 1");
    }
    int output_dim() const { return 2 * num_frequencies; }
};

struct PositionConfig {
    FourierConfig fourier;
    double reference_gsd = 10.0;  // meters per pixel

    void validate() const {
        fourier.validate();
        if (reference_gsd <= 0.0)
            throw ConfigError("PositionConfig: reference_gsd must be > 0");
    }
    // Per coordinate: 2L Fourier components plus the unscaled coordinate.
    int output_dim() const { return 2 * (2 * fourier.num_frequencies + 1); }
};

std::vector<double> fourier_features(double x, const FourierConfig& cfg);
void fourier_features_into(double x, const FourierConfig& cfg, double* out);

// Reflectance encoding: the caller guarantees value in [0,1].
std::vector<double> encode_reflectance(double value, const FourierConfig& cfg);

// Center-relative normalization of integer pixel indices into [-1, 1).
// Degenerate axes (w == 1 or h == 1) map to 0.
std::pair<double, double> normalize_coords(int x, int y, int w, int h);

// Resolution-modulated positional encoding: per coordinate,
// gamma(coord * gsd / G) followed by the normalized coordinate itself;
// x block first, then y block.
std::vector<double> encode_position(double x_d, double y_d, double gsd,
                                    const PositionConfig& cfg);

}  // namespace atomizer
