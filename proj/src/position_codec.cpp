#include "atomizer/position_codec.hpp"

#include <cmath>

namespace atomizer {

void fourier_features_into(double x, const FourierConfig& cfg, double* out) {
    cfg.validate();
    const int L = cfg.num_frequencies;
    const double fmax = cfg.max_frequency;
    const double step = (L > 1) ? (fmax - 1.0) / (L - 1) : 0.0;
    for (int i = 0; i < L; ++i) {
        const double f = 1.0 + step * i;
        const double arg = M_PI * f * x;
        out[2 * i] = std::sin(arg);
        out[2 * i + 1] = std::cos(arg);
    }
}

std::vector<double> fourier_features(double x, const FourierConfig& cfg) {
    std::vector<double> out(static_cast<size_t>(2 * cfg.num_frequencies));
    fourier_features_into(x, cfg, out.data());
    return out;
}

std::vector<double> encode_reflectance(double value, const FourierConfig& cfg) {
    return fourier_features(value, cfg);
}

std::pair<double, double> normalize_coords(int x, int y, int w, int h) {
    if (w < 1 || h < 1)
        throw ConfigError("normalize_coords: w and h must be >= 1");
    if (x < 0 || x >= w || y < 0 || y >= h)
        throw ConfigError("normalize_coords: pixel index out of range");
    const double xd = (w == 1) ? 0.0 : (x - (w - 1) / 2.0) / (w / 2.0);
    const double yd = (h == 1) ? 0.0 : (y - (h - 1) / 2.0) / (h / 2.0);
    return {xd, yd};
}

std::vector<double> encode_position(double x_d, double y_d, double gsd,
                                    const PositionConfig& cfg) {
    cfg.validate();
    if (gsd <= 0.0) throw ConfigError("encode_position: gsd must be > 0");
    const double ratio = gsd / cfg.reference_gsd;
    const int L = cfg.fourier.num_frequencies;
    std::vector<double> out(static_cast<size_t>(2 * (2 * L + 1)));
    fourier_features_into(x_d * ratio, cfg.fourier, out.data());
    out[static_cast<size_t>(2 * L)] = x_d;
    fourier_features_into(y_d * ratio, cfg.fourier, out.data() + 2 * L + 1);
    out[static_cast<size_t>(2 * (2 * L + 1)) - 1] = y_d;
    return out;
}

}  // namespace atomizer
