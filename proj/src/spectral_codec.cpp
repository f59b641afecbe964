#include "atomizer/spectral_codec.hpp"

#include <algorithm>
#include <cmath>

namespace atomizer {

void GaussianBank::validate() const {
    if (centers_nm.size() != sigmas_nm.size())
        throw ConfigError("GaussianBank: centers/sigmas length mismatch");
    if (centers_nm.size() < 2)
        throw ConfigError("GaussianBank: need at least 2 Gaussians");
    for (size_t i = 0; i < centers_nm.size(); ++i) {
        if (sigmas_nm[i] <= 0.0)
            throw ConfigError("GaussianBank: sigmas must be > 0");
        if (i > 0 && centers_nm[i] <= centers_nm[i - 1])
            throw ConfigError("GaussianBank: centers must be strictly increasing");
    }
}

GaussianBank build_default_bank() {
    GaussianBank bank;
    const int n_narrow = 48;
    for (int i = 0; i < n_narrow; ++i) {
        bank.centers_nm.push_back(400.0 + (800.0 - 400.0) * i / (n_narrow - 1));
        bank.sigmas_nm.push_back(10.0);
    }
    const int n_wide = 16;
    for (int i = 0; i < n_wide; ++i) {
        bank.centers_nm.push_back(850.0 + (2500.0 - 850.0) * i / (n_wide - 1));
        bank.sigmas_nm.push_back(110.0);
    }
    bank.validate();
    return bank;
}

std::vector<double> band_support(const BandSpec& band, int n_samples) {
    band.validate();
    if (n_samples < 1)
        throw ConfigError("band_support: n_samples must be >= 1");
    const double lambda = band.center_wavelength;
    if (band.bandwidth == 0.0 || n_samples == 1)
        return {lambda};
    const double lo = lambda - band.bandwidth / 2.0;
    const double hi = lambda + band.bandwidth / 2.0;
    std::vector<double> out(static_cast<size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i)
        out[static_cast<size_t>(i)] = lo + (hi - lo) * i / (n_samples - 1);
    return out;
}

std::vector<double> encode_band(const BandSpec& band, const GaussianBank& bank,
                                int n_samples) {
    bank.validate();
    const std::vector<double> support = band_support(band, n_samples);
    // The maximum of a Gaussian over the closed support interval is attained
    // at its own center clamped into the interval; evaluating there makes the
    // sampled max exact regardless of where the grid points land.
    const double lo = support.front();
    const double hi = support.back();
    const size_t k = bank.size();
    std::vector<double> features(k, 0.0);
    for (size_t i = 0; i < k; ++i) {
        const double mu = bank.centers_nm[i];
        const double sigma = bank.sigmas_nm[i];
        const double w = std::clamp(mu, lo, hi);
        const double d = (w - mu) / sigma;
        features[i] = std::exp(-0.5 * d * d);
    }
    double norm_sq = 0.0;
    for (double f : features) norm_sq += f * f;
    const double norm = std::sqrt(norm_sq);
    if (norm < 1e-12)
        throw NumericError("encode_band: degenerate encoding, band too far from bank");
    for (double& f : features) f /= norm;
    return features;
}

}  // namespace atomizer
