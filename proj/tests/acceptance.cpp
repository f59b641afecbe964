// Behavioral acceptance suite. Each criterion prints exactly one PASS/FAIL
// line; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "atomizer/latent_encoder.hpp"
#include "atomizer/modality_forge.hpp"
#include "atomizer/train_eval.hpp"
#include "fixture_seeds.hpp"

using namespace atomizer;

namespace {

struct Failure {
    std::string why;
};

void expect(bool ok, const std::string& why) {
    if (!ok) throw Failure{why};
}

void expect_near(double a, double b, double tol, const std::string& what) {
    if (!(std::abs(a - b) <= tol)) {
        std::ostringstream os;
        os << what << ": " << a << " vs " << b << " (tol " << tol << ")";
        throw Failure{os.str()};
    }
}

// ---------------------------------------------------------------------------
// 1. Encoding golden suite.

void criterion_encodings() {
    // Fourier feature goldens.
    {
        const auto v = fourier_features(0.0, {2, 4.0});
        expect(v.size() == 4, "fourier dim for L=2");
        expect_near(v[0], 0.0, 0.0, "sin(0)");
        expect_near(v[1], 1.0, 0.0, "cos(0)");
        expect_near(v[2], 0.0, 0.0, "sin(0) at f2");
        expect_near(v[3], 1.0, 0.0, "cos(0) at f2");
    }
    {
        const auto v = fourier_features(1.0, {1, 1.0});
        expect_near(v[0], 0.0, 1e-12, "sin(pi)");
        expect_near(v[1], -1.0, 1e-12, "cos(pi)");
    }
    {
        // L=2, f_max=3 -> frequencies [1, 3].
        const auto v = fourier_features(0.5, {2, 3.0});
        expect_near(v[0], 1.0, 1e-12, "sin(pi/2)");
        expect_near(v[1], 0.0, 1e-12, "cos(pi/2)");
        expect_near(v[2], -1.0, 1e-12, "sin(3pi/2)");
        expect_near(v[3], 0.0, 1e-12, "cos(3pi/2)");
    }

    // Reflectance encoding goldens.
    {
        const FourierConfig cfg{16, 64.0};
        const auto v = encode_reflectance(0.0, cfg);
        for (size_t i = 0; i < v.size(); i += 2) {
            expect_near(v[i], 0.0, 0.0, "reflectance 0 sine");
            expect_near(v[i + 1], 1.0, 0.0, "reflectance 0 cosine");
        }
    }
    {
        const auto v = encode_reflectance(1.0, {1, 1.0});
        expect_near(v[0], 0.0, 1e-12, "reflectance 1 sine");
        expect_near(v[1], -1.0, 1e-12, "reflectance 1 cosine");
    }
    {
        const auto v = encode_reflectance(0.25, {1, 1.0});
        expect_near(v[0], 0.70711, 1e-5, "sin(pi/4)");
        expect_near(v[1], 0.70711, 1e-5, "cos(pi/4)");
    }

    // Coordinate normalization goldens.
    {
        const auto [x, y] = normalize_coords(1, 1, 3, 3);
        expect_near(x, 0.0, 0.0, "3x3 center x");
        expect_near(y, 0.0, 0.0, "3x3 center y");
    }
    {
        const auto [x, y] = normalize_coords(0, 0, 100, 100);
        expect_near(x, -0.99, 1e-12, "w=100 leftmost");
        (void)y;
    }
    {
        const auto [x, y] = normalize_coords(0, 0, 1, 1);
        expect_near(x, 0.0, 0.0, "1x1 x");
        expect_near(y, 0.0, 0.0, "1x1 y");
    }

    // Positional encoding goldens.
    const PositionConfig pos1{{1, 1.0}, 10.0};
    {
        const auto v = encode_position(0.0, 0.0, 25.0, pos1);
        expect(v.size() == 6, "position dim 2(2L+1) for L=1");
        const double want[] = {0.0, 1.0, 0.0, 0.0, 1.0, 0.0};
        for (int i = 0; i < 6; ++i)
            expect_near(v[static_cast<size_t>(i)], want[i], 0.0, "position zero identity");
    }
    {
        // Scaled-argument identity: 0.5 * 20 / 10 == 1.0 * 10 / 10.
        const auto a = encode_position(0.5, 0.0, 20.0, pos1);
        const auto b = encode_position(1.0, 0.0, 10.0, pos1);
        expect_near(a[0], b[0], 0.0, "scaled x sine");
        expect_near(a[1], b[1], 0.0, "scaled x cosine");
        expect_near(a[2], 0.5, 0.0, "trailing x scalar a");
        expect_near(b[2], 1.0, 0.0, "trailing x scalar b");
    }
    {
        const auto v = encode_position(1.0, -1.0, 10.0, pos1);
        const double want[] = {0.0, -1.0, 1.0, 0.0, -1.0, -1.0};
        for (int i = 0; i < 6; ++i)
            expect_near(v[static_cast<size_t>(i)], want[i], 1e-12, "position (1,-1) golden");
    }

    // Gaussian bank geometry.
    const GaussianBank bank = build_default_bank();
    expect(bank.size() == 64, "default bank size");
    expect_near(bank.centers_nm.front(), 400.0, 1e-9, "first center");
    expect_near(bank.centers_nm.back(), 2500.0, 1e-9, "last center");
    for (size_t i = 0; i < bank.size(); ++i)
        expect(bank.sigmas_nm[i] > 0.0, "positive width");
    for (size_t i = 1; i < bank.size(); ++i)
        expect(bank.centers_nm[i] > bank.centers_nm[i - 1], "increasing centers");

    // Band support goldens.
    {
        const auto s = band_support({500.0, 0.0}, 7);
        for (double w : s) expect_near(w, 500.0, 0.0, "degenerate support");
    }
    {
        const auto s = band_support({500.0, 100.0}, 3);
        expect(s.size() == 3, "support n=3");
        expect_near(s[0], 450.0, 1e-12, "support lo");
        expect_near(s[1], 500.0, 1e-12, "support mid");
        expect_near(s[2], 550.0, 1e-12, "support hi");
    }
    {
        const auto s = band_support({500.0, 100.0}, 2);
        expect(s.size() == 2, "support n=2");
        expect_near(s[0], 450.0, 1e-12, "support n=2 lo");
        expect_near(s[1], 550.0, 1e-12, "support n=2 hi");
    }

    // Peak at own center.
    for (size_t j : {0u, 10u, 47u, 48u, 63u}) {
        const auto v = encode_band({bank.centers_nm[j], 0.0}, bank, 32);
        size_t argmax = 0;
        for (size_t i = 1; i < v.size(); ++i)
            if (v[i] > v[argmax]) argmax = i;
        expect(argmax == j, "peak at own center");
    }

    // Width discriminability at a shared center wavelength.
    {
        const auto a = encode_band({600.0, 20.0}, bank, 32);
        const auto b = encode_band({600.0, 200.0}, bank, 32);
        double d2 = 0.0;
        for (size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
        expect(std::sqrt(d2) > 0.0, "bandwidth discriminability");
    }

    // Dense-sampling oracle: 10,001 wavelengths on the support, per-Gaussian
    // maxima, then L2 normalization — computed independently here.
    {
        const BandSpec band{650.0, 40.0};
        const auto got = encode_band(band, bank, 32);
        std::vector<double> oracle(bank.size(), 0.0);
        const double lo = band.center_wavelength - band.bandwidth / 2.0;
        const double hi = band.center_wavelength + band.bandwidth / 2.0;
        for (int i = 0; i <= 10000; ++i) {
            const double w = lo + (hi - lo) * i / 10000.0;
            for (size_t j = 0; j < bank.size(); ++j) {
                const double z = (w - bank.centers_nm[j]) / bank.sigmas_nm[j];
                oracle[j] = std::max(oracle[j], std::exp(-0.5 * z * z));
            }
        }
        double norm = 0.0;
        for (double v : oracle) norm += v * v;
        norm = std::sqrt(norm);
        for (size_t j = 0; j < bank.size(); ++j)
            expect_near(got[j], oracle[j] / norm, 1e-6, "dense oracle");
    }

    // Unit norm for random bands.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> center(420.0, 2400.0);
    std::uniform_real_distribution<double> width(0.0, 200.0);
    for (int t = 0; t < 200; ++t) {
        const auto v = encode_band({center(rng), width(rng)}, bank, 32);
        double norm = 0.0;
        for (double x : v) norm += x * x;
        expect_near(std::sqrt(norm), 1.0, 1e-9, "unit norm");
    }

    // Resolution-scaling equivalence: the Fourier blocks of the positional
    // encoding must equal the plain embedding of coord * gsd / G.
    const PositionConfig pos{{6, 24.0}, 10.0};
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> gsd(0.5, 80.0);
    for (int t = 0; t < 1000; ++t) {
        const double x_d = coord(rng);
        const double y_d = coord(rng);
        const double g = gsd(rng);
        const auto enc = encode_position(x_d, y_d, g, pos);
        const auto fx = fourier_features(x_d * g / pos.reference_gsd, pos.fourier);
        const auto fy = fourier_features(y_d * g / pos.reference_gsd, pos.fourier);
        const size_t block = fx.size();
        for (size_t i = 0; i < block; ++i) {
            expect_near(enc[i], fx[i], 1e-12, "x block equivalence");
            expect_near(enc[block + 1 + i], fy[i], 1e-12, "y block equivalence");
        }
        expect_near(enc[block], x_d, 0.0, "trailing x");
        expect_near(enc[2 * block + 1], y_d, 0.0, "trailing y");
    }
}

// ---------------------------------------------------------------------------
// 2. Tokenizer contract.

CodecBundle small_codec(int L = 4, double f_max = 8.0) {
    CodecBundle codec;
    codec.reflectance = {L, f_max};
    codec.position = {{L, f_max}, 10.0};
    codec.bank = build_default_bank();
    codec.spectral_samples = 8;
    return codec;
}

Sample random_sample(int h, int w, int nbands, uint64_t seed, double gsd = 10.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    Sample s;
    s.id = "rand";
    s.modality.name = "rand";
    s.modality.height = h;
    s.modality.width = w;
    s.modality.gsd = gsd;
    const auto& catalog = base_band_catalog();
    for (int b = 0; b < nbands; ++b)
        s.modality.bands.push_back(catalog[static_cast<size_t>(b) % catalog.size()]);
    s.cube.resize(static_cast<size_t>(h) * w * nbands);
    for (auto& v : s.cube) v = dist(rng);
    return s;
}

void criterion_tokenizer() {
    const CodecBundle codec = small_codec();
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> dim(1, 16);
    std::uniform_int_distribution<int> nb(1, 10);
    Eigen::Index width = -1;
    for (int t = 0; t < 50; ++t) {
        const int h = dim(rng), w = dim(rng), b = nb(rng);
        const TokenSet tokens = tokenize(random_sample(h, w, b, 100 + t), codec);
        expect(tokens.count() == static_cast<Eigen::Index>(h) * w * b,
               "token count N = H*W*B");
        if (width < 0) width = tokens.dim();
        expect(tokens.dim() == width, "constant token width");
    }

    // Exact keep counts.
    expect(prune_indices(1000, 0.5, 3).size() == 500, "p=0.5 keeps floor count");
    expect(prune_indices(5, 0.9, 3).size() == 1, "nonempty guard");

    // Per-index keep frequency at p=0.5 over 256 derived seed streams.
    std::vector<int> kept(100, 0);
    for (int s = 0; s < 256; ++s) {
        const auto idx = prune_indices(
            100, 0.5, derive_seed(PRUNE_FREQ_BASE_SEED, static_cast<uint64_t>(s)));
        expect(idx.size() == 50, "stream keep count");
        for (auto i : idx) kept[static_cast<size_t>(i)] += 1;
    }
    for (int i = 0; i < 100; ++i) {
        const double freq = kept[static_cast<size_t>(i)] / 256.0;
        expect(freq >= 0.45 && freq <= 0.55, "keep frequency 0.5 +/- 0.05 at index " +
                                                 std::to_string(i));
    }
}

// ---------------------------------------------------------------------------
// 3. Permutation invariance of eval-mode logits.

void criterion_permutation() {
    const CodecBundle codec = small_codec(2, 4.0);
    EncoderConfig enc;
    enc.num_latents = 8;
    enc.latent_dim = 32;
    enc.num_blocks = 2;
    enc.self_layers_per_block = 1;
    enc.num_heads = 4;
    enc.num_classes = 4;
    const Sample sample = random_sample(32, 32, 4, 31);
    const TokenSet tokens = tokenize(sample, codec);
    auto ps = init_parameters<float>(enc, static_cast<int>(tokens.dim()), 32);

    const MatF base_logits =
        forward_logits<float>(tokens.tokens, ps, enc, Mode::kEval, 0)->value;
    std::mt19937_64 rng(33);
    std::vector<Eigen::Index> order(static_cast<size_t>(tokens.count()));
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
    for (int t = 0; t < 20; ++t) {
        std::shuffle(order.begin(), order.end(), rng);
        MatF permuted(tokens.count(), tokens.dim());
        for (size_t i = 0; i < order.size(); ++i)
            permuted.row(static_cast<Eigen::Index>(i)) = tokens.tokens.row(order[i]);
        const MatF logits =
            forward_logits<float>(permuted, ps, enc, Mode::kEval, 0)->value;
        const double linf = (logits - base_logits).cwiseAbs().maxCoeff();
        expect(linf < 1e-5, "permutation " + std::to_string(t) + " L_inf = " +
                                std::to_string(linf));
    }
}

// ---------------------------------------------------------------------------
// 4. Gradient fidelity.

void criterion_gradients() {
    EncoderConfig enc;
    enc.num_latents = 2;
    enc.latent_dim = 8;
    enc.num_blocks = 2;
    enc.self_layers_per_block = 1;
    enc.num_heads = 2;
    enc.num_classes = 3;
    enc.prune_p = 0.0;

    const CodecBundle codec = small_codec(2, 4.0);
    const Sample sample = random_sample(2, 3, 1, 41);
    const TokenSet tokens = tokenize(sample, codec);
    auto ps = init_parameters<double>(enc, static_cast<int>(tokens.dim()), 42);
    const MatD dtokens = tokens.tokens.cast<double>();
    MatD target(1, 3);
    target << 1.0, 0.0, 1.0;

    GradCheckOptions opt;
    opt.min_samples = 220;
    opt.seed = 43;
    const GradCheckReport report = grad_check(ps, enc, dtokens, target, opt);
    expect(report.num_checked >= 200, "checked >= 200 parameters");
    expect(report.num_checked >= ps.entries.size(), "every parameter array covered");
    std::ostringstream os;
    os << "max relative error " << report.max_rel_err;
    expect(report.max_rel_err < 1e-4, os.str());
}

// ---------------------------------------------------------------------------
// 5. Average precision against a brute-force oracle.

std::optional<double> ap_oracle(std::vector<double> scores, std::vector<int> labels) {
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    // Selection sort: score descending, original index ascending on ties.
    for (size_t i = 0; i < n; ++i) {
        size_t best = i;
        for (size_t j = i + 1; j < n; ++j)
            if (scores[order[j]] > scores[order[best]] ||
                (scores[order[j]] == scores[order[best]] && order[j] < order[best]))
                best = j;
        std::swap(order[i], order[best]);
    }
    int positives = 0;
    for (int l : labels) positives += l;
    if (positives == 0) return std::nullopt;
    // Tie-aware: precision at a positive counts everything scoring at or
    // above it, by direct per-item counting; visited in rank order.
    double sum = 0.0;
    for (size_t r = 0; r < n; ++r) {
        const size_t i = order[r];
        if (labels[i] != 1) continue;
        size_t at_or_above = 0, hits_at_or_above = 0;
        for (size_t j = 0; j < n; ++j)
            if (scores[j] >= scores[i]) {
                ++at_or_above;
                hits_at_or_above += static_cast<size_t>(labels[j] == 1);
            }
        sum += static_cast<double>(hits_at_or_above) /
               static_cast<double>(at_or_above);
    }
    return sum / positives;
}

void criterion_average_precision() {
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    // A coarse grid forces ties through every draw.
    const auto draw = [&](size_t n, bool coarse) {
        std::vector<double> s(n);
        for (auto& v : s)
            v = coarse ? std::floor(score(rng) * 4.0) / 4.0 : score(rng);
        return s;
    };
    for (int n = 1; n <= 8; ++n) {
        for (int mask = 1; mask < (1 << n); ++mask) {
            std::vector<int> labels(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = (mask >> i) & 1;
            for (int d = 0; d < 100; ++d) {
                const auto scores = draw(static_cast<size_t>(n), d % 2 == 0);
                const auto got = average_precision(scores, labels);
                const auto want = ap_oracle(scores, labels);
                expect(got.has_value() && want.has_value(), "AP defined");
                expect(*got == *want, "exact oracle match at n=" + std::to_string(n));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Shared fixtures for the training criteria.

std::vector<ForgeSpec> train_specs_small() {
    ForgeSpec a;
    a.modality.name = "m16x40";
    a.modality.height = 16;
    a.modality.width = 16;
    a.modality.gsd = 40.0;
    a.source_band_indices = {1, 3, 6, 9};
    a.crop_row = 32;
    a.crop_col = 32;
    return {a};
}

// ---------------------------------------------------------------------------
// 6. Overfit smoke.

void criterion_overfit() {
    const int num_classes = 4;
    std::vector<Sample> samples;
    const auto spec = train_specs_small()[0];
    SplitManifest manifest;
    for (int i = 0; i < 32; ++i) {
        Sample base = synth_scene("s" + std::to_string(i), num_classes,
                                  derive_seed(61, 500 + static_cast<uint64_t>(i)));
        samples.push_back(forge_sample(base, spec));
        manifest.records.push_back({base.id, Split::kTrain, spec.modality.name});
    }

    CodecBundle codec = small_codec(8, 32.0);
    EncoderConfig enc;
    enc.num_latents = 32;
    enc.latent_dim = 64;
    enc.num_blocks = 2;
    enc.self_layers_per_block = 1;
    enc.num_heads = 4;
    enc.num_classes = num_classes;
    enc.prune_p = 0.5;

    TrainConfig tc;
    tc.epochs = 175;  // 4 optimizer steps per epoch -> exactly 700 steps
    tc.warmup_epochs = 17;
    tc.peak_lr = 4e-3;
    tc.batch_size = 8;
    tc.seed = 62;

    const TrainResult result = train(samples, manifest, tc, enc, codec);
    const EvalReport report =
        evaluate(result.final_params, samples, enc, codec, spec.modality.name);
    std::ostringstream os;
    os << "train subset accuracy " << report.subset_accuracy << " after "
       << tc.epochs * 4 << " steps";
    expect(report.subset_accuracy > 0.95, os.str());
}

// ---------------------------------------------------------------------------
// 7. Cross-modality generalization.

void criterion_cross_modality() {
    const int num_classes = 4;
    ForgeSpec a;
    a.modality.name = "fine6";
    a.modality.height = 48;
    a.modality.width = 48;
    a.modality.gsd = 10.0;
    a.source_band_indices = {0, 1, 2, 3, 4, 5};
    a.crop_row = 40;
    a.crop_col = 40;
    ForgeSpec b;
    b.modality.name = "mid4";
    b.modality.height = 24;
    b.modality.width = 24;
    b.modality.gsd = 20.0;
    b.source_band_indices = {1, 3, 6, 9};
    b.crop_row = 40;
    b.crop_col = 40;
    // Test bands are chosen so every class signature covers exactly two of
    // them: a value histogram alone cannot tell the classes apart on this
    // modality, so metadata-free encodings should not generalize here.
    ForgeSpec t;
    t.modality.name = "coarse4";
    t.modality.height = 32;
    t.modality.width = 32;
    t.modality.gsd = 40.0;
    t.source_band_indices = {1, 4, 6, 9};
    t.crop_row = 0;
    t.crop_col = 0;

    const SynthDataset data = synth_dataset(128, num_classes, {a, b}, {t}, 71);

    std::vector<Sample> test_samples;
    for (size_t i = 0; i < data.manifest.records.size(); ++i)
        if (data.manifest.records[i].split == Split::kTest)
            test_samples.push_back(data.samples[i]);
    expect(!test_samples.empty(), "nonempty test split");

    // Random-ranking baseline: mean class prevalence on the test split.
    double prevalence = 0.0;
    for (const auto& s : test_samples)
        for (int c = 0; c < num_classes; ++c) prevalence += s.target[static_cast<size_t>(c)];
    prevalence /= static_cast<double>(test_samples.size() * num_classes);

    EncoderConfig enc;
    enc.num_latents = 32;
    enc.latent_dim = 64;
    enc.num_blocks = 2;
    enc.self_layers_per_block = 1;
    enc.num_heads = 4;
    enc.num_classes = num_classes;
    enc.prune_p = 0.5;

    TrainConfig tc;
    tc.epochs = 14;
    tc.warmup_epochs = 2;
    tc.peak_lr = 1e-3;
    tc.batch_size = 8;
    tc.seed = 72;

    const CodecBundle codec = small_codec(8, 32.0);
    const TrainResult full = train(data.samples, data.manifest, tc, enc, codec);
    const double full_map =
        evaluate(full.best_params, test_samples, enc, codec, t.modality.name).map;

    CodecBundle ablated = codec;
    ablated.zero_metadata = true;
    const TrainResult bare = train(data.samples, data.manifest, tc, enc, ablated);
    const double bare_map =
        evaluate(bare.best_params, test_samples, enc, ablated, t.modality.name).map;

    std::ostringstream os;
    os << "test mAP " << full_map << " vs prevalence " << prevalence
       << " and metadata-free ablation " << bare_map;
    expect(full_map >= prevalence + 0.15, os.str() + " (baseline margin)");
    expect(full_map >= bare_map + 0.05, os.str() + " (ablation margin)");
    std::cout << "  [" << os.str() << "]\n";
}

// ---------------------------------------------------------------------------
// 8. Forge protocol.

void criterion_forge_protocol() {
    std::mt19937_64 rng(81);
    std::uniform_int_distribution<int> n_train(1, 4), n_test(1, 3),
        n_samples(10, 200);
    for (int t = 0; t < 100; ++t) {
        std::vector<std::string> train_names, test_names, ids;
        for (int i = 0; i < n_train(rng); ++i)
            train_names.push_back("tr" + std::to_string(i));
        for (int i = 0; i < n_test(rng); ++i)
            test_names.push_back("te" + std::to_string(i));
        const int n = n_samples(rng);
        for (int i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
        const SplitManifest m =
            assign_modalities(ids, train_names, test_names, 8100 + static_cast<uint64_t>(t));
        m.validate(train_names, test_names);

        // Independent disjointness / exclusivity re-check.
        std::set<std::string> train_set(train_names.begin(), train_names.end());
        std::set<std::string> test_set(test_names.begin(), test_names.end());
        std::set<std::string> seen;
        expect(m.records.size() == ids.size(), "one record per sample");
        for (const auto& rec : m.records) {
            expect(seen.insert(rec.sample_id).second, "sample in exactly one record");
            if (rec.split == Split::kTest) {
                expect(test_set.count(rec.modality_name) == 1, "test modality in protocol");
                expect(train_set.count(rec.modality_name) == 0, "disjoint modality sets");
            } else {
                expect(train_set.count(rec.modality_name) == 1, "train modality in protocol");
                expect(test_set.count(rec.modality_name) == 0, "disjoint modality sets");
            }
        }
    }

    // Block-average resampling preserves the crop mean.
    for (int factor : {2, 4, 8}) {
        const Sample base = random_sample(32, 32, 3, 820 + factor);
        const Sample coarse = resample_to_gsd(base, base.modality.gsd * factor);
        double mean_base = 0.0, mean_coarse = 0.0;
        for (float v : base.cube) mean_base += v;
        for (float v : coarse.cube) mean_coarse += v;
        mean_base /= static_cast<double>(base.cube.size());
        mean_coarse /= static_cast<double>(coarse.cube.size());
        expect_near(mean_coarse, mean_base, 1e-6, "resampling mean preservation");
    }
}

// ---------------------------------------------------------------------------
// 9. Learning-rate schedule.

void criterion_schedule() {
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.warmup_epochs = 5;
    cfg.peak_lr = 3e-4;

    const long steps_per_epoch = 100;
    const long total = cfg.epochs * steps_per_epoch;
    const long warmup = cfg.warmup_epochs * steps_per_epoch;

    expect_near(lr_at(0, total, cfg), 0.0, 0.0, "lr at step 0");
    expect_near(lr_at(warmup, total, cfg), cfg.peak_lr, 1e-15, "lr at warmup end");
    expect_near(lr_at(total, total, cfg), 0.0, 1e-12, "lr at final step");

    // Continuity: every increment is bounded by the larger of the warmup ramp
    // slope and the steepest cosine slope.
    const double bound = cfg.peak_lr *
                         std::max(1.0 / static_cast<double>(warmup),
                                  M_PI / (2.0 * static_cast<double>(total - warmup)));
    for (long s = 0; s < total; ++s) {
        const double delta = std::abs(lr_at(s + 1, total, cfg) - lr_at(s, total, cfg));
        expect(delta <= bound + 1e-15,
               "continuity at step " + std::to_string(s) + " delta " +
                   std::to_string(delta));
    }
}

// ---------------------------------------------------------------------------

struct Criterion {
    int number;
    std::string name;
    std::function<void()> fn;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "encoding golden suite", criterion_encodings},
        {2, "tokenizer contract", criterion_tokenizer},
        {3, "permutation invariance", criterion_permutation},
        {4, "gradient fidelity", criterion_gradients},
        {5, "average precision oracle equivalence", criterion_average_precision},
        {6, "overfit smoke", criterion_overfit},
        {7, "cross-modality generalization", criterion_cross_modality},
        {8, "forge protocol", criterion_forge_protocol},
        {9, "learning-rate schedule", criterion_schedule},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string verdict = "PASS";
        std::string detail;
        try {
            c.fn();
        } catch (const Failure& f) {
            verdict = "FAIL";
            detail = f.why;
            ++failures;
        } catch (const std::exception& e) {
            verdict = "FAIL";
            detail = e.what();
            ++failures;
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        std::printf("criterion %d (%s): %s (%.1f s)%s%s\n", c.number,
                    c.name.c_str(), verdict.c_str(), secs,
                    detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
