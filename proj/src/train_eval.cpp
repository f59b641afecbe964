#include "atomizer/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

namespace atomizer {

BceResult bce_loss(const std::vector<double>& logits, const std::vector<int>& target) {
    if (logits.size() != target.size() || logits.empty())
        throw ConfigError("bce_loss: logits/target size mismatch");
    BceResult out;
    out.grad.resize(logits.size());
    const double inv_n = 1.0 / static_cast<double>(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        const double t = static_cast<double>(target[i]);
        if (!std::isfinite(z)) throw NumericError("bce_loss: non-finite logit");
        out.loss += (std::max(z, 0.0) - t * z + std::log1p(std::exp(-std::abs(z)))) * inv_n;
        out.grad[i] = (1.0 / (1.0 + std::exp(-z)) - t) * inv_n;
    }
    return out;
}

double lr_at(long step, long total_steps, const TrainConfig& cfg) {
    cfg.validate();
    if (step < 0 || step > total_steps)
        throw ConfigError("lr_at: step outside [0, total_steps]");
    const long warmup_steps =
        total_steps * cfg.warmup_epochs / cfg.epochs;
    if (warmup_steps > 0 && step <= warmup_steps)
        return cfg.peak_lr * static_cast<double>(step) / warmup_steps;
    const double progress =
        static_cast<double>(step - warmup_steps) /
        static_cast<double>(total_steps - warmup_steps);
    return cfg.peak_lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ConfigError("average_precision: size mismatch");
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    // Tie-aware precision-at-hit: every positive in a tied-score group is
    // credited with the precision of the whole group's boundary, so the
    // result does not depend on within-tie order and is exactly invariant
    // under uniform duplication of the dataset.
    double hits = 0.0, sum = 0.0;
    size_t rank = 0;
    while (rank < n) {
        size_t end = rank;
        size_t group_hits = 0;
        while (end < n && scores[order[end]] == scores[order[rank]]) {
            group_hits += static_cast<size_t>(labels[order[end]] == 1);
            ++end;
        }
        const double prec = (hits + static_cast<double>(group_hits)) /
                            static_cast<double>(end);
        for (size_t i = 0; i < group_hits; ++i) sum += prec;
        hits += static_cast<double>(group_hits);
        rank = end;
    }
    if (hits == 0.0) return std::nullopt;
    return sum / hits;
}

EvalReport evaluate(const ParameterStore<float>& params,
                    const std::vector<Sample>& dataset,
                    const EncoderConfig& encoder_cfg, const CodecBundle& codecs,
                    const std::string& modality_name) {
    if (dataset.empty()) throw ConfigError("evaluate: empty dataset");
    const int nc = encoder_cfg.num_classes;
    const size_t n = dataset.size();
    std::vector<std::vector<double>> scores(
        static_cast<size_t>(nc), std::vector<double>(n));
    std::vector<std::vector<int>> labels(static_cast<size_t>(nc),
                                         std::vector<int>(n));
    size_t subset_hits = 0, micro_hits = 0;
    for (size_t i = 0; i < n; ++i) {
        const TokenSet tokens = tokenize(dataset[i], codecs);
        auto logits =
            forward_logits<float>(tokens.tokens, params, encoder_cfg, Mode::kEval, 0);
        if (static_cast<int>(dataset[i].target.size()) != nc)
            throw ConfigError("evaluate: target width != num_classes");
        bool all_match = true;
        for (int c = 0; c < nc; ++c) {
            const double z = logits->value(0, c);
            scores[static_cast<size_t>(c)][i] = 1.0 / (1.0 + std::exp(-z));
            labels[static_cast<size_t>(c)][i] = dataset[i].target[static_cast<size_t>(c)];
            const int pred = z > 0.0 ? 1 : 0;
            if (pred == dataset[i].target[static_cast<size_t>(c)])
                ++micro_hits;
            else
                all_match = false;
        }
        if (all_match) ++subset_hits;
    }

    EvalReport report;
    report.modality_name = modality_name;
    report.sample_count = n;
    report.per_class_ap.assign(static_cast<size_t>(nc),
                               std::numeric_limits<double>::quiet_NaN());
    double ap_sum = 0.0;
    int defined = 0;
    for (int c = 0; c < nc; ++c) {
        auto ap = average_precision(scores[static_cast<size_t>(c)],
                                    labels[static_cast<size_t>(c)]);
        if (ap) {
            report.per_class_ap[static_cast<size_t>(c)] = *ap;
            ap_sum += *ap;
            ++defined;
        } else {
            ++report.undefined_classes;
            std::cerr << "[eval] warning: class " << c
                      << " has no positives; excluded from mAP\n";
        }
    }
    if (defined == 0) throw ConfigError("evaluate: no class has positives");
    report.map = ap_sum / defined;
    report.subset_accuracy = static_cast<double>(subset_hits) / n;
    report.micro_accuracy =
        static_cast<double>(micro_hits) / (n * static_cast<size_t>(nc));
    return report;
}

namespace {

struct AdamState {
    std::vector<MatF> m;
    std::vector<MatF> v;
    long t = 0;
};

ParameterStore<float> clone_params(const ParameterStore<float>& src) {
    ParameterStore<float> out;
    for (const auto& [name, var] : src.entries) out.add(name, var->value);
    return out;
}

void adam_step(ParameterStore<float>& ps, AdamState& st, const TrainConfig& cfg,
               double lr) {
    ++st.t;
    const float b1 = static_cast<float>(cfg.beta1);
    const float b2 = static_cast<float>(cfg.beta2);
    const float corr1 = 1.0f - std::pow(b1, static_cast<float>(st.t));
    const float corr2 = 1.0f - std::pow(b2, static_cast<float>(st.t));
    const float flr = static_cast<float>(lr);
    const float wd = static_cast<float>(cfg.weight_decay);
    for (size_t i = 0; i < ps.entries.size(); ++i) {
        auto& var = ps.entries[i].second;
        auto& m = st.m[i];
        auto& v = st.v[i];
        m = b1 * m + (1.0f - b1) * var->grad;
        v = (b2 * v.array() + (1.0f - b2) * var->grad.array().square()).matrix();
        const auto m_hat = (m.array() / corr1).eval();
        const auto v_hat = (v.array() / corr2).eval();
        var->value.array() -=
            flr * (m_hat / (v_hat.sqrt() + static_cast<float>(cfg.adam_eps)) +
                   wd * var->value.array());
    }
}

}  // namespace

TrainResult train(const std::vector<Sample>& dataset, const SplitManifest& manifest,
                  const TrainConfig& cfg, const EncoderConfig& encoder_cfg,
                  const CodecBundle& codecs,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
    cfg.validate();
    encoder_cfg.validate();
    if (dataset.size() != manifest.records.size())
        throw ConfigError("train: dataset/manifest size mismatch");

    std::vector<size_t> train_idx, val_idx;
    for (size_t i = 0; i < manifest.records.size(); ++i) {
        if (manifest.records[i].split == Split::kTrain) train_idx.push_back(i);
        if (manifest.records[i].split == Split::kVal) val_idx.push_back(i);
    }
    if (train_idx.empty()) throw ConfigError("train: no train samples in manifest");

    ParameterStore<float> params = init_parameters<float>(
        encoder_cfg, codecs.token_dim(), derive_seed(cfg.seed, 0xA11));
    AdamState adam;
    for (const auto& [_, var] : params.entries) {
        adam.m.push_back(MatF::Zero(var->value.rows(), var->value.cols()));
        adam.v.push_back(MatF::Zero(var->value.rows(), var->value.cols()));
    }

    const long steps_per_epoch = static_cast<long>(
        (train_idx.size() + cfg.batch_size - 1) / cfg.batch_size);
    const long total_steps = steps_per_epoch * cfg.epochs;

    TrainResult result;
    result.final_params = clone_params(params);
    double best_map = -1.0;
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x5FF));
    long global_step = 0;

    std::vector<Sample> val_samples;
    for (size_t i : val_idx) val_samples.push_back(dataset[i]);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), shuffle_rng);
        double epoch_loss = 0.0;
        long epoch_batches = 0;
        double last_lr = 0.0;
        try {
            for (size_t off = 0; off < train_idx.size();
                 off += static_cast<size_t>(cfg.batch_size)) {
                const size_t batch_end =
                    std::min(off + static_cast<size_t>(cfg.batch_size),
                             train_idx.size());
                const float inv_batch =
                    1.0f / static_cast<float>(batch_end - off);
                params.zero_grad();
                double batch_loss = 0.0;
                for (size_t k = off; k < batch_end; ++k) {
                    const Sample& sample = dataset[train_idx[k]];
                    const TokenSet tokens = tokenize(sample, codecs);
                    const uint64_t step_seed = derive_seed(
                        cfg.seed,
                        0xBEEF0000ULL + static_cast<uint64_t>(global_step) * 4096 + k);
                    auto logits = forward_logits<float>(
                        tokens.tokens, params, encoder_cfg, Mode::kTrain, step_seed);
                    MatF target(1, encoder_cfg.num_classes);
                    for (int c = 0; c < encoder_cfg.num_classes; ++c)
                        target(0, c) =
                            static_cast<float>(sample.target[static_cast<size_t>(c)]);
                    auto loss = ad::scale(
                        ad::bce_with_logits_mean(logits, target), inv_batch);
                    batch_loss += static_cast<double>(loss->value(0, 0));
                    ad::backward(loss);
                }
                ++global_step;
                last_lr = lr_at(global_step, total_steps, cfg);
                adam_step(params, adam, cfg, last_lr);
                epoch_loss += batch_loss;
                ++epoch_batches;
            }
        } catch (const NumericError& e) {
            std::cerr << "[train] numeric failure in epoch " << epoch + 1 << ": "
                      << e.what() << "; keeping last completed state\n";
            break;
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.lr = last_lr;
        rec.train_loss = epoch_loss / std::max<long>(1, epoch_batches);
        if (!val_samples.empty()) {
            EvalReport val =
                evaluate(params, val_samples, encoder_cfg, codecs, "val");
            rec.val_map = val.map;
            rec.val_subset_acc = val.subset_accuracy;
            rec.val_micro_acc = val.micro_accuracy;
            if (val.map > best_map) {
                best_map = val.map;
                result.best_params = clone_params(params);
                result.best_epoch = epoch + 1;
            }
        }
        result.log.push_back(rec);
        result.final_params = clone_params(params);
        if (on_epoch) on_epoch(rec);
    }

    if (result.best_epoch < 0) {
        result.best_params = clone_params(params);
        result.best_epoch = static_cast<int>(result.log.size());
    }
    return result;
}

}  // namespace atomizer
