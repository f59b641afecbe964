#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "atomizer/latent_encoder.hpp"
#include "atomizer/modality_forge.hpp"

namespace atomizer {

struct TrainConfig {
    int epochs = 40;
    int warmup_epochs = 5;
    double peak_lr = 3e-4;  // desk-scale default; the reference setup ran
    int batch_size = 32;    // batch 1024 on two data-parallel GPUs
    uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;

    void validate() const {
        if (epochs < 1 || warmup_epochs < 0 || warmup_epochs >= epochs)
            throw ConfigError("TrainConfig: need 0 <= warmup_epochs < epochs");
        if (peak_lr <= 0.0) throw ConfigError("TrainConfig: peak_lr must be > 0");
        if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    }
};

// Mean multilabel BCE from logits, stable log-sum-exp form, with its
// gradient d loss / d logits.
struct BceResult {
    double loss = 0.0;
    std::vector<double> grad;
};
BceResult bce_loss(const std::vector<double>& logits, const std::vector<int>& target);

// Linear warmup to peak_lr, then cosine annealing to exactly zero.
double lr_at(long step, long total_steps, const TrainConfig& cfg);

// Mean precision-at-hit over positives, scores descending. Tied scores are
// credited with their whole group's precision, making the value independent
// of within-tie order and exactly invariant under uniform duplication.
// Empty when the class has no positives (AP undefined).
std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<int>& labels);

struct EvalReport {
    std::string modality_name;
    size_t sample_count = 0;
    std::vector<double> per_class_ap;  // NaN where undefined
    double map = 0.0;                  // mean over defined classes
    double subset_accuracy = 0.0;
    double micro_accuracy = 0.0;
    int undefined_classes = 0;
};

EvalReport evaluate(const ParameterStore<float>& params,
                    const std::vector<Sample>& dataset,
                    const EncoderConfig& encoder_cfg, const CodecBundle& codecs,
                    const std::string& modality_name = "");

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_map = 0.0;
    double val_subset_acc = 0.0;
    double val_micro_acc = 0.0;
};

struct TrainResult {
    ParameterStore<float> best_params;  // by val mAP (final params if no val)
    ParameterStore<float> final_params;
    std::vector<EpochRecord> log;
    int best_epoch = -1;
};

// Seeded end-to-end training over the manifest's train split, validating on
// the val split each epoch. AdamW with the lr_at schedule. On a numeric
// failure the last completed epoch's state is returned.
TrainResult train(const std::vector<Sample>& dataset, const SplitManifest& manifest,
                  const TrainConfig& cfg, const EncoderConfig& encoder_cfg,
                  const CodecBundle& codecs,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace atomizer
