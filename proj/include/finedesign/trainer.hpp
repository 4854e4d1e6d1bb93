#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "finedesign/design.hpp"

namespace finedesign {

/// Fully connected layer; weights are row-major (outputs x inputs).
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    double& weight(std::size_t out, std::size_t in) { return weights[out * inputs + in]; }
    double weight(std::size_t out, std::size_t in) const { return weights[out * inputs + in]; }

    bool operator==(const DenseLayer&) const = default;
};

/// MLP with ReLU hidden activations and linear output logits. Also used as the
/// container for gradients and Adam moments, which share its shapes.
struct MlpParams {
    std::vector<std::size_t> architecture;  // [D, H..., K]
    std::vector<DenseLayer> layers;

    static MlpParams zeros(const std::vector<std::size_t>& architecture);

    std::size_t input_dim() const { return architecture.front(); }
    std::size_t output_dim() const { return architecture.back(); }
    std::size_t parameter_count() const;
    void fill(double value);
    bool all_finite() const;

    bool operator==(const MlpParams&) const = default;
};

struct TrainConfig {
    double lr0 = 1e-3;
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::vector<std::size_t> hidden = {16};
    std::uint64_t seed = 0;

    bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& config);
std::string train_config_to_json(const TrainConfig& config);
/// Missing keys keep their defaults.
TrainConfig train_config_from_json(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);

struct AdamState {
    MlpParams m;
    MlpParams v;
    std::uint64_t t = 0;

    static AdamState zeros_like(const MlpParams& params);
};

struct XentResult {
    double loss = 0.0;
    std::vector<double> grad_logits;
};

/// -log softmax(logits)[label] with max subtraction; gradient softmax - onehot.
XentResult softmax_xent(std::span<const double> logits, std::size_t label);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// lr0 * (1 + cos(pi * t / total)) / 2.
double cosine_lr(std::size_t t, std::size_t total, double lr0);

/// One bias-corrected Adam update in place. Throws NumericalError naming the
/// layer if any gradient entry is non-finite; nothing is modified then.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr, const TrainConfig& config);

/// He-normal weights, zero biases.
MlpParams init_params(const std::vector<std::size_t>& architecture, std::uint64_t seed);

std::vector<double> forward(const MlpParams& params, std::span<const double> features);

/// Mean cross-entropy over a batch of rows (row-major, params.input_dim()
/// columns). When `grads` is non-null it is overwritten with the gradient of
/// that mean.
double loss_and_gradient(const MlpParams& params, std::span<const double> features, std::span<const std::size_t> labels,
                         MlpParams* grads);

struct TrainedModel {
    MlpParams params;
    std::vector<std::string> class_names;
    TrainConfig config;
    std::vector<double> loss_trace;  // mean training loss per epoch
    std::string design_name;

    bool operator==(const TrainedModel&) const = default;
};

/// epochs * ceil(N / batch_size) Adam steps, cosine schedule per step,
/// reshuffled every epoch. Pure function of (dataset, config).
TrainedModel train(const LabeledDataset& dataset, const TrainConfig& config);

struct Prediction {
    std::vector<double> probabilities;
    std::size_t class_index = 0;  // argmax, lowest index on ties
};

Prediction predict(const TrainedModel& model, std::span<const double> features);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace finedesign
