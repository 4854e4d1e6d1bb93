#include "finedesign/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "finedesign/error.hpp"
#include "finedesign/rng.hpp"
#include "json.hpp"

namespace finedesign {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kModelVersion = 1;
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;

template <typename Fn>
void for_each_tensor(MlpParams& p, Fn&& fn) {
    for (auto& layer : p.layers) {
        fn(layer.weights);
        fn(layer.bias);
    }
}

void check_same_shape(const MlpParams& a, const MlpParams& b, const char* what) {
    if (a.architecture != b.architecture) throw ValidationError(std::string("shape mismatch: ") + what);
}

// Scratch buffers for one forward/backward pass.
struct Workspace {
    std::vector<std::vector<double>> pre;   // pre-activations per layer
    std::vector<std::vector<double>> post;  // inputs to each layer; post[0] is the sample
    std::vector<double> delta;
    std::vector<double> delta_prev;

    explicit Workspace(const MlpParams& p) {
        pre.resize(p.layers.size());
        post.resize(p.layers.size());
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            pre[l].resize(p.layers[l].outputs);
            post[l].resize(p.layers[l].inputs);
        }
    }
};

void forward_into(const MlpParams& p, std::span<const double> x, Workspace& ws) {
    std::copy(x.begin(), x.end(), ws.post[0].begin());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const DenseLayer& layer = p.layers[l];
        const auto& in = ws.post[l];
        auto& z = ws.pre[l];
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double* w = layer.weights.data() + o * layer.inputs;
            double acc = layer.bias[o];
            for (std::size_t i = 0; i < layer.inputs; ++i) acc += w[i] * in[i];
            z[o] = acc;
        }
        if (l + 1 < p.layers.size()) {
            auto& next = ws.post[l + 1];
            for (std::size_t o = 0; o < layer.outputs; ++o) next[o] = z[o] > 0.0 ? z[o] : 0.0;
        }
    }
}

std::vector<double> json_doubles(const ordered_json& j) { return j.get<std::vector<double>>(); }

}  // namespace

MlpParams MlpParams::zeros(const std::vector<std::size_t>& architecture) {
    if (architecture.size() < 2) throw ValidationError("architecture needs at least input and output widths");
    MlpParams p;
    p.architecture = architecture;
    for (std::size_t l = 0; l + 1 < architecture.size(); ++l) {
        if (architecture[l] == 0 || architecture[l + 1] == 0) throw ValidationError("layer widths must be positive");
        DenseLayer layer;
        layer.inputs = architecture[l];
        layer.outputs = architecture[l + 1];
        layer.weights.assign(layer.inputs * layer.outputs, 0.0);
        layer.bias.assign(layer.outputs, 0.0);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

std::size_t MlpParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
    return n;
}

void MlpParams::fill(double value) {
    for_each_tensor(*this, [value](std::vector<double>& t) { std::fill(t.begin(), t.end(), value); });
}

bool MlpParams::all_finite() const {
    for (const auto& layer : layers) {
        for (double w : layer.weights) if (!std::isfinite(w)) return false;
        for (double b : layer.bias) if (!std::isfinite(b)) return false;
    }
    return true;
}

void validate(const TrainConfig& c) {
    if (!(c.lr0 > 0.0) || !std::isfinite(c.lr0)) throw ValidationError("train config: lr0 must be positive");
    if (c.epochs == 0) throw ValidationError("train config: epochs must be positive");
    if (c.batch_size == 0) throw ValidationError("train config: batch_size must be positive");
    if (!(c.adam_beta1 > 0.0 && c.adam_beta1 < 1.0)) throw ValidationError("train config: adam_beta1 must be in (0,1)");
    if (!(c.adam_beta2 > 0.0 && c.adam_beta2 < 1.0)) throw ValidationError("train config: adam_beta2 must be in (0,1)");
    if (!(c.adam_eps > 0.0)) throw ValidationError("train config: adam_eps must be positive");
    for (auto h : c.hidden) {
        if (h == 0) throw ValidationError("train config: hidden widths must be positive");
    }
}

namespace {

ordered_json train_config_json(const TrainConfig& c) {
    ordered_json j;
    j["lr0"] = c.lr0;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["adam_beta1"] = c.adam_beta1;
    j["adam_beta2"] = c.adam_beta2;
    j["adam_eps"] = c.adam_eps;
    j["hidden"] = c.hidden;
    j["seed"] = c.seed;
    return j;
}

TrainConfig train_config_from(const ordered_json& j) {
    TrainConfig c;
    try {
        c.lr0 = j.value("lr0", c.lr0);
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
        c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
        c.adam_eps = j.value("adam_eps", c.adam_eps);
        c.hidden = j.value("hidden", c.hidden);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("train config: ") + e.what());
    }
    validate(c);
    return c;
}

}  // namespace

std::string train_config_to_json(const TrainConfig& config) { return train_config_json(config).dump(2) + "\n"; }

TrainConfig train_config_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("train config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("train config: expected a JSON object");
    return train_config_from(j);
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open train config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return train_config_from_json(ss.str());
}

AdamState AdamState::zeros_like(const MlpParams& params) {
    return AdamState{MlpParams::zeros(params.architecture), MlpParams::zeros(params.architecture), 0};
}

std::vector<double> softmax(std::span<const double> logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        probs[k] = std::exp(logits[k] - peak);
        total += probs[k];
    }
    for (double& p : probs) p /= total;
    return probs;
}

XentResult softmax_xent(std::span<const double> logits, std::size_t label) {
    if (logits.size() < 2 || label >= logits.size()) throw ValidationError("softmax_xent: bad label or logit count");
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double z : logits) total += std::exp(z - peak);
    const double log_total = std::log(total);

    XentResult r;
    r.loss = log_total - (logits[label] - peak);
    r.grad_logits.resize(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) r.grad_logits[k] = std::exp(logits[k] - peak - log_total);
    r.grad_logits[label] -= 1.0;
    return r;
}

double cosine_lr(std::size_t t, std::size_t total, double lr0) {
    if (total == 0 || t > total) throw ValidationError("cosine_lr: need 0 <= t <= total, total >= 1");
    const double progress = static_cast<double>(t) / static_cast<double>(total);
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, double lr, const TrainConfig& config) {
    check_same_shape(params, grads, "params vs grads");
    check_same_shape(params, state.m, "params vs first moment");
    check_same_shape(params, state.v, "params vs second moment");
    for (std::size_t l = 0; l < grads.layers.size(); ++l) {
        const auto& g = grads.layers[l];
        const bool finite = std::all_of(g.weights.begin(), g.weights.end(), [](double x) { return std::isfinite(x); }) &&
                            std::all_of(g.bias.begin(), g.bias.end(), [](double x) { return std::isfinite(x); });
        if (!finite) throw NumericalError("adam_step: non-finite gradient in layer " + std::to_string(l));
    }

    state.t += 1;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double t = static_cast<double>(state.t);
    const double correction1 = 1.0 - std::pow(b1, t);
    const double correction2 = 1.0 - std::pow(b2, t);

    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
        }
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        update(params.layers[l].weights, grads.layers[l].weights, state.m.layers[l].weights, state.v.layers[l].weights);
        update(params.layers[l].bias, grads.layers[l].bias, state.m.layers[l].bias, state.v.layers[l].bias);
    }
}

MlpParams init_params(const std::vector<std::size_t>& architecture, std::uint64_t seed) {
    MlpParams p = MlpParams::zeros(architecture);
    Rng rng(seed);
    for (auto& layer : p.layers) {
        const double scale = std::sqrt(2.0 / static_cast<double>(layer.inputs));
        for (double& w : layer.weights) w = rng.normal(0.0, scale);
    }
    return p;
}

std::vector<double> forward(const MlpParams& params, std::span<const double> features) {
    if (features.size() != params.input_dim()) {
        throw ValidationError("feature dimension " + std::to_string(features.size()) + " does not match model input " +
                              std::to_string(params.input_dim()));
    }
    Workspace ws(params);
    forward_into(params, features, ws);
    return ws.pre.back();
}

double loss_and_gradient(const MlpParams& params, std::span<const double> features, std::span<const std::size_t> labels,
                         MlpParams* grads) {
    const std::size_t dim = params.input_dim();
    if (labels.empty() || features.size() != labels.size() * dim) {
        throw ValidationError("loss_and_gradient: batch shape mismatch");
    }
    if (grads != nullptr) {
        if (grads->architecture != params.architecture) *grads = MlpParams::zeros(params.architecture);
        grads->fill(0.0);
    }
    const double inv_n = 1.0 / static_cast<double>(labels.size());
    const std::size_t depth = params.layers.size();
    Workspace ws(params);
    double total = 0.0;

    for (std::size_t n = 0; n < labels.size(); ++n) {
        forward_into(params, features.subspan(n * dim, dim), ws);
        XentResult x = softmax_xent(ws.pre.back(), labels[n]);
        total += x.loss;
        if (grads == nullptr) continue;

        ws.delta = std::move(x.grad_logits);
        for (double& d : ws.delta) d *= inv_n;
        for (std::size_t l = depth; l-- > 0;) {
            const DenseLayer& layer = params.layers[l];
            DenseLayer& g = grads->layers[l];
            const auto& in = ws.post[l];
            for (std::size_t o = 0; o < layer.outputs; ++o) {
                const double d = ws.delta[o];
                g.bias[o] += d;
                double* gw = g.weights.data() + o * layer.inputs;
                for (std::size_t i = 0; i < layer.inputs; ++i) gw[i] += d * in[i];
            }
            if (l == 0) break;
            // Back through W, then the ReLU of the previous layer.
            ws.delta_prev.assign(layer.inputs, 0.0);
            for (std::size_t o = 0; o < layer.outputs; ++o) {
                const double d = ws.delta[o];
                const double* w = layer.weights.data() + o * layer.inputs;
                for (std::size_t i = 0; i < layer.inputs; ++i) ws.delta_prev[i] += w[i] * d;
            }
            const auto& z_prev = ws.pre[l - 1];
            for (std::size_t i = 0; i < layer.inputs; ++i) {
                if (z_prev[i] <= 0.0) ws.delta_prev[i] = 0.0;
            }
            std::swap(ws.delta, ws.delta_prev);
        }
    }
    return total * inv_n;
}

TrainedModel train(const LabeledDataset& dataset, const TrainConfig& config) {
    validate(config);
    const std::size_t n = dataset.size();
    const std::size_t classes = dataset.class_names.size();
    if (n == 0) throw ValidationError("train: dataset is empty");
    if (classes < 2) throw ValidationError("train: need at least two classes");
    if (dataset.features.size() != n * dataset.feature_dim) throw ValidationError("train: feature buffer size mismatch");
    for (auto label : dataset.labels) {
        if (label >= classes) throw ValidationError("train: class index out of range");
    }

    std::vector<std::size_t> architecture{dataset.feature_dim};
    architecture.insert(architecture.end(), config.hidden.begin(), config.hidden.end());
    architecture.push_back(classes);

    TrainedModel model;
    model.class_names = dataset.class_names;
    model.config = config;
    model.design_name = dataset.design_name;
    model.params = init_params(architecture, hash_combine(config.seed, kInitStream));

    Rng shuffle_rng(hash_combine(config.seed, kShuffleStream));
    AdamState state = AdamState::zeros_like(model.params);
    MlpParams grads = MlpParams::zeros(architecture);

    const std::size_t batch = std::min(config.batch_size, n);
    const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const std::size_t total_steps = config.epochs * steps_per_epoch;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> batch_x;
    std::vector<std::size_t> batch_y;
    batch_x.reserve(batch * dataset.feature_dim);
    batch_y.reserve(batch);

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size, ++step) {
            const std::size_t end = std::min(start + config.batch_size, n);
            batch_x.clear();
            batch_y.clear();
            for (std::size_t i = start; i < end; ++i) {
                const auto row = dataset.row(order[i]);
                batch_x.insert(batch_x.end(), row.begin(), row.end());
                batch_y.push_back(dataset.labels[order[i]]);
            }
            const double loss = loss_and_gradient(model.params, batch_x, batch_y, &grads);
            if (!std::isfinite(loss)) {
                throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch));
            }
            epoch_loss += loss * static_cast<double>(end - start);
            try {
                adam_step(model.params, grads, state, cosine_lr(step, total_steps, config.lr0), config);
            } catch (const NumericalError& e) {
                throw NumericalError("train: epoch " + std::to_string(epoch) + ": " + e.what());
            }
        }
        model.loss_trace.push_back(epoch_loss / static_cast<double>(n));
    }
    return model;
}

Prediction predict(const TrainedModel& model, std::span<const double> features) {
    Prediction p;
    p.probabilities = softmax(forward(model.params, features));
    p.class_index = static_cast<std::size_t>(
        std::max_element(p.probabilities.begin(), p.probabilities.end()) - p.probabilities.begin());
    return p;
}

std::string model_to_json(const TrainedModel& model) {
    ordered_json j;
    j["version"] = kModelVersion;
    j["architecture"] = model.params.architecture;
    j["activation"] = "relu";
    j["class_names"] = model.class_names;
    j["design"] = model.design_name;
    j["config"] = train_config_json(model.config);
    j["loss_trace"] = model.loss_trace;
    j["layers"] = ordered_json::array();
    for (const auto& layer : model.params.layers) {
        ordered_json lj;
        lj["inputs"] = layer.inputs;
        lj["outputs"] = layer.outputs;
        lj["weights"] = layer.weights;
        lj["bias"] = layer.bias;
        j["layers"].push_back(std::move(lj));
    }
    return j.dump() + "\n";
}

TrainedModel model_from_json(const std::string& text) {
    TrainedModel model;
    try {
        const auto j = ordered_json::parse(text);
        const int version = j.at("version").get<int>();
        if (version != kModelVersion) throw ValidationError("model: unsupported version " + std::to_string(version));
        if (j.value("activation", std::string("relu")) != "relu") throw ValidationError("model: unsupported activation");
        model.params = MlpParams::zeros(j.at("architecture").get<std::vector<std::size_t>>());
        model.class_names = j.at("class_names").get<std::vector<std::string>>();
        model.design_name = j.value("design", std::string());
        model.config = train_config_from(j.at("config"));
        model.loss_trace = json_doubles(j.at("loss_trace"));
        const auto& layers = j.at("layers");
        if (layers.size() != model.params.layers.size()) throw ValidationError("model: layer count mismatch");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& layer = model.params.layers[l];
            auto weights = json_doubles(layers[l].at("weights"));
            auto bias = json_doubles(layers[l].at("bias"));
            if (weights.size() != layer.weights.size() || bias.size() != layer.bias.size())
                throw ValidationError("model: layer " + std::to_string(l) + " shape mismatch");
            layer.weights = std::move(weights);
            layer.bias = std::move(bias);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model: ") + e.what());
    }
    if (model.class_names.size() != model.params.output_dim()) throw ValidationError("model: class_names mismatch");
    if (!model.params.all_finite()) throw ValidationError("model: non-finite parameter");
    return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    const std::string text = model_to_json(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out.flush()) throw IoError("write failed for '" + path.string() + "'");
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace finedesign
