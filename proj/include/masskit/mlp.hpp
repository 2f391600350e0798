#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "masskit/encoding.hpp"
#include "masskit/hash.hpp"
#include "masskit/rng.hpp"

namespace masskit {

struct MlpTrainConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    int max_epochs = 2000;
    int patience = 100;  // epochs without validation-accuracy improvement
    std::uint64_t seed = 1;
    std::vector<std::size_t> hidden = {30, 18};
    bool shuffle = true;
};

struct PruneConfig {
    double prune_fraction = 0.15;  // share of the neuron pool removed per round
    int max_rounds = 5;
    double tolerance = 0.01;       // allowed validation-accuracy drop per accepted round
    int retrain_epochs = 200;
};

namespace detail {

inline double sigmoid(double z) {
    if (z > 500.0) z = 500.0;
    if (z < -500.0) z = -500.0;
    return 1.0 / (1.0 + std::exp(-z));
}

}  // namespace detail

// Fully connected feed-forward network, logistic activation on every
// non-input layer, single sigmoid output. input_map records which columns of
// the (fixed-width) encoded row feed the surviving input neurons, so a
// pruned network still scores full-width rows.
class MlpNetwork {
public:
    MlpNetwork() = default;

    static MlpNetwork zeros(const std::vector<std::size_t>& sizes) {
        MlpNetwork net;
        net.init_shape(sizes);
        return net;
    }

    // Weights and biases drawn uniformly from [-0.5, 0.5], layer by layer.
    static MlpNetwork random(const std::vector<std::size_t>& sizes, Rng& rng) {
        MlpNetwork net;
        net.init_shape(sizes);
        for (std::size_t l = 0; l < net.weights_.size(); ++l) {
            for (auto& row : net.weights_[l]) {
                for (double& w : row) w = rng.uniform(-0.5, 0.5);
            }
            for (double& b : net.biases_[l]) b = rng.uniform(-0.5, 0.5);
        }
        return net;
    }

    const std::vector<std::size_t>& sizes() const { return sizes_; }
    const std::vector<std::size_t>& input_map() const { return input_map_; }
    std::size_t layer_count() const { return weights_.size(); }

    std::vector<std::vector<std::vector<double>>>& weights() { return weights_; }
    const std::vector<std::vector<std::vector<double>>>& weights() const { return weights_; }
    std::vector<std::vector<double>>& biases() { return biases_; }
    const std::vector<std::vector<double>>& biases() const { return biases_; }

    // Activations of every layer, input first. `row` must be at least as wide
    // as the largest mapped column.
    std::vector<std::vector<double>> activations(std::span<const double> row) const {
        std::vector<std::vector<double>> acts(sizes_.size());
        acts[0].resize(sizes_[0]);
        for (std::size_t i = 0; i < sizes_[0]; ++i) {
            std::size_t col = input_map_[i];
            if (col >= row.size()) throw std::invalid_argument("mlp: input row narrower than network input");
            acts[0][i] = row[col];
        }
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            acts[l + 1].resize(sizes_[l + 1]);
            for (std::size_t j = 0; j < sizes_[l + 1]; ++j) {
                double z = biases_[l][j];
                const auto& wrow = weights_[l][j];
                for (std::size_t i = 0; i < sizes_[l]; ++i) z += wrow[i] * acts[l][i];
                acts[l + 1][j] = detail::sigmoid(z);
            }
        }
        return acts;
    }

    double forward(std::span<const double> row) const {
        if (row.size() < min_row_width()) throw std::invalid_argument("mlp: input row narrower than network input");
        return activations(row).back()[0];
    }

    std::size_t min_row_width() const {
        std::size_t w = 0;
        for (std::size_t col : input_map_) w = std::max(w, col + 1);
        return w;
    }

    void set_input_map(std::vector<std::size_t> map) {
        if (map.size() != sizes_[0]) throw std::invalid_argument("mlp: input map size mismatch");
        input_map_ = std::move(map);
    }

private:
    void init_shape(const std::vector<std::size_t>& sizes) {
        if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output layers");
        for (std::size_t s : sizes) {
            if (s == 0) throw std::invalid_argument("mlp: zero-width layer");
        }
        if (sizes.back() != 1) throw std::invalid_argument("mlp: output layer must have exactly 1 neuron");
        sizes_ = sizes;
        weights_.resize(sizes.size() - 1);
        biases_.resize(sizes.size() - 1);
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            weights_[l].assign(sizes[l + 1], std::vector<double>(sizes[l], 0.0));
            biases_[l].assign(sizes[l + 1], 0.0);
        }
        input_map_.resize(sizes[0]);
        std::iota(input_map_.begin(), input_map_.end(), std::size_t{0});
    }

    std::vector<std::size_t> sizes_;
    std::vector<std::vector<std::vector<double>>> weights_;  // [layer][to][from]
    std::vector<std::vector<double>> biases_;                // [layer][to]
    std::vector<std::size_t> input_map_;
};

// E = 1/2 * sum (desired - actual)^2
inline double sse(std::span<const double> desired, std::span<const double> actual) {
    if (desired.size() != actual.size()) throw std::invalid_argument("sse: length mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < desired.size(); ++i) {
        double d = desired[i] - actual[i];
        e += d * d;
    }
    return 0.5 * e;
}

struct MlpGradients {
    std::vector<std::vector<std::vector<double>>> weights;
    std::vector<std::vector<double>> biases;
};

// Gradient of the single-sample squared error wrt every weight and bias.
inline MlpGradients mlp_gradients(const MlpNetwork& net, std::span<const double> row, double target) {
    const auto acts = net.activations(row);
    const std::size_t L = net.layer_count();
    MlpGradients g;
    g.weights.resize(L);
    g.biases.resize(L);

    std::vector<double> delta{(acts.back()[0] - target) * acts.back()[0] * (1.0 - acts.back()[0])};
    for (std::size_t l = L; l-- > 0;) {
        const auto& a_prev = acts[l];
        g.biases[l] = delta;
        g.weights[l].resize(delta.size());
        for (std::size_t j = 0; j < delta.size(); ++j) {
            g.weights[l][j].resize(a_prev.size());
            for (std::size_t i = 0; i < a_prev.size(); ++i) g.weights[l][j][i] = delta[j] * a_prev[i];
        }
        if (l == 0) break;
        std::vector<double> prev_delta(a_prev.size(), 0.0);
        for (std::size_t i = 0; i < a_prev.size(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < delta.size(); ++j) sum += net.weights()[l][j][i] * delta[j];
            prev_delta[i] = sum * a_prev[i] * (1.0 - a_prev[i]);
        }
        delta = std::move(prev_delta);
    }
    return g;
}

// Velocity buffers for momentum; shaped like the network, persisted across
// epochs by the caller.
struct MomentumState {
    std::vector<std::vector<std::vector<double>>> weights;
    std::vector<std::vector<double>> biases;

    static MomentumState zeros_like(const MlpNetwork& net) {
        MomentumState s;
        s.weights = net.weights();
        s.biases = net.biases();
        for (auto& layer : s.weights) {
            for (auto& row : layer) std::fill(row.begin(), row.end(), 0.0);
        }
        for (auto& layer : s.biases) std::fill(layer.begin(), layer.end(), 0.0);
        return s;
    }
};

// One pass of per-sample gradient descent with momentum, in (optionally
// shuffled) presentation order. Returns the summed squared error of the
// epoch's forward passes.
inline double backprop_epoch(MlpNetwork& net, const std::vector<std::vector<double>>& rows,
                             const std::vector<int>& labels, const MlpTrainConfig& cfg,
                             MomentumState& momentum, Rng& order_rng) {
    if (rows.size() != labels.size()) throw std::invalid_argument("backprop_epoch: rows/labels mismatch");
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle) order_rng.shuffle(order);

    double epoch_error = 0.0;
    for (std::size_t idx : order) {
        const double target = static_cast<double>(labels[idx]);
        MlpGradients g = mlp_gradients(net, rows[idx], target);
        const double out = net.forward(rows[idx]);  // pre-update error for reporting
        epoch_error += 0.5 * (target - out) * (target - out);
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            auto& w = net.weights()[l];
            auto& b = net.biases()[l];
            for (std::size_t j = 0; j < w.size(); ++j) {
                for (std::size_t i = 0; i < w[j].size(); ++i) {
                    double& v = momentum.weights[l][j][i];
                    v = cfg.momentum * v - cfg.learning_rate * g.weights[l][j][i];
                    w[j][i] += v;
                }
                double& vb = momentum.biases[l][j];
                vb = cfg.momentum * vb - cfg.learning_rate * g.biases[l][j];
                b[j] += vb;
            }
        }
    }
    return epoch_error;
}

inline double mlp_score(const MlpNetwork& net, std::span<const double> row) { return net.forward(row); }

// Classification rule: malignant iff score >= 0.5.
inline int mlp_classify(double score) { return score >= 0.5 ? 1 : 0; }

inline double mlp_accuracy(const MlpNetwork& net, const std::vector<std::vector<double>>& rows,
                           const std::vector<int>& labels) {
    if (rows.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (mlp_classify(net.forward(rows[i])) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

struct MlpTrainResult {
    MlpNetwork net;  // best-validation snapshot
    std::vector<double> epoch_error;
    std::vector<double> val_accuracy;
    int best_epoch = -1;
    double best_val_accuracy = 0.0;
};

// Epoch loop with early stopping on validation accuracy; keeps and returns
// the snapshot that scored best.
inline MlpTrainResult train_mlp(MlpNetwork initial, const std::vector<std::vector<double>>& train_rows,
                                const std::vector<int>& train_labels,
                                const std::vector<std::vector<double>>& val_rows,
                                const std::vector<int>& val_labels, const MlpTrainConfig& cfg) {
    if (train_rows.empty() || val_rows.empty()) throw std::invalid_argument("train_mlp: empty partition");
    if (cfg.max_epochs < 1) throw std::invalid_argument("train_mlp: max_epochs must be >= 1");

    MlpTrainResult result;
    MlpNetwork net = std::move(initial);
    MomentumState momentum = MomentumState::zeros_like(net);
    Rng order_rng(derive_seed(cfg.seed, 0x0e70c5));

    result.net = net;
    int wait = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        double err = backprop_epoch(net, train_rows, train_labels, cfg, momentum, order_rng);
        if (!std::isfinite(err)) {
            throw std::runtime_error("train_mlp: non-finite error at epoch " + std::to_string(epoch));
        }
        double acc = mlp_accuracy(net, val_rows, val_labels);
        result.epoch_error.push_back(err);
        result.val_accuracy.push_back(acc);
        if (result.best_epoch < 0 || acc > result.best_val_accuracy) {
            result.best_val_accuracy = acc;
            result.best_epoch = epoch;
            result.net = net;
            wait = 0;
        } else if (++wait >= cfg.patience) {
            break;
        }
    }
    return result;
}

inline MlpTrainResult train_mlp(const FeatureMatrix& train, const FeatureMatrix& val,
                                const MlpTrainConfig& cfg) {
    std::vector<std::size_t> sizes;
    sizes.push_back(train.width());
    for (std::size_t h : cfg.hidden) sizes.push_back(h);
    sizes.push_back(1);
    Rng init_rng(cfg.seed);
    return train_mlp(MlpNetwork::random(sizes, init_rng), train.rows, train.labels, val.rows, val.labels, cfg);
}

namespace detail {

struct NeuronRef {
    double importance;
    int layer;          // -1 = input neuron, otherwise hidden layer index (0-based)
    std::size_t index;  // neuron index within the layer

    bool operator<(const NeuronRef& o) const {
        if (importance != o.importance) return importance < o.importance;
        if (layer != o.layer) return layer < o.layer;
        return index < o.index;
    }
};

// Removes the given input (-1) / hidden-layer neurons and rewires the
// surrounding weight matrices.
inline MlpNetwork remove_neurons(const MlpNetwork& net, const std::vector<NeuronRef>& victims) {
    const auto& sizes = net.sizes();
    std::vector<std::vector<bool>> keep(sizes.size());
    for (std::size_t l = 0; l < sizes.size(); ++l) keep[l].assign(sizes[l], true);
    for (const auto& v : victims) keep[static_cast<std::size_t>(v.layer + 1)][v.index] = false;

    std::vector<std::size_t> new_sizes;
    for (std::size_t l = 0; l < sizes.size(); ++l) {
        std::size_t c = 0;
        for (bool k : keep[l]) c += k ? 1 : 0;
        new_sizes.push_back(c);
    }
    MlpNetwork out = MlpNetwork::zeros(new_sizes);

    std::vector<std::size_t> new_map;
    for (std::size_t i = 0; i < sizes[0]; ++i) {
        if (keep[0][i]) new_map.push_back(net.input_map()[i]);
    }
    out.set_input_map(std::move(new_map));

    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        std::size_t jj = 0;
        for (std::size_t j = 0; j < sizes[l + 1]; ++j) {
            if (!keep[l + 1][j]) continue;
            std::size_t ii = 0;
            for (std::size_t i = 0; i < sizes[l]; ++i) {
                if (!keep[l][i]) continue;
                out.weights()[l][jj][ii] = net.weights()[l][j][i];
                ++ii;
            }
            out.biases()[l][jj] = net.biases()[l][j];
            ++jj;
        }
    }
    return out;
}

}  // namespace detail

// Magnitude pruning: score every input and hidden neuron by the L1 norm of
// its outgoing weights, drop the weakest prune_fraction, retrain briefly, and
// keep the round only if validation accuracy holds up within tolerance.
// Stops on the first rejected round; every layer keeps at least one neuron.
inline MlpNetwork prune_mlp(const MlpNetwork& trained, const std::vector<std::vector<double>>& train_rows,
                            const std::vector<int>& train_labels,
                            const std::vector<std::vector<double>>& val_rows,
                            const std::vector<int>& val_labels, const PruneConfig& pcfg,
                            const MlpTrainConfig& cfg) {
    if (pcfg.prune_fraction <= 0.0 || pcfg.prune_fraction >= 1.0) {
        throw std::invalid_argument("prune_mlp: prune_fraction must be in (0,1)");
    }
    MlpNetwork current = trained;
    double current_acc = mlp_accuracy(current, val_rows, val_labels);

    for (int round = 0; round < pcfg.max_rounds; ++round) {
        const auto& sizes = current.sizes();
        std::vector<detail::NeuronRef> pool;
        for (std::size_t i = 0; i < sizes[0]; ++i) {
            double imp = 0.0;
            for (std::size_t j = 0; j < sizes[1]; ++j) imp += std::fabs(current.weights()[0][j][i]);
            pool.push_back({imp, -1, i});
        }
        for (std::size_t l = 1; l + 1 < sizes.size(); ++l) {
            for (std::size_t j = 0; j < sizes[l]; ++j) {
                double imp = 0.0;
                for (std::size_t k = 0; k < sizes[l + 1]; ++k) imp += std::fabs(current.weights()[l][k][j]);
                pool.push_back({imp, static_cast<int>(l) - 1, j});
            }
        }
        std::sort(pool.begin(), pool.end());

        std::size_t want = static_cast<std::size_t>(std::floor(pcfg.prune_fraction * static_cast<double>(pool.size())));
        if (want == 0) want = 1;
        std::vector<std::size_t> remaining(sizes.size());
        for (std::size_t l = 0; l < sizes.size(); ++l) remaining[l] = sizes[l];
        std::vector<detail::NeuronRef> victims;
        for (const auto& cand : pool) {
            if (victims.size() == want) break;
            std::size_t layer = static_cast<std::size_t>(cand.layer + 1);
            if (remaining[layer] <= 1) continue;  // never empty a layer
            --remaining[layer];
            victims.push_back(cand);
        }
        if (victims.empty()) break;

        MlpNetwork candidate = detail::remove_neurons(current, victims);
        MlpTrainConfig retrain_cfg = cfg;
        retrain_cfg.max_epochs = pcfg.retrain_epochs;
        retrain_cfg.patience = std::min(cfg.patience, pcfg.retrain_epochs);
        retrain_cfg.seed = derive_seed(cfg.seed, 0xF00D + static_cast<std::uint64_t>(round));
        MlpTrainResult retrained =
            train_mlp(std::move(candidate), train_rows, train_labels, val_rows, val_labels, retrain_cfg);

        if (current_acc - retrained.best_val_accuracy <= pcfg.tolerance) {
            current = std::move(retrained.net);
            current_acc = retrained.best_val_accuracy;
        } else {
            break;  // revert this round and stop
        }
    }
    return current;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json mlp_config_json(const MlpTrainConfig& cfg) {
    return {{"learning_rate", cfg.learning_rate}, {"momentum", cfg.momentum},
            {"max_epochs", cfg.max_epochs},       {"patience", cfg.patience},
            {"seed", cfg.seed},                   {"hidden", cfg.hidden},
            {"shuffle", cfg.shuffle}};
}

inline nlohmann::json mlp_to_json(const MlpNetwork& net, const MlpTrainConfig& cfg) {
    nlohmann::json j;
    j["format"] = "masskit/mlp";
    j["version"] = 1;
    j["sizes"] = net.sizes();
    j["input_map"] = net.input_map();
    j["weights"] = net.weights();
    j["biases"] = net.biases();
    j["config"] = mlp_config_json(cfg);
    j["config_fingerprint"] = sha256_hex(mlp_config_json(cfg).dump());
    return j;
}

inline MlpNetwork mlp_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "masskit/mlp") throw std::runtime_error("not an mlp model file");
    MlpNetwork net = MlpNetwork::zeros(j.at("sizes").get<std::vector<std::size_t>>());
    net.set_input_map(j.at("input_map").get<std::vector<std::size_t>>());
    auto w = j.at("weights").get<std::vector<std::vector<std::vector<double>>>>();
    auto b = j.at("biases").get<std::vector<std::vector<double>>>();
    if (w.size() != net.layer_count() || b.size() != net.layer_count()) {
        throw std::runtime_error("mlp model file: shape mismatch");
    }
    for (std::size_t l = 0; l < w.size(); ++l) {
        if (w[l].size() != net.sizes()[l + 1] || b[l].size() != net.sizes()[l + 1]) {
            throw std::runtime_error("mlp model file: shape mismatch");
        }
        for (const auto& row : w[l]) {
            if (row.size() != net.sizes()[l]) throw std::runtime_error("mlp model file: shape mismatch");
        }
    }
    net.weights() = std::move(w);
    net.biases() = std::move(b);
    return net;
}

}  // namespace masskit
