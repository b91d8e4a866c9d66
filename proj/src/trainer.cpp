// SPDX-License-Identifier: Apache-2.0

#include "mcan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "mcan/errors.hpp"
#include "mcan/rng.hpp"
#include "mcan/robustness.hpp"

namespace mcan {

std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::full: return "full";
        case Ablation::no_recon: return "no_recon";
        case Ablation::no_multilabel: return "no_multilabel";
        default: return "no_both";
    }
}

Ablation ablation_from_string(const std::string& s) {
    if (s == "full") return Ablation::full;
    if (s == "no_recon") return Ablation::no_recon;
    if (s == "no_multilabel") return Ablation::no_multilabel;
    if (s == "no_both") return Ablation::no_both;
    throw ValueError("unknown ablation '" + s + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ValueError("epochs must be >= 1");
    if (batch_size < 1) throw ValueError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ValueError("learning_rate must be > 0");
    if (clip_norm < 0.0) throw ValueError("clip_norm must be >= 0");
    loss_weights.validate();
}

bool TrainConfig::wants_reconstructor() const {
    return ablation == Ablation::full || ablation == Ablation::no_multilabel;
}

bool TrainConfig::wants_multilabel() const {
    return ablation == Ablation::full || ablation == Ablation::no_recon;
}

void TrainConfig::apply_ablation(NetConfig& net_config) const {
    net_config.enable_reconstructor = wants_reconstructor();
    net_config.enable_multilabel = wants_multilabel();
}

void sgd_step(Tensor& param, double lr) {
    if (!param.has_grad()) return;
    auto& values = param.raw_values();
    const auto grad = param.grad();
    for (size_t i = 0; i < values.size(); ++i) values[i] -= lr * grad[i];
}

void adam_step(Tensor& param, AdamState& state, double lr, double beta1, double beta2,
               double eps, int64_t t) {
    if (t < 1) throw ValueError("adam step count must be >= 1");
    auto& values = param.raw_values();
    if (state.m.empty()) {
        state.m.assign(values.size(), 0.0);
        state.v.assign(values.size(), 0.0);
    }
    if (!param.has_grad()) {
        // zero gradient still decays the moments
        for (size_t i = 0; i < values.size(); ++i) {
            state.m[i] *= beta1;
            state.v[i] *= beta2;
        }
    } else {
        const auto grad = param.grad();
        for (size_t i = 0; i < values.size(); ++i) {
            state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
            state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        }
    }
    const double bc1 = 1.0 - std::pow(beta1, (double)t);
    const double bc2 = 1.0 - std::pow(beta2, (double)t);
    for (size_t i = 0; i < values.size(); ++i) {
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

namespace {

const char* first_non_finite(const LossBreakdown& bd) {
    if (!std::isfinite(bd.l_b)) return "l_b";
    if (!std::isfinite(bd.l_m)) return "l_m";
    if (!std::isfinite(bd.l_r)) return "l_r";
    if (!std::isfinite(bd.l_mask_l1)) return "l_mask_l1";
    if (!std::isfinite(bd.total_value)) return "total";
    return nullptr;
}

void clip_gradients(std::vector<std::pair<std::string, Tensor>>& params, double clip_norm) {
    double sq = 0.0;
    for (auto& [name, p] : params) {
        if (!p.has_grad()) continue;
        for (double g : p.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm <= clip_norm || norm == 0.0) return;
    const double scale = clip_norm / norm;
    for (auto& [name, p] : params) {
        if (!p.has_grad()) continue;
        for (double& g : p.grad_ref()) g *= scale;
    }
}

}  // namespace

TrainTrace train(MultiAttrNet& net, const std::vector<Sample>& train_data,
                 const std::vector<Sample>& holdout, const TrainConfig& config,
                 bool log_progress) {
    config.validate();
    if (train_data.empty()) throw ValueError("training data must be nonempty");
    if (net.config().enable_reconstructor != config.wants_reconstructor() ||
        net.config().enable_multilabel != config.wants_multilabel()) {
        throw ValueError("network components do not match the ablation '" +
                         to_string(config.ablation) + "'");
    }

    auto params = net.named_parameters();
    std::map<std::string, AdamState> adam_states;
    int64_t step = 0;

    Rng shuffle_rng(config.seed);
    std::vector<int> indices(train_data.size());
    std::iota(indices.begin(), indices.end(), 0);

    TrainTrace trace;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(indices);

        EpochStats stats;
        int64_t seen = 0;
        for (size_t start = 0; start < indices.size(); start += config.batch_size) {
            const size_t end = std::min(indices.size(), start + config.batch_size);
            const std::vector<int> batch_idx(indices.begin() + start, indices.begin() + end);
            Batch batch;
            batch.images = stack_images(train_data, batch_idx);
            batch.labels = stack_labels(train_data, batch_idx);

            Tape tape;
            LossBreakdown bd;
            {
                TapeScope scope(tape);
                bd = total_loss(net, batch, config.loss_weights, config.l1_reduction);
                if (const char* bad = first_non_finite(bd)) {
                    throw NumericError(std::string("non-finite loss component ") + bad +
                                       " at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(start / config.batch_size));
                }
                tape.backward(bd.total);
            }

            if (config.clip_norm > 0.0) clip_gradients(params, config.clip_norm);
            ++step;
            for (auto& [name, p] : params) {
                if (config.optimizer == OptimizerKind::adam) {
                    adam_step(p, adam_states[name], config.learning_rate, config.adam_beta1,
                              config.adam_beta2, config.adam_eps, step);
                } else {
                    sgd_step(p, config.learning_rate);
                }
                p.zero_grad();
            }

            const double w = (double)batch_idx.size();
            stats.l_b += bd.l_b * w;
            stats.l_m += bd.l_m * w;
            stats.l_r += bd.l_r * w;
            stats.l_mask_l1 += bd.l_mask_l1 * w;
            stats.total += bd.total_value * w;
            seen += (int64_t)batch_idx.size();
        }
        stats.l_b /= (double)seen;
        stats.l_m /= (double)seen;
        stats.l_r /= (double)seen;
        stats.l_mask_l1 /= (double)seen;
        stats.total /= (double)seen;

        if (!holdout.empty()) {
            stats.holdout_accuracy = mean_accuracy(evaluate(net, holdout, {1.0, 0.0}, 0.5));
        }
        stats.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
                .count();
        if (log_progress) {
            std::fprintf(stderr,
                         "epoch %d/%d  total %.4f  l_b %.4f  holdout %.4f  (%.1fs)\n",
                         epoch + 1, config.epochs, stats.total, stats.l_b,
                         stats.holdout_accuracy, stats.wall_seconds);
        }
        trace.epochs.push_back(stats);
    }

    if (!config.checkpoint_path.empty()) {
        save_checkpoint(net, config, config.checkpoint_path);
    }
    return trace;
}

}  // namespace mcan
