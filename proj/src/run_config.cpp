// SPDX-License-Identifier: Apache-2.0

#include "mcan/config_json.hpp"
#include "mcan/errors.hpp"

namespace mcan {

namespace {

// Missing keys keep the struct's default, so config files may be partial.
template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const NetConfig& c) {
    j = {{"image_channels", c.image_channels},
         {"image_size", c.image_size},
         {"feature_channels", c.feature_channels},
         {"num_attributes", c.num_attributes},
         {"head_hidden", c.head_hidden},
         {"enable_reconstructor", c.enable_reconstructor},
         {"enable_multilabel", c.enable_multilabel},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, NetConfig& c) {
    maybe(j, "image_channels", c.image_channels);
    maybe(j, "image_size", c.image_size);
    maybe(j, "feature_channels", c.feature_channels);
    maybe(j, "num_attributes", c.num_attributes);
    maybe(j, "head_hidden", c.head_hidden);
    maybe(j, "enable_reconstructor", c.enable_reconstructor);
    maybe(j, "enable_multilabel", c.enable_multilabel);
    maybe(j, "seed", c.seed);
}

void to_json(nlohmann::json& j, const LossWeights& w) {
    j = {{"lambda_b", w.lambda_b},
         {"lambda_m", w.lambda_m},
         {"lambda_r", w.lambda_r},
         {"lambda_1", w.lambda_1}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
    maybe(j, "lambda_b", w.lambda_b);
    maybe(j, "lambda_m", w.lambda_m);
    maybe(j, "lambda_r", w.lambda_r);
    maybe(j, "lambda_1", w.lambda_1);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"learning_rate", c.learning_rate},
         {"optimizer", c.optimizer == OptimizerKind::adam ? "adam" : "sgd"},
         {"adam_beta1", c.adam_beta1},
         {"adam_beta2", c.adam_beta2},
         {"adam_eps", c.adam_eps},
         {"loss_weights", c.loss_weights},
         {"l1_reduction", c.l1_reduction == L1Reduction::sum ? "sum" : "mean"},
         {"ablation", to_string(c.ablation)},
         {"clip_norm", c.clip_norm},
         {"seed", c.seed},
         {"checkpoint_path", c.checkpoint_path}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    maybe(j, "epochs", c.epochs);
    maybe(j, "batch_size", c.batch_size);
    maybe(j, "learning_rate", c.learning_rate);
    if (j.contains("optimizer")) {
        const auto s = j.at("optimizer").get<std::string>();
        if (s == "adam") {
            c.optimizer = OptimizerKind::adam;
        } else if (s == "sgd") {
            c.optimizer = OptimizerKind::sgd;
        } else {
            throw ValueError("unknown optimizer '" + s + "'");
        }
    }
    maybe(j, "adam_beta1", c.adam_beta1);
    maybe(j, "adam_beta2", c.adam_beta2);
    maybe(j, "adam_eps", c.adam_eps);
    maybe(j, "loss_weights", c.loss_weights);
    if (j.contains("l1_reduction")) {
        const auto s = j.at("l1_reduction").get<std::string>();
        if (s == "sum") {
            c.l1_reduction = L1Reduction::sum;
        } else if (s == "mean") {
            c.l1_reduction = L1Reduction::mean;
        } else {
            throw ValueError("unknown l1_reduction '" + s + "'");
        }
    }
    if (j.contains("ablation")) {
        c.ablation = ablation_from_string(j.at("ablation").get<std::string>());
    }
    maybe(j, "clip_norm", c.clip_norm);
    maybe(j, "seed", c.seed);
    maybe(j, "checkpoint_path", c.checkpoint_path);
}

void to_json(nlohmann::json& j, const DatasetSpec& s) {
    j = {{"num_samples", s.num_samples},
         {"image_size", s.image_size},
         {"attribute_names", s.attribute_names},
         {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, DatasetSpec& s) {
    maybe(j, "num_samples", s.num_samples);
    maybe(j, "image_size", s.image_size);
    maybe(j, "attribute_names", s.attribute_names);
    maybe(j, "seed", s.seed);
}

void to_json(nlohmann::json& j, const SweepSpec& s) {
    j = {{"sigmas", s.sigmas},
         {"ns", s.ns},
         {"betas", s.betas},
         {"eval_samples", s.eval_samples},
         {"noise_seed", s.noise_seed},
         {"threshold", s.threshold}};
}

void from_json(const nlohmann::json& j, SweepSpec& s) {
    maybe(j, "sigmas", s.sigmas);
    maybe(j, "ns", s.ns);
    maybe(j, "betas", s.betas);
    maybe(j, "eval_samples", s.eval_samples);
    maybe(j, "noise_seed", s.noise_seed);
    maybe(j, "threshold", s.threshold);
}

}  // namespace mcan

// --- RunConfig ---------------------------------------------------------------

#include <fstream>

#include "mcan/run_config.hpp"

namespace mcan {

void to_json(nlohmann::json& j, const EvalOptions& o) {
    j = {{"n", o.n}, {"beta", o.beta}, {"split", o.split}};
}

void from_json(const nlohmann::json& j, EvalOptions& o) {
    maybe(j, "n", o.n);
    maybe(j, "beta", o.beta);
    maybe(j, "split", o.split);
}

void to_json(nlohmann::json& j, const AnalyzeOptions& o) {
    j = {{"sample_index", o.sample_index}, {"top_k", o.top_k}, {"split", o.split}};
}

void from_json(const nlohmann::json& j, AnalyzeOptions& o) {
    maybe(j, "sample_index", o.sample_index);
    maybe(j, "top_k", o.top_k);
    maybe(j, "split", o.split);
}

void to_json(nlohmann::json& j, const RunConfig& c) {
    j = {{"net", c.net},
         {"train", c.train},
         {"dataset", c.dataset},
         {"sweep", c.sweep},
         {"train_fraction", c.train_fraction},
         {"split_seed", c.split_seed},
         {"sweep_split", c.sweep_split},
         {"eval", c.eval},
         {"analyze", c.analyze}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
    maybe(j, "net", c.net);
    maybe(j, "train", c.train);
    maybe(j, "dataset", c.dataset);
    maybe(j, "sweep", c.sweep);
    maybe(j, "train_fraction", c.train_fraction);
    maybe(j, "split_seed", c.split_seed);
    maybe(j, "sweep_split", c.sweep_split);
    maybe(j, "eval", c.eval);
    maybe(j, "analyze", c.analyze);
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("config file " + path.string() + ": " + e.what());
    }
    return j.get<RunConfig>();
}

void save_run_config(const RunConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config file " + path.string());
    out << nlohmann::json(config).dump(2) << "\n";
}

}  // namespace mcan
