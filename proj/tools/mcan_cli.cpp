// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Subcommands: gen-data, train, eval, analyze,
// sweep, curve. A --config file (for example the run_config.json emitted by
// a previous run) supplies defaults; explicit flags override it. Exit codes:
// 0 success, 1 runtime failure, 2 usage error.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcan/commands.hpp"
#include "mcan/errors.hpp"

namespace {

using mcan::RunConfig;

// Applies --config (when given) before flag overrides run.
void bind_config(CLI::App* cmd, std::string& config_path, RunConfig& config) {
    cmd->add_option("--config", config_path, "JSON config file (flags override its values)")
        ->check(CLI::ExistingFile);
    cmd->callback([&config, &config_path]() {
        if (!config_path.empty()) config = mcan::load_run_config(config_path);
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-channel attention networks for multi-attribute images"};
    app.require_subcommand(1);

    RunConfig config;
    std::string config_path;
    std::string data_dir, out_dir, checkpoint;

    // gen-data ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    bind_config(gen, config_path, config);
    gen->add_option("--out", out_dir, "output directory")->required();
    auto* g_samples = gen->add_option("--samples", config.dataset.num_samples);
    auto* g_seed = gen->add_option("--seed", config.dataset.seed);

    // train ------------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "train a model on a dataset directory");
    bind_config(tr, config_path, config);
    tr->add_option("--data", data_dir, "dataset directory")->required();
    tr->add_option("--out", out_dir, "output directory")->required();
    auto* t_epochs = tr->add_option("--epochs", config.train.epochs);
    auto* t_batch = tr->add_option("--batch", config.train.batch_size);
    auto* t_lr = tr->add_option("--lr", config.train.learning_rate);
    std::string ablation;
    auto* t_ablation =
        tr->add_option("--ablation", ablation, "full | no_recon | no_multilabel | no_both")
            ->check(CLI::IsMember({"full", "no_recon", "no_multilabel", "no_both"}));
    std::string optimizer;
    auto* t_optimizer = tr->add_option("--optimizer", optimizer, "adam | sgd")
                            ->check(CLI::IsMember({"adam", "sgd"}));
    auto* t_seed = tr->add_option("--seed", config.train.seed);
    auto* t_net_seed = tr->add_option("--net-seed", config.net.seed);
    auto* t_channels = tr->add_option("--feature-channels", config.net.feature_channels);
    auto* t_hidden = tr->add_option("--head-hidden", config.net.head_hidden);
    auto* t_lb = tr->add_option("--lambda-b", config.train.loss_weights.lambda_b);
    auto* t_lm = tr->add_option("--lambda-m", config.train.loss_weights.lambda_m);
    auto* t_lr_weight = tr->add_option("--lambda-r", config.train.loss_weights.lambda_r);
    auto* t_l1 = tr->add_option("--lambda-1", config.train.loss_weights.lambda_1);
    bool paper_preset = false;
    tr->add_flag("--paper-scale", paper_preset,
                 "use the full-scale 128-channel configuration");

    // eval -------------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    bind_config(ev, config_path, config);
    ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    ev->add_option("--data", data_dir, "dataset directory")->required();
    ev->add_option("--out", out_dir, "output directory")->required();
    auto* e_n = ev->add_option("--n", config.eval.n)->check(CLI::NonNegativeNumber);
    auto* e_beta = ev->add_option("--beta", config.eval.beta)->check(CLI::Range(0.0, 1.0));
    auto* e_split = ev->add_option("--split", config.eval.split)
                        ->check(CLI::IsMember({"all", "train", "test"}));

    // analyze ----------------------------------------------------------------
    auto* an = app.add_subcommand("analyze", "masks, importance, correlations");
    bind_config(an, config_path, config);
    an->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    an->add_option("--data", data_dir, "dataset directory")->required();
    an->add_option("--out", out_dir, "output directory")->required();
    auto* a_index = an->add_option("--sample-index", config.analyze.sample_index);
    auto* a_topk = an->add_option("--top-k", config.analyze.top_k)->check(CLI::PositiveNumber);
    auto* a_split = an->add_option("--split", config.analyze.split)
                        ->check(CLI::IsMember({"all", "train", "test"}));

    // sweep ------------------------------------------------------------------
    auto* sw = app.add_subcommand("sweep", "noise robustness sweep");
    bind_config(sw, config_path, config);
    sw->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    sw->add_option("--data", data_dir, "dataset directory")->required();
    sw->add_option("--out", out_dir, "output directory")->required();
    auto* s_sigmas = sw->add_option("--sigmas", config.sweep.sigmas);
    auto* s_ns = sw->add_option("--ns", config.sweep.ns);
    auto* s_betas = sw->add_option("--betas", config.sweep.betas);
    auto* s_eval = sw->add_option("--eval-samples", config.sweep.eval_samples)
                       ->check(CLI::PositiveNumber);
    auto* s_seed = sw->add_option("--noise-seed", config.sweep.noise_seed);
    auto* s_split = sw->add_option("--split", config.sweep_split)
                        ->check(CLI::IsMember({"all", "train", "test"}));

    // curve ------------------------------------------------------------------
    auto* cv = app.add_subcommand("curve", "transformation curve samples");
    bind_config(cv, config_path, config);
    cv->add_option("--out", out_dir, "output directory")->required();
    std::vector<double> curve_ns{1.0}, curve_betas{0.0};
    cv->add_option("--n", curve_ns, "one or more n values")->check(CLI::NonNegativeNumber);
    cv->add_option("--beta", curve_betas, "one or more beta values")
        ->check(CLI::Range(0.0, 1.0));
    int curve_count = 1001;
    cv->add_option("--count", curve_count, "samples per curve")->check(CLI::Range(2, 1000000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help is success, everything else is usage
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }

    try {
        // CLI11 callbacks loaded --config before this point; flags the user
        // actually passed must win over file values, so re-read them here.
        auto keep = [](CLI::Option* opt, auto& target, auto parse) {
            if (opt->count() > 0) target = parse(opt->results().front());
        };
        auto as_int = [](const std::string& s) { return std::stoi(s); };
        auto as_double = [](const std::string& s) { return std::stod(s); };
        auto as_u64 = [](const std::string& s) { return (uint64_t)std::stoull(s); };

        if (gen->parsed()) {
            keep(g_samples, config.dataset.num_samples, as_int);
            keep(g_seed, config.dataset.seed, as_u64);
            mcan::cli::cmd_gen_data(config, out_dir);
        } else if (tr->parsed()) {
            keep(t_epochs, config.train.epochs, as_int);
            keep(t_batch, config.train.batch_size, as_int);
            keep(t_lr, config.train.learning_rate, as_double);
            keep(t_seed, config.train.seed, as_u64);
            keep(t_net_seed, config.net.seed, as_u64);
            keep(t_channels, config.net.feature_channels, as_int);
            keep(t_hidden, config.net.head_hidden, as_int);
            keep(t_lb, config.train.loss_weights.lambda_b, as_double);
            keep(t_lm, config.train.loss_weights.lambda_m, as_double);
            keep(t_lr_weight, config.train.loss_weights.lambda_r, as_double);
            keep(t_l1, config.train.loss_weights.lambda_1, as_double);
            if (t_ablation->count() > 0) {
                config.train.ablation = mcan::ablation_from_string(ablation);
            }
            if (t_optimizer->count() > 0) {
                config.train.optimizer = optimizer == "adam" ? mcan::OptimizerKind::adam
                                                             : mcan::OptimizerKind::sgd;
            }
            if (paper_preset) config.net.feature_channels = 128;
            mcan::cli::cmd_train(config, data_dir, out_dir);
        } else if (ev->parsed()) {
            keep(e_n, config.eval.n, as_double);
            keep(e_beta, config.eval.beta, as_double);
            if (e_split->count() > 0) config.eval.split = e_split->results().front();
            mcan::cli::cmd_eval(config, checkpoint, data_dir, out_dir);
        } else if (an->parsed()) {
            keep(a_index, config.analyze.sample_index, as_int);
            keep(a_topk, config.analyze.top_k, as_int);
            if (a_split->count() > 0) config.analyze.split = a_split->results().front();
            mcan::cli::cmd_analyze(config, checkpoint, data_dir, out_dir);
        } else if (sw->parsed()) {
            auto keep_list = [](CLI::Option* opt, std::vector<double>& target) {
                if (opt->count() > 0) {
                    target.clear();
                    for (const auto& s : opt->results()) target.push_back(std::stod(s));
                }
            };
            keep_list(s_sigmas, config.sweep.sigmas);
            keep_list(s_ns, config.sweep.ns);
            keep_list(s_betas, config.sweep.betas);
            keep(s_eval, config.sweep.eval_samples, as_int);
            keep(s_seed, config.sweep.noise_seed, as_u64);
            if (s_split->count() > 0) config.sweep_split = s_split->results().front();
            mcan::cli::cmd_sweep(config, checkpoint, data_dir, out_dir);
        } else if (cv->parsed()) {
            mcan::cli::cmd_curve(config, curve_ns, curve_betas, curve_count, out_dir);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
