// SPDX-License-Identifier: Apache-2.0

#include "mcan/commands.hpp"

#include <cstdio>
#include <fstream>

#include "mcan/analysis.hpp"
#include "mcan/errors.hpp"
#include "mcan/mask_transform.hpp"
#include "mcan/text_util.hpp"

namespace mcan::cli {

namespace fs = std::filesystem;

namespace {

void prepare_out_dir(const RunConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    save_run_config(config, out_dir / "run_config.json");
}

// Loads a dataset directory and reconciles the attribute count with the
// network configuration.
LoadedDataset load_for(const RunConfig& config, const fs::path& data_dir) {
    LoadedDataset data =
        load_dataset_dir(data_dir, config.net.image_size, config.net.image_channels);
    if ((int)data.attribute_names.size() != config.net.num_attributes) {
        throw ValueError("dataset has " + std::to_string(data.attribute_names.size()) +
                         " attributes but the network is configured for " +
                         std::to_string(config.net.num_attributes));
    }
    return data;
}

std::vector<Sample> select_split(std::vector<Sample> samples, const std::string& split,
                                 const RunConfig& config) {
    if (split == "all") return samples;
    auto [train, test] = split_dataset(std::move(samples), config.train_fraction,
                                       config.split_seed);
    if (split == "train") return std::move(train);
    if (split == "test") return std::move(test);
    throw ValueError("unknown split '" + split + "' (expected all, train or test)");
}

}  // namespace

void cmd_gen_data(const RunConfig& config, const fs::path& out_dir) {
    prepare_out_dir(config, out_dir);
    const auto samples = generate_synthetic(config.dataset);
    export_dataset(samples, config.dataset, out_dir);
    std::printf("wrote %zu samples (%d attributes) to %s\n", samples.size(),
                (int)config.dataset.attribute_names.size(), out_dir.c_str());
}

void cmd_train(const RunConfig& config, const fs::path& data_dir, const fs::path& out_dir) {
    RunConfig resolved = config;
    if (resolved.train.checkpoint_path.empty()) {
        resolved.train.checkpoint_path = (out_dir / "model.mcan").string();
    }
    prepare_out_dir(resolved, out_dir);

    const LoadedDataset data = load_for(resolved, data_dir);
    auto [train_set, holdout] =
        split_dataset(data.samples, resolved.train_fraction, resolved.split_seed);

    NetConfig net_config = resolved.net;
    resolved.train.apply_ablation(net_config);
    MultiAttrNet net = MultiAttrNet::init(net_config);
    const TrainTrace trace = train(net, train_set, holdout, resolved.train, true);

    std::ofstream csv(out_dir / "trace.csv");
    if (!csv) throw IoError("cannot write trace.csv");
    csv << "epoch,l_b,l_m,l_r,l_mask_l1,total,holdout_accuracy\n";
    for (size_t e = 0; e < trace.epochs.size(); ++e) {
        const EpochStats& s = trace.epochs[e];
        csv << e + 1 << ',' << format_double(s.l_b) << ',' << format_double(s.l_m) << ','
            << format_double(s.l_r) << ',' << format_double(s.l_mask_l1) << ','
            << format_double(s.total) << ',' << format_double(s.holdout_accuracy) << '\n';
    }
    std::printf("trained %d epochs; final holdout accuracy %.4f; checkpoint %s\n",
                (int)trace.epochs.size(),
                trace.epochs.empty() ? 0.0 : trace.epochs.back().holdout_accuracy,
                resolved.train.checkpoint_path.c_str());
}

void cmd_eval(const RunConfig& config, const fs::path& checkpoint, const fs::path& data_dir,
              const fs::path& out_dir) {
    prepare_out_dir(config, out_dir);
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    RunConfig with_net = config;
    with_net.net = ckpt.net.config();
    const LoadedDataset data = load_for(with_net, data_dir);
    const auto subset = select_split(data.samples, config.eval.split, config);

    const TransformParams transform{config.eval.n, config.eval.beta};
    const auto acc = evaluate(ckpt.net, subset, transform, 0.5);

    std::ofstream csv(out_dir / "accuracy.csv");
    if (!csv) throw IoError("cannot write accuracy.csv");
    csv << "attribute,accuracy\n";
    for (size_t k = 0; k < acc.size(); ++k) {
        csv << data.attribute_names[k] << ',' << format_double(acc[k]) << '\n';
    }
    csv << "__mean__," << format_double(mean_accuracy(acc)) << '\n';
    std::printf("mean accuracy %.4f over %zu samples (n=%s beta=%s)\n", mean_accuracy(acc),
                subset.size(), format_double(transform.n).c_str(),
                format_double(transform.beta).c_str());
}

void cmd_analyze(const RunConfig& config, const fs::path& checkpoint,
                 const fs::path& data_dir, const fs::path& out_dir) {
    prepare_out_dir(config, out_dir);
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    RunConfig with_net = config;
    with_net.net = ckpt.net.config();
    const LoadedDataset data = load_for(with_net, data_dir);
    const auto subset = select_split(data.samples, config.analyze.split, config);
    if (subset.empty()) throw ValueError("selected split is empty");
    const int num_attrs = ckpt.net.num_attributes();

    std::vector<ImportanceVector> importances;
    for (int k = 0; k < num_attrs; ++k) {
        importances.push_back(channel_importance(ckpt.net, subset, k));
    }
    write_importance_csv(importances, out_dir / "importance.csv");

    std::ofstream topk(out_dir / "top_channels.csv");
    if (!topk) throw IoError("cannot write top_channels.csv");
    topk << "attribute,rank,channel\n";
    for (int k = 0; k < num_attrs; ++k) {
        const auto top = top_k_channels(importances[k], config.analyze.top_k);
        for (size_t r = 0; r < top.size(); ++r) {
            topk << data.attribute_names[k] << ',' << r + 1 << ',' << top[r] << '\n';
        }
    }

    const CorrelationMatrix features = feature_correlation(ckpt.net, subset);
    write_correlation_json(features, out_dir / "feature_correlation.json");
    write_correlation_csv(features, out_dir / "feature_correlation.csv");
    const CorrelationMatrix attrs =
        attribute_correlation(ckpt.net, subset, data.attribute_names);
    write_correlation_json(attrs, out_dir / "attribute_correlation.json");
    write_correlation_csv(attrs, out_dir / "attribute_correlation.csv");

    const int index = config.analyze.sample_index;
    if (index < 0 || index >= (int)subset.size()) {
        throw ValueError("sample_index " + std::to_string(index) + " out of range");
    }
    for (int k = 0; k < num_attrs; ++k) {
        export_masks(ckpt.net, subset[index], k, out_dir / "masks");
    }

    if (subset.front().has_supports()) {
        std::ofstream loc(out_dir / "localization.csv");
        if (!loc) throw IoError("cannot write localization.csv");
        loc << "attribute,score\n";
        for (int k = 0; k < num_attrs; ++k) {
            loc << data.attribute_names[k] << ','
                << format_double(localization_score(ckpt.net, subset, k)) << '\n';
        }
    } else {
        std::printf("dataset carries no support bitmaps; skipping localization scores\n");
    }
    std::printf("analysis written to %s\n", out_dir.c_str());
}

void cmd_sweep(const RunConfig& config, const fs::path& checkpoint, const fs::path& data_dir,
               const fs::path& out_dir) {
    prepare_out_dir(config, out_dir);
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    RunConfig with_net = config;
    with_net.net = ckpt.net.config();
    const LoadedDataset data = load_for(with_net, data_dir);
    const auto subset = select_split(data.samples, config.sweep_split, config);

    const SweepResult result = run_sweep(ckpt.net, subset, config.sweep, data.attribute_names);
    write_sweep_csv(result, out_dir / "sweep.csv");
    write_delta_csv(baseline_delta(result), out_dir / "summary.csv");
    std::printf("swept %zu sigmas x %zu cells over %d samples\n", config.sweep.sigmas.size(),
                config.sweep.ns.size() * config.sweep.betas.size(),
                std::min((int)subset.size(), config.sweep.eval_samples));
}

void cmd_curve(const RunConfig& config, const std::vector<double>& ns,
               const std::vector<double>& betas, int count, const fs::path& out_dir) {
    prepare_out_dir(config, out_dir);
    for (double n : ns) {
        for (double beta : betas) {
            const auto samples = curve_samples({n, beta}, count);
            const fs::path path =
                out_dir / ("curve_n" + format_double(n) + "_beta" + format_double(beta) +
                           ".csv");
            std::ofstream csv(path);
            if (!csv) throw IoError("cannot write " + path.string());
            csv << "m,g\n";
            for (const auto& [m, g] : samples) {
                csv << format_double(m) << ',' << format_double(g) << '\n';
            }
        }
    }
    std::printf("wrote %zu curve files to %s\n", ns.size() * betas.size(), out_dir.c_str());
}

}  // namespace mcan::cli
