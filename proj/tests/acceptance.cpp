// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Each test case prints one PASS/FAIL line;
// criteria marked "soft" log their outcome without failing the build.
// Heavy artifacts (the trained desk model, the desk dataset) are created
// once and shared by later cases, so order matters.

#define DOCTEST_CONFIG_IMPLEMENT
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "doctest.h"
#include "gradcheck.hpp"
#include "mcan/analysis.hpp"
#include "mcan/commands.hpp"
#include "mcan/dataset.hpp"
#include "mcan/errors.hpp"
#include "mcan/mask_transform.hpp"
#include "mcan/robustness.hpp"
#include "mcan/trainer.hpp"
#include "oracles.hpp"

using namespace mcan;
namespace fs = std::filesystem;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

void report(int criterion, const char* name, bool pass, double seconds) {
    std::printf("[%s] criterion %02d: %s (%.1fs)\n", pass ? "PASS" : "FAIL", criterion, name,
                seconds);
    std::fflush(stdout);
}

void report_soft(int criterion, const char* name, bool pass, double seconds) {
    std::printf("[%s] criterion %02d (soft): %s (%.1fs)\n", pass ? "PASS" : "soft-miss",
                criterion, name, seconds);
    std::fflush(stdout);
}

// ---- shared desk-scale artifacts -------------------------------------------

constexpr int kDeskTrain = 2000;
constexpr int kDeskTest = 500;

struct DeskContext {
    fs::path root;
    DatasetSpec dataset_spec;
    std::vector<Sample> train_set;
    std::vector<Sample> test_set;
    std::vector<std::string> attribute_names;
    std::optional<MultiAttrNet> full_model;
    TrainTrace full_trace;
    TrainConfig full_config;
};

DeskContext& desk() {
    static DeskContext ctx = [] {
        DeskContext c;
        c.root = fs::temp_directory_path() / "mcan_acceptance";
        fs::create_directories(c.root);
        c.dataset_spec.num_samples = kDeskTrain + kDeskTest;
        c.dataset_spec.seed = 7;
        c.attribute_names = c.dataset_spec.attribute_names;
        auto samples = generate_synthetic(c.dataset_spec);
        auto [train_s, test_s] = split_dataset(std::move(samples), 0.8, 4);
        c.train_set = std::move(train_s);
        c.test_set = std::move(test_s);
        return c;
    }();
    return ctx;
}

NetConfig desk_net_config() {
    NetConfig n;
    n.image_channels = 1;
    n.image_size = 32;
    n.feature_channels = 32;
    n.num_attributes = 6;
    n.head_hidden = 16;
    n.seed = 1;
    return n;
}

TrainConfig desk_train_config() {
    TrainConfig t;
    t.epochs = 15;
    t.batch_size = 32;
    t.learning_rate = 3e-3;
    t.seed = 2;
    return t;
}

// Trains the full desk model once; criteria 5, 7, 9 and 10 share it.
MultiAttrNet& desk_model() {
    DeskContext& c = desk();
    if (!c.full_model.has_value()) {
        NetConfig nc = desk_net_config();
        TrainConfig tc = desk_train_config();
        tc.apply_ablation(nc);
        c.full_model = MultiAttrNet::init(nc);
        c.full_config = tc;
        c.full_trace = train(*c.full_model, c.train_set, c.test_set, tc, true);
    }
    return *c.full_model;
}

}  // namespace

TEST_CASE("criterion 1: transformation identity") {
    Timer timer;
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double m = (double)i / 1000.0;
        worst = std::max(worst, std::fabs(transform_g(m, {1.0, 0.0}) - m));
    }
    const bool pass = worst <= 1e-12;
    report(1, "transformation identity g(m;1,0) = m", pass, timer.seconds());
    CHECK(pass);
    CHECK(timer.seconds() < 1.0);
}

TEST_CASE("criterion 2: transformation algebra") {
    Timer timer;
    bool pass = true;
    for (double n : {0.5, 1.0, 2.0, 4.0}) {
        double prev = -1e300;
        for (int i = 0; i <= 1000; ++i) {
            const double m = (double)i / 1000.0;
            pass = pass && std::fabs(transform_h(1.0 - m, n) - (1.0 - transform_h(m, n))) <=
                               1e-12;
            const double h = transform_h(m, n);
            pass = pass && h >= prev - 1e-15;
            prev = h;
        }
    }
    // endpoints across the default 5x5 grid; g(0) = -beta and g(1) = 1 hold
    // for n > 0 (at n = 0 the curve is constant at 0.5, so both endpoints
    // rescale to 0.5 - 0.5*beta exactly like the midpoint)
    for (double n : {0.0, 1.0, 2.0, 3.0, 4.0}) {
        for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const TransformParams p{n, beta};
            pass = pass && std::fabs(transform_g(0.5, p) - (0.5 - 0.5 * beta)) <= 1e-12;
            if (n > 0.0) {
                pass = pass && std::fabs(transform_g(0.0, p) - (-beta)) <= 1e-12;
                pass = pass && std::fabs(transform_g(1.0, p) - 1.0) <= 1e-12;
            } else {
                pass = pass && std::fabs(transform_g(0.0, p) - (0.5 - 0.5 * beta)) <= 1e-12;
                pass = pass && std::fabs(transform_g(1.0, p) - (0.5 - 0.5 * beta)) <= 1e-12;
            }
        }
    }
    report(2, "h symmetry, monotonicity, g endpoints on the 5x5 grid", pass, timer.seconds());
    CHECK(pass);
    CHECK(timer.seconds() < 1.0);
}

TEST_CASE("criterion 3: gradient fidelity") {
    Timer timer;
    // per-primitive checks on random small tensors
    bool prims = true;
    for (unsigned trial = 0; trial < 5; ++trial) {
        const Tensor mid = Tensor::from_values(
            {3, 7}, oracles::random_vec(21, 900 + trial, -0.4, 0.4));
        prims = prims &&
                gradcheck::check_tensor([&](const Tensor& v) { return sigmoid(v); }, mid) <=
                    1e-5;
        prims = prims &&
                gradcheck::check_tensor(
                    [&](const Tensor& v) {
                        return mul(v, Tensor::from_values(
                                          {3, 7}, oracles::random_vec(21, 950 + trial)));
                    },
                    mid) <= 1e-5;
        const Tensor kern =
            Tensor::from_values({3, 2, 3, 3}, oracles::random_vec(54, 970 + trial));
        const Tensor bias = Tensor::from_values({3}, oracles::random_vec(3, 980 + trial));
        const Tensor img =
            Tensor::from_values({1, 2, 6, 6}, oracles::random_vec(72, 990 + trial, 0.0, 1.0));
        prims = prims && gradcheck::check_tensor(
                             [&](const Tensor& v) { return conv2d(img, v, bias, 1, 2, 2); },
                             kern) <= 1e-5;
    }

    // full composite objective on the toy configuration
    NetConfig nc;
    nc.image_channels = 1;
    nc.image_size = 16;
    nc.feature_channels = 8;
    nc.num_attributes = 3;
    nc.head_hidden = 4;
    nc.seed = 21;
    auto net = MultiAttrNet::init(nc);
    gradcheck::prepare_gradcheck_point(net);
    Batch batch;
    batch.images =
        Tensor::from_values({2, 1, 16, 16}, oracles::random_vec(512, 61, 0.0, 1.0));
    batch.labels = Tensor::from_values({2, 3}, {1, 0, 1, 0, 1, 0});
    const double margin = gradcheck::min_kink_margin(net, batch);
    LossWeights weights;
    weights.lambda_1 = 1e-3;
    const auto rep = gradcheck::check_objective_grads(net, batch, weights, 1e-4);
    const bool composite = margin > 1e-2 && rep.worst_rel_err <= 1e-5;
    std::printf("    composite: %lld parameters, worst rel err %.2e at %s (kink margin %.3f)\n",
                (long long)rep.params_checked, rep.worst_rel_err, rep.worst_param.c_str(),
                margin);
    const bool pass = prims && composite;
    report(3, "autodiff matches central finite differences", pass, timer.seconds());
    CHECK(pass);
    CHECK(timer.seconds() < 120.0);
}

TEST_CASE("criterion 4: convolution oracle") {
    Timer timer;
    bool pass = true;
    int dilated_cases = 0;
    for (unsigned seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed * 31 + 7);
        auto pick = [&](int lo, int hi) {
            return lo + (int)(rng() % (uint64_t)(hi - lo + 1));
        };
        kernels::Conv2dGeom g;
        g.batch = pick(1, 3);
        g.cin = pick(1, 4);
        g.cout = pick(1, 4);
        g.kh = pick(1, 3);
        g.kw = pick(1, 3);
        g.stride = pick(1, 2);
        g.dilation = pick(1, 4);
        g.padding = pick(0, 4);
        g.h = g.dilation * (g.kh - 1) + 1 + pick(0, 6);
        g.w = g.dilation * (g.kw - 1) + 1 + pick(0, 6);
        if (g.dilation > 1) ++dilated_cases;
        const auto in = oracles::random_vec((size_t)g.batch * g.cin * g.h * g.w, seed * 5 + 1);
        const auto k =
            oracles::random_vec((size_t)g.cout * g.cin * g.kh * g.kw, seed * 5 + 2);
        const auto bias = oracles::random_vec(g.cout, seed * 5 + 3);
        std::vector<double> out((size_t)g.batch * g.cout * g.out_h() * g.out_w());
        kernels::conv2d_forward(in.data(), k.data(), bias.data(), out.data(), g);
        pass = pass && oracles::max_rel_err(out, oracles::conv2d(in, k, bias, g)) <= 1e-12;
    }
    // make sure dilations 2 and 4 are explicitly represented
    for (int dilation : {2, 4}) {
        kernels::Conv2dGeom g{2, 3, 4, 14, 14, 3, 3, 1, dilation, dilation};
        const auto in = oracles::random_vec((size_t)g.batch * g.cin * g.h * g.w, 600 + dilation);
        const auto k = oracles::random_vec((size_t)g.cout * g.cin * 9, 700 + dilation);
        const auto bias = oracles::random_vec(g.cout, 800 + dilation);
        std::vector<double> out((size_t)g.batch * g.cout * g.out_h() * g.out_w());
        kernels::conv2d_forward(in.data(), k.data(), bias.data(), out.data(), g);
        pass = pass && oracles::max_rel_err(out, oracles::conv2d(in, k, bias, g)) <= 1e-12;
    }
    pass = pass && dilated_cases > 10;
    report(4, "conv2d matches the brute-force oracle on 50 seeded cases", pass,
           timer.seconds());
    CHECK(pass);
    CHECK(timer.seconds() < 10.0);
}

TEST_CASE("criterion 5: desk training reaches 0.90 held-out accuracy") {
    Timer timer;
    DeskContext& c = desk();
    MultiAttrNet& model = desk_model();
    const TrainTrace& trace = c.full_trace;
    REQUIRE(trace.epochs.size() == 15);
    const double final_acc = trace.epochs.back().holdout_accuracy;
    const bool descended = trace.epochs.back().total < trace.epochs.front().total;
    const auto per_attr = evaluate(model, c.test_set, {1.0, 0.0}, 0.5);
    std::printf("    holdout accuracy %.4f (train loss %.3f -> %.3f); per-attribute:",
                final_acc, trace.epochs.front().total, trace.epochs.back().total);
    for (double a : per_attr) std::printf(" %.3f", a);
    std::printf("\n");
    const bool pass = final_acc >= 0.90 && descended;
    report(5, "2000/500 desk training, 15 epochs, accuracy >= 0.90", pass, timer.seconds());
    CHECK(pass);
    CHECK(timer.seconds() < 600.0);
}

TEST_CASE("criterion 6: ablation harness") {
    Timer timer;
    DeskContext& c = desk();
    (void)desk_model();  // ensure the shared full run exists
    const double full_acc = c.full_trace.epochs.back().holdout_accuracy;

    struct Variant {
        Ablation ablation;
        double accuracy = 0.0;
        bool l_m_zero = true;
        bool l_r_zero = true;
    };
    std::vector<Variant> variants = {{Ablation::no_recon},
                                     {Ablation::no_multilabel},
                                     {Ablation::no_both}};
    for (auto& v : variants) {
        NetConfig nc = desk_net_config();
        TrainConfig tc = desk_train_config();
        tc.ablation = v.ablation;
        tc.apply_ablation(nc);
        auto net = MultiAttrNet::init(nc);
        const TrainTrace trace = train(net, c.train_set, c.test_set, tc, true);
        v.accuracy = trace.epochs.back().holdout_accuracy;
        for (const auto& e : trace.epochs) {
            v.l_m_zero = v.l_m_zero && e.l_m == 0.0;
            v.l_r_zero = v.l_r_zero && e.l_r == 0.0;
        }
    }
    const double no_recon_acc = variants[0].accuracy;
    const double no_multilabel_acc = variants[1].accuracy;
    const double no_both_acc = variants[2].accuracy;
    std::printf("    accuracies: full %.4f, no_recon %.4f, no_multilabel %.4f, no_both %.4f\n",
                full_acc, no_recon_acc, no_multilabel_acc, no_both_acc);

    const bool traces_ok = variants[0].l_r_zero && variants[1].l_m_zero &&
                           variants[2].l_r_zero && variants[2].l_m_zero;
    const bool hard = traces_ok && full_acc >= no_both_acc - 0.01;
    report(6, "four ablations complete; ablated loss terms identically zero", hard,
           timer.seconds());
    const bool ordering = full_acc > no_recon_acc && no_recon_acc > no_multilabel_acc &&
                          no_multilabel_acc > no_both_acc;
    report_soft(6, "full > no_recon > no_multilabel > no_both ordering", ordering,
                timer.seconds());
    CHECK(hard);
    CHECK(timer.seconds() < 2400.0);
}

TEST_CASE("criterion 7: mask localization") {
    Timer timer;
    DeskContext& c = desk();
    MultiAttrNet& model = desk_model();
    int above = 0;
    std::printf("    localization:");
    for (int k = 0; k < 6; ++k) {
        const double score = localization_score(model, c.test_set, k);
        std::printf(" %s=%.2f", c.attribute_names[k].c_str(), score);
        if (score > 1.2) ++above;
    }
    std::printf("\n");
    const bool pass = above >= 4;
    report(7, "localization score > 1.2 for at least 4 of 6 attributes", pass,
           timer.seconds());
    CHECK(pass);
    CHECK(timer.seconds() < 60.0);
}

TEST_CASE("criterion 8: L1 sparsity lowers mask activation") {
    Timer timer;
    DeskContext& c = desk();
    // reduced scale: the criterion fixes only the lambda_1 contrast
    const std::vector<Sample> subset(c.train_set.begin(), c.train_set.begin() + 600);

    auto mean_mask = [&](double lambda_1) {
        NetConfig nc = desk_net_config();
        TrainConfig tc = desk_train_config();
        tc.epochs = 5;
        tc.loss_weights.lambda_1 = lambda_1;
        tc.apply_ablation(nc);
        auto net = MultiAttrNet::init(nc);
        train(net, subset, {}, tc, true);
        double total = 0.0;
        for (int k = 0; k < 6; ++k) {
            const auto imp = channel_importance(net, c.test_set, k);
            for (double s : imp.scores) total += s;
        }
        return total / (6.0 * desk_net_config().feature_channels);
    };
    const double without = mean_mask(0.0);
    const double with_l1 = mean_mask(1e-3);
    std::printf("    mean mask activation: lambda_1=0 -> %.4f, lambda_1=1e-3 -> %.4f\n",
                without, with_l1);
    const bool pass = with_l1 < without;
    report(8, "mask activation strictly lower under lambda_1 = 1e-3", pass, timer.seconds());
    CHECK(pass);
    CHECK(timer.seconds() < 1200.0);
}

TEST_CASE("criterion 9: robustness sweep protocol") {
    Timer timer;
    DeskContext& c = desk();
    MultiAttrNet& model = desk_model();
    SweepSpec spec;  // defaults: 11 sigmas, 5x5 grid
    spec.eval_samples = kDeskTest;
    spec.noise_seed = 3;
    const SweepResult result = run_sweep(model, c.test_set, spec, c.attribute_names);
    REQUIRE(result.records.size() == 11u * 25u * 7u);

    // baseline accuracy non-increasing in sigma, 2pp tolerance per pair
    std::vector<double> baseline;
    for (const auto& r : result.records) {
        if (r.n == 1.0 && r.beta == 0.0 && r.attribute == "__mean__") {
            baseline.push_back(r.accuracy);
        }
    }
    REQUIRE(baseline.size() == 11);
    bool monotone = true;
    for (size_t i = 1; i < baseline.size(); ++i) {
        monotone = monotone && baseline[i] <= baseline[i - 1] + 0.02;
    }
    std::printf("    baseline mean accuracy by sigma:");
    for (double b : baseline) std::printf(" %.3f", b);
    std::printf("\n");
    report(9, "baseline accuracy non-increasing in sigma (2pp tolerance)", monotone,
           timer.seconds());
    CHECK(monotone);

    // soft: some transform cell beats the baseline at sigma = 0.3
    const auto deltas = baseline_delta(result);
    bool soft = false;
    for (const auto& row : deltas) {
        if (row.sigma == 0.3) {
            std::printf("    sigma 0.3: best (n=%g, beta=%g) acc %.4f vs baseline %.4f, "
                        "delta %.4f\n",
                        row.best_n, row.best_beta, row.best_acc, row.baseline_acc, row.delta);
            soft = row.delta > 0.0 && !(row.best_n == 1.0 && row.best_beta == 0.0);
        }
        REQUIRE(row.delta >= 0.0);
    }
    report_soft(9, "a transform cell beats the baseline at sigma = 0.3", soft,
                timer.seconds());
    CHECK(timer.seconds() < 900.0);
}

TEST_CASE("criterion 10: correlation schema") {
    Timer timer;
    DeskContext& c = desk();
    MultiAttrNet& model = desk_model();
    const std::vector<Sample> subset(c.test_set.begin(), c.test_set.begin() + 100);

    auto check_matrix = [](const CorrelationMatrix& m) {
        bool ok = true;
        for (int r = 0; r < m.dim(); ++r) {
            ok = ok && std::fabs(m.at(r, r) - 1.0) <= 1e-9;
            for (int col = 0; col < m.dim(); ++col) {
                ok = ok && std::fabs(m.at(r, col) - m.at(col, r)) <= 1e-9;
                ok = ok && m.at(r, col) >= -1.0 - 1e-9 && m.at(r, col) <= 1.0 + 1e-9;
            }
        }
        return ok;
    };
    bool pass = check_matrix(feature_correlation(model, subset));
    pass = pass && check_matrix(attribute_correlation(model, subset, c.attribute_names));

    // duplicated-weight attribute pair correlates at 1
    NetConfig nc = desk_net_config();
    auto dup = MultiAttrNet::init(nc);
    {
        auto params = dup.named_parameters();
        for (auto& [name, p] : params) {
            if (name.rfind("maskgen2", 0) == 0) {
                const std::string src = "maskgen5" + name.substr(8);
                for (auto& [name2, p2] : params) {
                    if (name2 == src) {
                        p.raw_values().assign(p2.values().begin(), p2.values().end());
                    }
                }
            }
        }
    }
    const CorrelationMatrix attr_corr = attribute_correlation(dup, subset, c.attribute_names);
    pass = pass && std::fabs(attr_corr.at(2, 5) - 1.0) <= 1e-9;
    report(10, "correlation matrices well-formed; duplicated pair correlates at 1", pass,
           timer.seconds());
    CHECK(pass);
    CHECK(timer.seconds() < 60.0);
}

TEST_CASE("criterion 11: determinism and persistence") {
    Timer timer;
    const fs::path root = desk().root / "determinism";
    fs::remove_all(root);

    // reduced-scale end-to-end CLI runs; the criterion fixes bitwise
    // equality, not the workload size
    RunConfig config;
    config.dataset.num_samples = 300;
    config.dataset.seed = 7;
    config.net = desk_net_config();
    config.train = desk_train_config();
    config.train.epochs = 3;
    cli::cmd_gen_data(config, root / "data");

    cli::cmd_train(config, root / "data", root / "run_a");
    cli::cmd_train(config, root / "data", root / "run_b");
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(f)), {});
    };
    bool pass = slurp(root / "run_a" / "trace.csv") == slurp(root / "run_b" / "trace.csv");
    // checkpoints embed their configured path; compare the parameter payloads
    // via identical predictions instead of raw bytes when paths differ, and
    // raw bytes here since both runs used their own resolved paths
    const Checkpoint a = load_checkpoint(root / "run_a" / "model.mcan");
    const Checkpoint b = load_checkpoint(root / "run_b" / "model.mcan");
    const auto pa = a.net.named_parameters();
    const auto pb = b.net.named_parameters();
    for (size_t i = 0; i < pa.size(); ++i) {
        const auto va = pa[i].second.values();
        const auto vb = pb[i].second.values();
        pass = pass && std::equal(va.begin(), va.end(), vb.begin(), vb.end());
    }

    // sweep CSVs byte-identical across reruns
    RunConfig sweep_cfg = config;
    sweep_cfg.sweep.sigmas = {0.0, 0.1, 0.2};
    sweep_cfg.sweep.eval_samples = 60;
    sweep_cfg.sweep_split = "test";
    cli::cmd_sweep(sweep_cfg, root / "run_a" / "model.mcan", root / "data", root / "sw_a");
    cli::cmd_sweep(sweep_cfg, root / "run_a" / "model.mcan", root / "data", root / "sw_b");
    pass = pass && slurp(root / "sw_a" / "sweep.csv") == slurp(root / "sw_b" / "sweep.csv");

    // checkpoint round-trip preserves predictions bitwise: save the loaded
    // model again, reload, and compare forwards
    save_checkpoint(a.net, a.train_config, root / "resaved.mcan");
    const Checkpoint resaved = load_checkpoint(root / "resaved.mcan");
    const auto data = load_dataset_dir(root / "data", 32, 1);
    const Tensor x = stack_images(data.samples, {0, 1, 2, 3});
    bool roundtrip = true;
    for (int k = 0; k < 6; ++k) {
        const auto [p1, m1] = a.net.forward_attribute(k, x, {1.0, 0.0});
        const auto [p2, m2] = resaved.net.forward_attribute(k, x, {1.0, 0.0});
        const auto v1 = p1.values(), v2 = p2.values();
        const auto w1 = m1.values(), w2 = m2.values();
        roundtrip = roundtrip && std::equal(v1.begin(), v1.end(), v2.begin(), v2.end()) &&
                    std::equal(w1.begin(), w1.end(), w2.begin(), w2.end());
    }
    pass = pass && roundtrip;
    report(11, "bitwise-identical checkpoints and CSVs across reruns", pass, timer.seconds());
    CHECK(pass);
    CHECK(timer.seconds() < 720.0);
}

int main(int argc, char** argv) {
    doctest::Context context(argc, argv);
    std::printf("acceptance suite (backend: %s)\n",
                kernels::backend() == kernels::Backend::parallel ? "parallel" : "serial");
    const int res = context.run();
    return res;
}
