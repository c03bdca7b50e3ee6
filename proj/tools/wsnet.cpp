// Command-line front end: cost analysis, training, evaluation, randomized
// verification, benchmarking, quantization, and synthetic data generation.
//
// Exit codes: 0 success, 1 usage error (bad flags, missing files),
// 2 validation error (malformed configs/files, infeasible specs),
// 3 runtime failure (e.g. training divergence).

#include "wsnet/wsnet.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

wsnet::NetworkSpec load_config(const std::string& path) {
    return wsnet::parse_config(read_text_file(path));
}

void require_exists(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw CLI::ValidationError("file not found: " + path);
}

int run(int argc, char** argv) {
    CLI::App app{"weight-sampled 1D convolutional networks"};
    app.require_subcommand(1);

    // ---- cost ----
    auto* cost = app.add_subcommand("cost", "analytic parameter / mult-adds report");
    std::string cost_config, cost_baseline;
    std::int64_t cost_input_len = 0;
    bool cost_csv = false;
    cost->add_option("config", cost_config, "network config")->required();
    cost->add_option("--input-len", cost_input_len, "override input length");
    cost->add_option("--baseline", cost_baseline, "baseline config for ratio lines");
    cost->add_flag("--csv", cost_csv, "CSV output");
    cost->callback([&] {
        require_exists(cost_config);
        wsnet::NetworkSpec spec = load_config(cost_config);
        const std::int64_t t = cost_input_len > 0 ? cost_input_len : spec.input_len;
        if (t <= 0) throw wsnet::validation_error("no input length (config or --input-len)");
        wsnet::CostReport rep = wsnet::network_report(spec, t);
        if (cost_csv) {
            wsnet::print_report_csv(rep, std::cout);
        } else {
            wsnet::print_report(rep, std::cout);
        }
        if (!cost_baseline.empty()) {
            require_exists(cost_baseline);
            wsnet::CostReport base =
                wsnet::network_report(load_config(cost_baseline), t);
            wsnet::print_comparison(base, rep, std::cout);
        }
    });

    // ---- train ----
    auto* tr = app.add_subcommand("train", "train a model on a dataset");
    std::string tr_config, tr_data, tr_out = "model.wsnet";
    std::int64_t tr_seed = -1;
    double tr_holdout = 0.1;
    bool tr_fast = false;
    tr->add_option("config", tr_config, "network config")->required();
    tr->add_option("dataset", tr_data, "training dataset")->required();
    tr->add_option("--out", tr_out, "output model path");
    tr->add_option("--seed", tr_seed, "override the config seed");
    tr->add_option("--holdout", tr_holdout, "held-out fraction for eval accuracy");
    tr->add_flag("--fast", tr_fast, "integral-image conv forward");
    tr->callback([&] {
        require_exists(tr_config);
        require_exists(tr_data);
        wsnet::NetworkSpec spec = load_config(tr_config);
        if (tr_seed >= 0) spec.hyper.seed = static_cast<std::uint64_t>(tr_seed);
        wsnet::Dataset full = wsnet::load_dataset(tr_data);
        if (spec.classes > 0 && spec.classes != full.classes)
            throw wsnet::validation_error("config expects " + std::to_string(spec.classes) +
                                          " classes, dataset has " +
                                          std::to_string(full.classes));
        if (spec.input_len > 0 && spec.input_len != full.length)
            throw wsnet::validation_error("config expects length " +
                                          std::to_string(spec.input_len) +
                                          ", dataset has " + std::to_string(full.length));
        wsnet::check_fc_flatten(spec, full.length);
        wsnet::Dataset train_set = full, eval_set;
        if (tr_holdout > 0.0) wsnet::split_dataset(full, tr_holdout, train_set, eval_set);
        wsnet::Network net = wsnet::build_network(spec);
        net.fast_forward = tr_fast;
        wsnet::TrainResult res = wsnet::train(
            net, train_set, eval_set.size() ? &eval_set : nullptr, spec.hyper, std::cout);
        wsnet::save_model(net, tr_out);
        std::cout << "model written to " << tr_out << " (final loss " << res.final_loss
                  << ", acc " << res.final_acc << ")\n";
    });

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "evaluate a model on a dataset");
    std::string ev_model, ev_data;
    ev->add_option("model", ev_model, "model file")->required();
    ev->add_option("dataset", ev_data, "dataset file")->required();
    ev->callback([&] {
        require_exists(ev_model);
        require_exists(ev_data);
        wsnet::Network net = wsnet::load_model(ev_model);
        wsnet::Dataset ds = wsnet::load_dataset(ev_data);
        if (ds.size() == 0) throw wsnet::validation_error("empty dataset");
        const double acc = wsnet::evaluate_accuracy(net, ds);
        char line[64];
        std::snprintf(line, sizeof(line), "acc=%.6f n=%zu", acc, ds.size());
        std::cout << line << "\n";
    });

    // ---- verify ----
    auto* vf = app.add_subcommand("verify", "randomized fast/naive + gradient checks");
    int vf_trials = 200;
    std::int64_t vf_seed = 0;
    vf->add_option("--trials", vf_trials, "equivalence trials");
    vf->add_option("--seed", vf_seed, "rng seed");
    vf->callback([&] {
        if (vf_trials <= 0) throw CLI::ValidationError("--trials must be positive");
        constexpr double kEquivTol = 1e-10;
        constexpr double kGradTol = 1e-6;
        wsnet::EquivalenceResult eq = wsnet::run_equivalence_suite(
            vf_trials, static_cast<std::uint64_t>(vf_seed), kEquivTol, &std::cout);
        std::cout << "fast/naive equivalence: worst " << eq.worst << " (trial "
                  << eq.worst_trial << ", tolerance " << kEquivTol << ") -> "
                  << (eq.pass ? "ok" : "FAIL") << "\n";
        wsnet::FdResult fd = wsnet::run_fd_suite(20, static_cast<std::uint64_t>(vf_seed) + 1,
                                                 kGradTol, &std::cout);
        std::cout << "gradient check: worst rel " << fd.worst << " (net " << fd.worst_net
                  << ", tolerance " << kGradTol << ") -> " << (fd.pass ? "ok" : "FAIL")
                  << "\n";
        if (!eq.pass || !fd.pass) throw wsnet::runtime_failure("verification failed");
    });

    // ---- bench ----
    auto* bn = app.add_subcommand("bench", "naive vs fast wall-clock per conv layer");
    std::string bn_config;
    std::int64_t bn_input_len = 100000;
    int bn_repeat = 5;
    bn->add_option("config", bn_config, "network config")->required();
    bn->add_option("--input-len", bn_input_len, "input length");
    bn->add_option("--repeat", bn_repeat, "timed repetitions (median reported)");
    bn->callback([&] {
        require_exists(bn_config);
        if (bn_repeat < 1) throw CLI::ValidationError("--repeat must be >= 1");
        wsnet::NetworkSpec spec = load_config(bn_config);
        wsnet::NetworkSpec scratch = spec;
        char line[160];
        std::snprintf(line, sizeof(line), "%-12s %12s %12s %12s %12s", "layer",
                      "naive_ms", "fast_ms", "measured", "theoretical");
        std::cout << line << "\n";
        std::int64_t t = bn_input_len;
        for (const wsnet::AtomicOp& op : wsnet::expand_spec(scratch)) {
            if (op.kind == wsnet::LayerKind::conv) {
                wsnet::BenchResult r =
                    wsnet::bench_layer(op.spec, static_cast<int>(t), bn_repeat, 7);
                std::snprintf(line, sizeof(line), "%-12s %12.3f %12.3f %11.2fx %11.2fx",
                              op.name.c_str(), r.naive_ms, r.fast_ms, r.measured_speedup,
                              r.analytic_speedup);
                std::cout << line << "\n";
                const wsnet::ConvGeometry g =
                    wsnet::conv_geometry(static_cast<int>(t), op.spec.filter_len,
                                         op.spec.conv_stride, op.spec.padding);
                t = g.out_len;
            } else if (op.kind == wsnet::LayerKind::maxpool) {
                t = (t + op.pool_stride - 1) / op.pool_stride;
            } else if (op.kind == wsnet::LayerKind::fc) {
                t = 1;
            }
        }
    });

    // ---- quantize ----
    auto* qt = app.add_subcommand("quantize", "8-bit quantize a model file");
    std::string qt_model, qt_out = "model.q.wsnet";
    qt->add_option("model", qt_model, "input model")->required();
    qt->add_option("--out", qt_out, "output model path");
    qt->callback([&] {
        require_exists(qt_model);
        wsnet::Network net = wsnet::load_model(qt_model);
        if (wsnet::model_is_quantized(net))
            throw wsnet::validation_error("model is already quantized");
        wsnet::save_model(net, qt_out, /*quantize_weights=*/true);
        const auto before = std::filesystem::file_size(qt_model);
        const auto after = std::filesystem::file_size(qt_out);
        char line[128];
        std::snprintf(line, sizeof(line), "size ratio = %.4f (float %llu bytes -> quantized %llu bytes)",
                      static_cast<double>(before) / after,
                      static_cast<unsigned long long>(before),
                      static_cast<unsigned long long>(after));
        std::cout << line << "\n";
    });

    // ---- synth ----
    auto* sy = app.add_subcommand("synth", "generate a synthetic dataset");
    int sy_classes = 4, sy_per_class = 200;
    std::int64_t sy_len = 4096, sy_seed = 0;
    std::string sy_out = "synth.wsds";
    sy->add_option("--classes", sy_classes, "number of classes");
    sy->add_option("--per-class", sy_per_class, "clips per class");
    sy->add_option("--len", sy_len, "clip length");
    sy->add_option("--seed", sy_seed, "rng seed");
    sy->add_option("--out", sy_out, "output path");
    sy->callback([&] {
        wsnet::Dataset ds = wsnet::synth_dataset(sy_classes, sy_per_class,
                                                 static_cast<int>(sy_len),
                                                 static_cast<std::uint64_t>(sy_seed));
        wsnet::save_dataset(ds, sy_out);
        std::cout << "wrote " << ds.size() << " clips (" << ds.classes << " classes, length "
                  << ds.length << ") to " << sy_out << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1; // usage error
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const wsnet::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const wsnet::runtime_failure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
