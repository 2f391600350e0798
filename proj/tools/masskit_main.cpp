// masskit -- command-line front end for the mammographic-mass severity
// pipeline. Subcommands mirror the pipeline stages: audit, impute, split,
// train, evaluate, run, compare.
//
// Exit codes: 0 success, 1 at least one model failed inside `run`,
// 2 usage / config / data errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "masskit/chaid.hpp"
#include "masskit/curves.hpp"
#include "masskit/dataset.hpp"
#include "masskit/encoding.hpp"
#include "masskit/impute.hpp"
#include "masskit/mlp.hpp"
#include "masskit/pipeline.hpp"
#include "masskit/report.hpp"
#include "masskit/svm.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    json j;
    in >> j;
    return j;
}

void ensure_parent_dir(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

struct AuditArgs {
    std::string data;
    std::string json_out;
};

int run_audit(const AuditArgs& a) {
    masskit::Dataset ds = masskit::load_dataset(a.data);
    masskit::AuditReport rep = masskit::audit(ds);
    std::cout << masskit::audit_to_text(rep);
    if (!a.json_out.empty()) {
        ensure_parent_dir(a.json_out);
        masskit::detail::write_json_file(a.json_out, masskit::audit_to_json(rep));
    }
    return 0;
}

struct ImputeArgs {
    std::string data;
    std::string out;
    std::string log;
    std::uint64_t seed = 1;
    masskit::CartParams cart;
    bool use_label = false;
};

int run_impute(const ImputeArgs& a) {
    masskit::Dataset ds = masskit::load_dataset(a.data);
    masskit::ImputationResult res = masskit::impute_all(ds, a.cart, a.seed, a.use_label);
    if (a.out.empty()) {
        masskit::write_dataset(res.data, std::cout);
    } else {
        ensure_parent_dir(a.out);
        masskit::write_dataset(res.data, fs::path(a.out));
    }
    if (!a.log.empty()) {
        ensure_parent_dir(a.log);
        masskit::detail::write_json_file(a.log, masskit::imputation_log_json(res, ds));
    }
    std::cerr << "filled " << res.log.size() << " missing cells\n";
    return 0;
}

struct SplitArgs {
    std::string data;
    std::string train_out;
    std::string test_out;
    masskit::PartitionSpec spec;
};

int run_split(const SplitArgs& a) {
    masskit::Dataset ds = masskit::load_dataset(a.data);
    auto [train, test] = masskit::split(ds, a.spec);
    ensure_parent_dir(a.train_out);
    ensure_parent_dir(a.test_out);
    masskit::write_dataset(train, fs::path(a.train_out));
    masskit::write_dataset(test, fs::path(a.test_out));
    std::cerr << "train " << train.size() << " / test " << test.size() << " records\n";
    return 0;
}

struct TrainArgs {
    std::string model;
    std::string data;
    std::string model_out;
    std::uint64_t seed = 1;
    bool include_birads = false;
    // chaid
    masskit::ChaidSettings chaid;
    std::optional<std::size_t> min_parent_abs, min_child_abs;
    // mlp
    masskit::MlpSettings mlp;
    // svm
    masskit::SvmSettings svm;
};

int run_train(const TrainArgs& a) {
    masskit::Dataset ds = masskit::load_dataset(a.data);
    masskit::EncodingConfig enc_cfg{a.include_birads};
    json out;
    if (a.model == "chaid") {
        masskit::ChaidParams params = a.chaid.resolve(ds.size());
        if (a.min_parent_abs) params.min_parent = *a.min_parent_abs;
        if (a.min_child_abs) params.min_child = *a.min_child_abs;
        masskit::ChaidTree tree = masskit::grow_tree(ds, params, a.include_birads);
        out = masskit::chaid_to_json(tree);
        out["include_nonpredictive"] = a.include_birads;
        out["schema"] = masskit::schema_to_json(ds.schema);
        std::cerr << "chaid: depth " << tree.depth << ", " << tree.node_count() << " nodes\n";
    } else if (a.model == "mlp") {
        masskit::Encoder encoder = masskit::Encoder::fit(ds, enc_cfg);
        masskit::FeatureMatrix fm = encoder.transform(ds);
        auto [fit_fm, val_fm] =
            masskit::carve_validation(fm, a.mlp.validation_fraction, masskit::derive_seed(a.seed, 0x7a1));
        masskit::MlpTrainConfig tc = a.mlp.train;
        tc.seed = a.seed;
        masskit::MlpTrainResult trained = masskit::train_mlp(fit_fm, val_fm, tc);
        masskit::MlpNetwork net = trained.net;
        if (a.mlp.prune_enabled) {
            net = masskit::prune_mlp(net, fit_fm.rows, fit_fm.labels, val_fm.rows, val_fm.labels,
                                     a.mlp.prune, tc);
        }
        out = masskit::mlp_to_json(net, tc);
        out["encoder"] = encoder.to_json();
        std::cerr << "mlp: best validation accuracy " << trained.best_val_accuracy << "\n";
    } else if (a.model == "svm") {
        masskit::Encoder encoder = masskit::Encoder::fit(ds, enc_cfg);
        masskit::FeatureMatrix fm = encoder.transform(ds);
        masskit::SvmModel model = masskit::train_svm(fm, a.svm.params, a.svm.kernel);
        out = masskit::svm_to_json(model);
        out["encoder"] = encoder.to_json();
        std::cerr << "svm: " << model.alpha.size() << " support vectors"
                  << (model.converged ? "" : " (no convergence within max_passes)") << "\n";
    } else {
        throw std::invalid_argument("unknown model '" + a.model + "' (valid: chaid, mlp, svm)");
    }
    ensure_parent_dir(a.model_out);
    masskit::detail::write_json_file(a.model_out, out);
    return 0;
}

struct EvaluateArgs {
    std::string model;
    std::string data;
    std::string report_out = "report.json";
    std::string curves_dir = ".";
    std::string partition = "test";
};

int run_evaluate(const EvaluateArgs& a) {
    json mj = read_json_file(a.model);
    const std::string format = mj.value("format", "");
    masskit::ModelScores scores;
    std::vector<int> truth;
    std::string model_name;
    if (format == "masskit/chaid") {
        masskit::ChaidTree tree = masskit::chaid_from_json(mj);
        auto schema = masskit::schema_from_json(mj.at("schema"));
        masskit::Dataset ds = masskit::load_dataset(a.data, schema);
        scores = masskit::chaid_scores(tree, ds);
        truth = masskit::labels_of(ds);
        model_name = "chaid";
    } else if (format == "masskit/mlp" || format == "masskit/svm") {
        masskit::Encoder encoder = masskit::Encoder::from_json(mj.at("encoder"));
        masskit::Dataset ds = masskit::load_dataset(a.data, encoder.schema());
        masskit::FeatureMatrix fm = encoder.transform(ds);
        if (format == "masskit/mlp") {
            masskit::MlpNetwork net = masskit::mlp_from_json(mj);
            if (net.min_row_width() > fm.width()) {
                throw std::runtime_error("model expects wider rows than the encoded data provides");
            }
            scores = masskit::mlp_scores(net, fm);
            model_name = "mlp";
        } else {
            masskit::SvmModel model = masskit::svm_from_json(mj);
            if (!model.support_vectors.empty() && model.support_vectors[0].size() != fm.width()) {
                throw std::runtime_error("model support vectors and encoded data have different widths");
            }
            scores = masskit::svm_scores(model, fm);
            model_name = "svm";
        }
        truth = fm.labels;
    } else {
        throw std::runtime_error("unrecognized model file format: '" + format + "'");
    }

    masskit::EvalReport rep =
        masskit::EvalReport::from_scores(model_name, a.partition, scores.preds, truth, scores.scored);
    ensure_parent_dir(a.report_out);
    masskit::detail::write_json_file(a.report_out, masskit::report_to_json(rep));
    fs::create_directories(a.curves_dir);
    bool has_both = rep.auc.has_value();
    if (has_both) {
        masskit::write_curve_csv(masskit::roc_curve(scores.scored),
                                 fs::path(a.curves_dir) / (model_name + "_" + a.partition + "_roc.csv"));
        masskit::write_curve_csv(masskit::gain_curve(scores.scored),
                                 fs::path(a.curves_dir) / (model_name + "_" + a.partition + "_gain.csv"));
    }
    std::vector<masskit::EvalReport> reports{rep};
    std::cout << masskit::render_metrics_table(reports);
    return 0;
}

struct RunArgs {
    std::string config;
    std::optional<std::uint64_t> seed_override;
    std::string data_override;
    std::string outdir_override;
};

int run_run(const RunArgs& a) {
    masskit::ExperimentConfig cfg = masskit::config_from_json(read_json_file(a.config));
    if (!a.data_override.empty()) cfg.dataset_path = a.data_override;
    if (!a.outdir_override.empty()) cfg.output_dir = a.outdir_override;
    masskit::validate_config(cfg);

    masskit::RunManifest manifest = masskit::run_experiment(cfg, &std::cerr, a.seed_override);

    // Tables for the first seed's reports, then the seed aggregate.
    std::vector<masskit::EvalReport> first_seed;
    for (const auto& r : manifest.all_reports) {
        if (first_seed.size() < 2 * cfg.models.size()) first_seed.push_back(r);
    }
    if (!first_seed.empty()) {
        std::cout << "--- seed " << manifest.runs.front().seed << " ---\n";
        std::cout << masskit::compare_report(first_seed).text << '\n';
    }
    std::cout << masskit::render_summary_text(manifest.summary);
    std::cout << "artifacts: " << manifest.run_dir.string() << "\n";

    for (const auto& run : manifest.runs) {
        for (const auto& [model, msg] : run.errors) {
            std::cerr << "seed " << run.seed << " " << model << " failed: " << msg << "\n";
        }
    }
    return manifest.any_model_failed ? 1 : 0;
}

struct CompareArgs {
    std::vector<std::string> reports;
    std::string json_out;
};

int run_compare(const CompareArgs& a) {
    std::vector<masskit::EvalReport> reports;
    for (const auto& path : a.reports) reports.push_back(masskit::report_from_json(read_json_file(path)));
    masskit::ComparativeSummary summary = masskit::compare_report(reports);
    std::cout << summary.text;
    if (!a.json_out.empty()) {
        ensure_parent_dir(a.json_out);
        masskit::detail::write_json_file(a.json_out, summary.json);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mammographic-mass severity toolkit: C&RT imputation, CHAID / MLP / SVM training, "
                 "ROC & gain evaluation"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    AuditArgs audit_args;
    auto* audit_cmd = app.add_subcommand("audit", "Audit a dataset: valid / missing / out-of-domain counts");
    audit_cmd->add_option("data", audit_args.data, "UCI-format CSV file")->required();
    audit_cmd->add_option("--json", audit_args.json_out, "write the audit report as JSON");

    ImputeArgs impute_args;
    auto* impute_cmd = app.add_subcommand("impute", "Fill missing cells with per-attribute C&RT predictions");
    impute_cmd->add_option("data", impute_args.data, "UCI-format CSV file")->required();
    impute_cmd->add_option("--out", impute_args.out, "imputed CSV path (stdout when omitted)");
    impute_cmd->add_option("--log", impute_args.log, "JSON log of filled cells");
    impute_cmd->add_option("--seed", impute_args.seed, "imputation seed");
    impute_cmd->add_option("--max-depth", impute_args.cart.max_depth, "C&RT maximum depth");
    impute_cmd->add_option("--min-leaf", impute_args.cart.min_leaf, "C&RT minimum records per leaf");
    impute_cmd->add_option("--min-impurity-decrease", impute_args.cart.min_impurity_decrease,
                           "C&RT minimum impurity decrease");
    impute_cmd->add_flag("--use-label", impute_args.use_label, "let imputation trees use the severity label");

    SplitArgs split_args;
    auto* split_cmd = app.add_subcommand("split", "Partition a dataset into train and test files");
    split_cmd->add_option("data", split_args.data, "UCI-format CSV file")->required();
    split_cmd->add_option("--train-out", split_args.train_out, "training CSV path")->required();
    split_cmd->add_option("--test-out", split_args.test_out, "test CSV path")->required();
    split_cmd->add_option("--fraction", split_args.spec.train_fraction, "training fraction");
    split_cmd->add_option("--seed", split_args.spec.seed, "shuffle seed");
    split_cmd->add_flag("--stratified,!--no-stratified", split_args.spec.stratified,
                        "preserve class proportions");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train one classifier on a complete (imputed) dataset");
    train_cmd->add_option("--model", train_args.model, "chaid, mlp, or svm")->required();
    train_cmd->add_option("data", train_args.data, "complete UCI-format CSV file")->required();
    train_cmd->add_option("model_out", train_args.model_out, "output model JSON path")->required();
    train_cmd->add_option("--seed", train_args.seed, "training seed");
    train_cmd->add_flag("--include-birads", train_args.include_birads,
                        "include the BI-RADS assessment as a predictor");
    train_cmd->add_option("--alpha-merge", train_args.chaid.alpha_merge, "chaid merge threshold");
    train_cmd->add_option("--alpha-split", train_args.chaid.alpha_split, "chaid split threshold");
    train_cmd->add_option("--max-depth", train_args.chaid.max_depth, "chaid maximum depth");
    train_cmd->add_option("--bins", train_args.chaid.bin_count, "chaid bins for continuous attributes");
    train_cmd->add_option("--min-parent", train_args.min_parent_abs, "chaid minimum records to split a node");
    train_cmd->add_option("--min-child", train_args.min_child_abs, "chaid minimum records per child");
    train_cmd->add_option("--lr", train_args.mlp.train.learning_rate, "mlp learning rate");
    train_cmd->add_option("--momentum", train_args.mlp.train.momentum, "mlp momentum");
    train_cmd->add_option("--epochs", train_args.mlp.train.max_epochs, "mlp maximum epochs");
    train_cmd->add_option("--patience", train_args.mlp.train.patience, "mlp early-stop patience");
    train_cmd->add_option("--hidden", train_args.mlp.train.hidden, "mlp hidden layer sizes");
    train_cmd->add_flag("--shuffle,!--no-shuffle", train_args.mlp.train.shuffle, "shuffle each epoch");
    train_cmd->add_option("--val-fraction", train_args.mlp.validation_fraction,
                          "fraction of data carved for validation");
    train_cmd->add_flag("--prune,!--no-prune", train_args.mlp.prune_enabled, "prune the trained network");
    train_cmd->add_option("--prune-fraction", train_args.mlp.prune.prune_fraction, "neurons removed per round");
    train_cmd->add_option("--prune-rounds", train_args.mlp.prune.max_rounds, "maximum prune rounds");
    train_cmd->add_option("--prune-tolerance", train_args.mlp.prune.tolerance,
                          "allowed validation-accuracy drop per round");
    train_cmd->add_option("--prune-retrain-epochs", train_args.mlp.prune.retrain_epochs,
                          "retraining epochs per prune round");
    train_cmd->add_option("--c", train_args.svm.params.c, "svm regularization C");
    train_cmd->add_option("--gamma", train_args.svm.kernel.gamma, "polynomial kernel gamma");
    train_cmd->add_option("--coef", train_args.svm.kernel.coef_r, "polynomial kernel r");
    train_cmd->add_option("--degree", train_args.svm.kernel.degree, "polynomial kernel degree");
    train_cmd->add_option("--kkt-tol", train_args.svm.params.kkt_tolerance, "svm KKT tolerance");
    train_cmd->add_option("--max-passes", train_args.svm.params.max_passes, "svm examine-all sweep cap");

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a dataset with a trained model");
    eval_cmd->add_option("model", eval_args.model, "model JSON path")->required();
    eval_cmd->add_option("data", eval_args.data, "UCI-format CSV file")->required();
    eval_cmd->add_option("--report", eval_args.report_out, "output report JSON path");
    eval_cmd->add_option("--curves-dir", eval_args.curves_dir, "directory for ROC/gain CSVs");
    eval_cmd->add_option("--partition", eval_args.partition, "partition label stored in the report");

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "Run the full multi-seed experiment from a config file");
    run_cmd->add_option("--config", run_args.config, "experiment config JSON")->required();
    run_cmd->add_option("--seed-override", run_args.seed_override, "run a single seed instead of the list");
    run_cmd->add_option("--data", run_args.data_override, "override the config's dataset path");
    run_cmd->add_option("--out", run_args.outdir_override, "override the config's output directory");

    CompareArgs compare_args;
    auto* compare_cmd = app.add_subcommand("compare", "Render a comparative table from report JSON files");
    compare_cmd->add_option("reports", compare_args.reports, "EvalReport JSON files")->required();
    compare_cmd->add_option("--json", compare_args.json_out, "write the comparative summary as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (audit_cmd->parsed()) return run_audit(audit_args);
        if (impute_cmd->parsed()) return run_impute(impute_args);
        if (split_cmd->parsed()) return run_split(split_args);
        if (train_cmd->parsed()) return run_train(train_args);
        if (eval_cmd->parsed()) return run_evaluate(eval_args);
        if (run_cmd->parsed()) return run_run(run_args);
        if (compare_cmd->parsed()) return run_compare(compare_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
