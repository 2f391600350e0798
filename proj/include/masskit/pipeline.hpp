#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "masskit/chaid.hpp"
#include "masskit/curves.hpp"
#include "masskit/dataset.hpp"
#include "masskit/encoding.hpp"
#include "masskit/hash.hpp"
#include "masskit/impute.hpp"
#include "masskit/metrics.hpp"
#include "masskit/mlp.hpp"
#include "masskit/report.hpp"
#include "masskit/rng.hpp"
#include "masskit/svm.hpp"

namespace masskit {

// ---------------------------------------------------------------------------
// Partitioning

struct PartitionSpec {
    double train_fraction = 0.7;
    bool stratified = true;
    std::uint64_t seed = 1;
};

namespace detail {

// Hare-style largest-remainder apportionment of `total_train` seats across
// classes with quotas fraction * class_size.
inline std::vector<std::size_t> apportion_train_counts(const std::vector<std::size_t>& class_sizes,
                                                       double fraction, std::size_t total_train) {
    std::vector<std::size_t> base(class_sizes.size());
    std::vector<std::pair<double, std::size_t>> remainders;  // (-remainder, class) for stable sort
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < class_sizes.size(); ++c) {
        double quota = fraction * static_cast<double>(class_sizes[c]);
        base[c] = static_cast<std::size_t>(std::floor(quota));
        assigned += base[c];
        remainders.emplace_back(-(quota - std::floor(quota)), c);
    }
    std::stable_sort(remainders.begin(), remainders.end());
    std::size_t seats = total_train > assigned ? total_train - assigned : 0;
    for (std::size_t k = 0; k < seats && k < remainders.size(); ++k) base[remainders[k].second] += 1;
    return base;
}

}  // namespace detail

// Seeded 70/30-style partition. Stratified mode splits each class
// independently with largest-remainder rounding so the sizes are exact and
// deterministic; record order within each side follows the input order.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, const PartitionSpec& spec) {
    if (ds.records.empty()) throw std::invalid_argument("split: empty dataset");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw std::invalid_argument("split: train_fraction must be in (0,1)");
    }
    const std::size_t n = ds.size();
    const std::size_t total_train =
        static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    if (total_train == 0 || total_train == n) throw std::invalid_argument("split: one side would be empty");

    Rng rng(spec.seed);
    std::vector<bool> in_train(n, false);
    if (spec.stratified) {
        std::vector<std::vector<std::size_t>> by_class(2);
        for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(ds.records[i].label)].push_back(i);
        std::vector<std::size_t> sizes;
        for (const auto& idx : by_class) sizes.push_back(idx.size());
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            if (sizes[c] > 0 && sizes[c] < 2) {
                throw std::invalid_argument("split: class " + std::to_string(c) +
                                            " has fewer than 2 records; cannot stratify");
            }
        }
        std::vector<std::size_t> train_counts = detail::apportion_train_counts(sizes, spec.train_fraction, total_train);
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            auto idx = by_class[c];
            rng.shuffle(idx);
            for (std::size_t k = 0; k < train_counts[c] && k < idx.size(); ++k) in_train[idx[k]] = true;
        }
    } else {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        rng.shuffle(idx);
        for (std::size_t k = 0; k < total_train; ++k) in_train[idx[k]] = true;
    }

    Dataset train, test;
    train.schema = ds.schema;
    test.schema = ds.schema;
    for (std::size_t i = 0; i < n; ++i) (in_train[i] ? train : test).records.push_back(ds.records[i]);
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct ChaidSettings {
    double alpha_merge = 0.1;
    double alpha_split = 0.1;
    int max_depth = 5;
    int bin_count = 10;
    double min_parent_fraction = 0.02;  // of training records, floor 2
    double min_child_fraction = 0.01;

    ChaidParams resolve(std::size_t train_size) const {
        ChaidParams p;
        p.alpha_merge = alpha_merge;
        p.alpha_split = alpha_split;
        p.max_depth = max_depth;
        p.bin_count = bin_count;
        p.min_parent = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::llround(min_parent_fraction * static_cast<double>(train_size))));
        p.min_child = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::llround(min_child_fraction * static_cast<double>(train_size))));
        return p;
    }
};

struct MlpSettings {
    MlpTrainConfig train;
    bool prune_enabled = true;
    PruneConfig prune;
    double validation_fraction = 0.2;  // carved from the training side
};

struct SvmSettings {
    SvmParams params;
    KernelParams kernel;
};

struct ImputationSettings {
    CartParams cart;
    bool use_label = false;
};

struct ExperimentConfig {
    std::string dataset_path;
    std::string output_dir = "runs";
    std::vector<std::string> models = {"chaid", "mlp", "svm"};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    EncodingConfig encoding;
    ImputationSettings imputation;
    PartitionSpec partition;  // per-run seed comes from `seeds`
    ChaidSettings chaid;
    MlpSettings mlp;
    SvmSettings svm;
};

inline const std::vector<std::string>& known_model_names() {
    static const std::vector<std::string> names = {"chaid", "mlp", "svm"};
    return names;
}

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.dataset_path.empty()) throw std::invalid_argument("config: dataset path is required");
    if (cfg.models.empty()) throw std::invalid_argument("config: at least one model must be selected");
    if (cfg.seeds.empty()) throw std::invalid_argument("config: seed list must be non-empty");
    for (const auto& m : cfg.models) {
        const auto& known = known_model_names();
        if (std::find(known.begin(), known.end(), m) == known.end()) {
            std::string valid;
            for (const auto& k : known) valid += (valid.empty() ? "" : ", ") + k;
            throw std::invalid_argument("config: unknown model '" + m + "' (valid: " + valid + ")");
        }
    }
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = cfg.dataset_path;
    j["output_dir"] = cfg.output_dir;
    j["models"] = cfg.models;
    j["seeds"] = cfg.seeds;
    j["encoding"] = {{"include_bi_rads", cfg.encoding.include_nonpredictive}};
    j["imputation"] = {{"max_depth", cfg.imputation.cart.max_depth},
                       {"min_leaf", cfg.imputation.cart.min_leaf},
                       {"min_impurity_decrease", cfg.imputation.cart.min_impurity_decrease},
                       {"use_label", cfg.imputation.use_label}};
    j["partition"] = {{"train_fraction", cfg.partition.train_fraction}, {"stratified", cfg.partition.stratified}};
    j["chaid"] = {{"alpha_merge", cfg.chaid.alpha_merge},
                  {"alpha_split", cfg.chaid.alpha_split},
                  {"max_depth", cfg.chaid.max_depth},
                  {"bin_count", cfg.chaid.bin_count},
                  {"min_parent_fraction", cfg.chaid.min_parent_fraction},
                  {"min_child_fraction", cfg.chaid.min_child_fraction}};
    j["mlp"] = {{"learning_rate", cfg.mlp.train.learning_rate},
                {"momentum", cfg.mlp.train.momentum},
                {"max_epochs", cfg.mlp.train.max_epochs},
                {"patience", cfg.mlp.train.patience},
                {"hidden", cfg.mlp.train.hidden},
                {"shuffle", cfg.mlp.train.shuffle},
                {"validation_fraction", cfg.mlp.validation_fraction},
                {"prune", {{"enabled", cfg.mlp.prune_enabled},
                           {"prune_fraction", cfg.mlp.prune.prune_fraction},
                           {"max_rounds", cfg.mlp.prune.max_rounds},
                           {"tolerance", cfg.mlp.prune.tolerance},
                           {"retrain_epochs", cfg.mlp.prune.retrain_epochs}}}};
    j["svm"] = {{"c", cfg.svm.params.c},
                {"kkt_tolerance", cfg.svm.params.kkt_tolerance},
                {"max_passes", cfg.svm.params.max_passes},
                {"gamma", cfg.svm.kernel.gamma},
                {"coef_r", cfg.svm.kernel.coef_r},
                {"degree", cfg.svm.kernel.degree}};
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.dataset_path = j.value("dataset", std::string{});
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (j.contains("models")) cfg.models = j.at("models").get<std::vector<std::string>>();
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("encoding")) {
        cfg.encoding.include_nonpredictive = j.at("encoding").value("include_bi_rads", false);
    }
    if (j.contains("imputation")) {
        const auto& ji = j.at("imputation");
        cfg.imputation.cart.max_depth = ji.value("max_depth", cfg.imputation.cart.max_depth);
        cfg.imputation.cart.min_leaf = ji.value("min_leaf", cfg.imputation.cart.min_leaf);
        cfg.imputation.cart.min_impurity_decrease =
            ji.value("min_impurity_decrease", cfg.imputation.cart.min_impurity_decrease);
        cfg.imputation.use_label = ji.value("use_label", false);
    }
    if (j.contains("partition")) {
        const auto& jp = j.at("partition");
        cfg.partition.train_fraction = jp.value("train_fraction", cfg.partition.train_fraction);
        cfg.partition.stratified = jp.value("stratified", cfg.partition.stratified);
    }
    if (j.contains("chaid")) {
        const auto& jc = j.at("chaid");
        cfg.chaid.alpha_merge = jc.value("alpha_merge", cfg.chaid.alpha_merge);
        cfg.chaid.alpha_split = jc.value("alpha_split", cfg.chaid.alpha_split);
        cfg.chaid.max_depth = jc.value("max_depth", cfg.chaid.max_depth);
        cfg.chaid.bin_count = jc.value("bin_count", cfg.chaid.bin_count);
        cfg.chaid.min_parent_fraction = jc.value("min_parent_fraction", cfg.chaid.min_parent_fraction);
        cfg.chaid.min_child_fraction = jc.value("min_child_fraction", cfg.chaid.min_child_fraction);
    }
    if (j.contains("mlp")) {
        const auto& jm = j.at("mlp");
        cfg.mlp.train.learning_rate = jm.value("learning_rate", cfg.mlp.train.learning_rate);
        cfg.mlp.train.momentum = jm.value("momentum", cfg.mlp.train.momentum);
        cfg.mlp.train.max_epochs = jm.value("max_epochs", cfg.mlp.train.max_epochs);
        cfg.mlp.train.patience = jm.value("patience", cfg.mlp.train.patience);
        if (jm.contains("hidden")) cfg.mlp.train.hidden = jm.at("hidden").get<std::vector<std::size_t>>();
        cfg.mlp.train.shuffle = jm.value("shuffle", cfg.mlp.train.shuffle);
        cfg.mlp.validation_fraction = jm.value("validation_fraction", cfg.mlp.validation_fraction);
        if (jm.contains("prune")) {
            const auto& jp = jm.at("prune");
            cfg.mlp.prune_enabled = jp.value("enabled", cfg.mlp.prune_enabled);
            cfg.mlp.prune.prune_fraction = jp.value("prune_fraction", cfg.mlp.prune.prune_fraction);
            cfg.mlp.prune.max_rounds = jp.value("max_rounds", cfg.mlp.prune.max_rounds);
            cfg.mlp.prune.tolerance = jp.value("tolerance", cfg.mlp.prune.tolerance);
            cfg.mlp.prune.retrain_epochs = jp.value("retrain_epochs", cfg.mlp.prune.retrain_epochs);
        }
    }
    if (j.contains("svm")) {
        const auto& js = j.at("svm");
        cfg.svm.params.c = js.value("c", cfg.svm.params.c);
        cfg.svm.params.kkt_tolerance = js.value("kkt_tolerance", cfg.svm.params.kkt_tolerance);
        cfg.svm.params.max_passes = js.value("max_passes", cfg.svm.params.max_passes);
        cfg.svm.kernel.gamma = js.value("gamma", cfg.svm.kernel.gamma);
        cfg.svm.kernel.coef_r = js.value("coef_r", cfg.svm.kernel.coef_r);
        cfg.svm.kernel.degree = js.value("degree", cfg.svm.kernel.degree);
    }
    validate_config(cfg);
    return cfg;
}

// Canonical content hash of the result-determining part of the config.
// Dataset path and output directory are excluded: neither changes what the
// pipeline computes, and excluding them lets byte-identity checks run two
// output directories side by side. nlohmann objects serialize with sorted
// keys, which supplies the key-order independence.
inline std::string fingerprint(const ExperimentConfig& cfg) {
    nlohmann::json j = config_to_json(cfg);
    j.erase("dataset");
    j.erase("output_dir");
    return sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------
// Scoring helpers shared by the pipeline and the CLI

struct ModelScores {
    std::vector<int> preds;
    std::vector<ScoredSample> scored;
};

inline std::vector<int> labels_of(const Dataset& ds) {
    std::vector<int> out;
    out.reserve(ds.size());
    for (const auto& rec : ds.records) out.push_back(static_cast<int>(rec.label));
    return out;
}

inline ModelScores chaid_scores(const ChaidTree& tree, const Dataset& ds) {
    ModelScores out;
    out.preds.reserve(ds.size());
    out.scored.reserve(ds.size());
    for (const auto& rec : ds.records) {
        ChaidPrediction p = chaid_predict(tree, rec);
        out.preds.push_back(static_cast<int>(p.label));
        out.scored.push_back({p.score, static_cast<int>(rec.label)});
    }
    return out;
}

inline ModelScores mlp_scores(const MlpNetwork& net, const FeatureMatrix& fm) {
    ModelScores out;
    out.preds.reserve(fm.size());
    out.scored.reserve(fm.size());
    for (std::size_t i = 0; i < fm.size(); ++i) {
        double s = mlp_score(net, fm.rows[i]);
        out.preds.push_back(mlp_classify(s));
        out.scored.push_back({s, fm.labels[i]});
    }
    return out;
}

inline ModelScores svm_scores(const SvmModel& model, const FeatureMatrix& fm) {
    ModelScores out;
    out.preds.reserve(fm.size());
    out.scored.reserve(fm.size());
    for (std::size_t i = 0; i < fm.size(); ++i) {
        double d = model.decision_value(fm.rows[i]);
        out.preds.push_back(d >= 0.0 ? 1 : 0);
        out.scored.push_back({d, fm.labels[i]});
    }
    return out;
}

// Stratified index split used to carve a validation set out of the encoded
// training matrix.
inline std::pair<FeatureMatrix, FeatureMatrix> carve_validation(const FeatureMatrix& fm, double fraction,
                                                                std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("carve_validation: bad fraction");
    std::vector<std::vector<std::size_t>> by_class(2);
    for (std::size_t i = 0; i < fm.size(); ++i) by_class[static_cast<std::size_t>(fm.labels[i])].push_back(i);
    Rng rng(seed);
    std::vector<bool> in_val(fm.size(), false);
    for (auto& idx : by_class) {
        rng.shuffle(idx);
        std::size_t take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
        if (!idx.empty() && take == idx.size()) take = idx.size() - 1;
        for (std::size_t k = 0; k < take; ++k) in_val[idx[k]] = true;
    }
    FeatureMatrix fit, val;
    fit.columns = fm.columns;
    val.columns = fm.columns;
    for (std::size_t i = 0; i < fm.size(); ++i) {
        auto& dest = in_val[i] ? val : fit;
        dest.rows.push_back(fm.rows[i]);
        dest.labels.push_back(fm.labels[i]);
    }
    if (fit.rows.empty() || val.rows.empty()) throw std::invalid_argument("carve_validation: degenerate split");
    return {std::move(fit), std::move(val)};
}

// ---------------------------------------------------------------------------
// Experiment runner

struct SeedRunEntry {
    std::uint64_t seed = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::map<std::string, nlohmann::json> model_artifacts;  // model -> paths/flags
    std::map<std::string, std::string> errors;              // model -> message
};

struct RunManifest {
    std::string fingerprint;
    std::filesystem::path run_dir;  // <output_dir>/<fingerprint>
    std::vector<SeedRunEntry> runs;
    std::vector<EvalReport> all_reports;  // every per-seed report, for rendering
    nlohmann::json summary;
    bool any_model_failed = false;
    std::optional<std::uint64_t> seed_override;
};

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write file: " + path.string());
    os << content;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct AggStat {
    std::vector<double> values;

    double mean() const {
        double s = 0.0;
        for (double v : values) s += v;
        return values.empty() ? 0.0 : s / static_cast<double>(values.size());
    }
    // sample standard deviation; 0 for a single observation
    double stddev() const {
        if (values.size() < 2) return 0.0;
        double m = mean(), s = 0.0;
        for (double v : values) s += (v - m) * (v - m);
        return std::sqrt(s / static_cast<double>(values.size() - 1));
    }
    nlohmann::json to_json() const {
        return {{"mean", mean()}, {"std", stddev()}, {"values", values}};
    }
};

}  // namespace detail

// Full replication run: per seed, impute -> split -> encode (scalers fitted
// on the training side) -> train the selected models -> evaluate both
// partitions and write models, reports, and curve CSVs. One model failing is
// recorded and the rest continue. Timestamps live only in the manifest so
// everything else is byte-reproducible.
inline RunManifest run_experiment(ExperimentConfig cfg, std::ostream* log = nullptr,
                                  std::optional<std::uint64_t> seed_override = std::nullopt) {
    if (seed_override) cfg.seeds = {*seed_override};
    validate_config(cfg);
    namespace fs = std::filesystem;

    Dataset raw = load_dataset(cfg.dataset_path);
    AuditReport audit_rep = audit(raw);

    RunManifest manifest;
    manifest.seed_override = seed_override;
    manifest.fingerprint = fingerprint(cfg);
    manifest.run_dir = fs::path(cfg.output_dir) / manifest.fingerprint;
    fs::create_directories(manifest.run_dir);
    detail::write_json_file(manifest.run_dir / "audit.json", audit_to_json(audit_rep));

    std::map<std::string, std::map<std::string, std::map<std::string, detail::AggStat>>> agg;
    // model -> partition -> metric -> values

    for (std::uint64_t seed : cfg.seeds) {
        if (log) *log << "[seed " << seed << "] imputing and partitioning\n";
        SeedRunEntry entry;
        entry.seed = seed;

        ImputationResult imputed =
            impute_all(raw, cfg.imputation.cart, derive_seed(seed, 0x1417), cfg.imputation.use_label);
        PartitionSpec part = cfg.partition;
        part.seed = seed;
        auto [train_ds, test_ds] = split(imputed.data, part);
        entry.train_size = train_ds.size();
        entry.test_size = test_ds.size();

        Encoder encoder = Encoder::fit(train_ds, cfg.encoding);
        FeatureMatrix x_train = encoder.transform(train_ds);
        FeatureMatrix x_test = encoder.transform(test_ds);

        fs::path seed_dir = manifest.run_dir / std::to_string(seed);
        fs::path models_dir = seed_dir / "models";
        fs::path reports_dir = seed_dir / "reports";
        fs::path curves_dir = seed_dir / "curves";
        fs::create_directories(models_dir);
        fs::create_directories(reports_dir);
        fs::create_directories(curves_dir);

        auto emit = [&](const std::string& model, const std::string& partition, const ModelScores& scores,
                        const std::vector<int>& truth) {
            EvalReport rep = EvalReport::from_scores(model, partition, scores.preds, truth, scores.scored);
            detail::write_json_file(reports_dir / (model + "_" + partition + ".json"), report_to_json(rep));
            if (rep.auc) {  // curves need both classes in the partition
                write_curve_csv(roc_curve(scores.scored), curves_dir / (model + "_" + partition + "_roc.csv"));
                write_curve_csv(gain_curve(scores.scored),
                                curves_dir / (model + "_" + partition + "_gain.csv"));
            }
            manifest.all_reports.push_back(rep);
            auto& slot = agg[model][partition];
            if (rep.measures.accuracy) slot["accuracy"].values.push_back(*rep.measures.accuracy);
            if (rep.measures.sensitivity) slot["sensitivity"].values.push_back(*rep.measures.sensitivity);
            if (rep.measures.specificity) slot["specificity"].values.push_back(*rep.measures.specificity);
            if (rep.auc) slot["auc"].values.push_back(*rep.auc);
            return rep;
        };

        for (const std::string& model : cfg.models) {
            try {
                if (log) *log << "[seed " << seed << "] training " << model << "\n";
                nlohmann::json artifact;
                if (model == "chaid") {
                    ChaidParams params = cfg.chaid.resolve(train_ds.size());
                    ChaidTree tree = grow_tree(train_ds, params, cfg.encoding.include_nonpredictive);
                    nlohmann::json mj = chaid_to_json(tree);
                    mj["include_nonpredictive"] = cfg.encoding.include_nonpredictive;
                    detail::write_json_file(models_dir / "chaid.json", mj);
                    detail::write_text_file(models_dir / "chaid.txt", chaid_to_text(tree));
                    emit(model, "train", chaid_scores(tree, train_ds), labels_of(train_ds));
                    emit(model, "test", chaid_scores(tree, test_ds), labels_of(test_ds));
                    artifact["model"] = (models_dir / "chaid.json").string();
                    artifact["depth"] = tree.depth;
                    artifact["nodes"] = tree.node_count();
                } else if (model == "mlp") {
                    auto [fit_fm, val_fm] =
                        carve_validation(x_train, cfg.mlp.validation_fraction, derive_seed(seed, 0x7a1));
                    MlpTrainConfig tc = cfg.mlp.train;
                    tc.seed = seed;
                    MlpTrainResult trained = train_mlp(fit_fm, val_fm, tc);
                    MlpNetwork net = trained.net;
                    if (cfg.mlp.prune_enabled) {
                        net = prune_mlp(net, fit_fm.rows, fit_fm.labels, val_fm.rows, val_fm.labels,
                                        cfg.mlp.prune, tc);
                    }
                    nlohmann::json mj = mlp_to_json(net, tc);
                    mj["encoder"] = encoder.to_json();
                    detail::write_json_file(models_dir / "mlp.json", mj);
                    emit(model, "train", mlp_scores(net, x_train), x_train.labels);
                    emit(model, "test", mlp_scores(net, x_test), x_test.labels);
                    artifact["model"] = (models_dir / "mlp.json").string();
                    artifact["sizes"] = net.sizes();
                    artifact["best_epoch"] = trained.best_epoch;
                } else if (model == "svm") {
                    SvmModel svm = train_svm(x_train, cfg.svm.params, cfg.svm.kernel);
                    nlohmann::json mj = svm_to_json(svm);
                    mj["encoder"] = encoder.to_json();
                    detail::write_json_file(models_dir / "svm.json", mj);
                    emit(model, "train", svm_scores(svm, x_train), x_train.labels);
                    emit(model, "test", svm_scores(svm, x_test), x_test.labels);
                    artifact["model"] = (models_dir / "svm.json").string();
                    artifact["support_vectors"] = svm.alpha.size();
                    artifact["converged"] = svm.converged;
                }
                entry.model_artifacts[model] = artifact;
            } catch (const std::exception& e) {
                entry.errors[model] = std::string("stage ") + model + ": " + e.what();
                manifest.any_model_failed = true;
                if (log) *log << "[seed " << seed << "] " << model << " failed: " << e.what() << "\n";
            }
        }
        manifest.runs.push_back(std::move(entry));
    }

    nlohmann::json summary;
    summary["fingerprint"] = manifest.fingerprint;
    summary["seed_count"] = cfg.seeds.size();
    nlohmann::json jmodels;
    for (const auto& [model, parts] : agg) {
        nlohmann::json jparts;
        for (const auto& [partition, stats] : parts) {
            nlohmann::json jstats;
            for (const auto& [metric, stat] : stats) jstats[metric] = stat.to_json();
            jparts[partition] = jstats;
        }
        jmodels[model] = jparts;
    }
    summary["models"] = jmodels;
    manifest.summary = summary;
    detail::write_json_file(manifest.run_dir / "summary.json", summary);

    nlohmann::json jmanifest;
    jmanifest["fingerprint"] = manifest.fingerprint;
    jmanifest["created"] = detail::iso_timestamp();  // manifest only: everything else stays byte-stable
    jmanifest["config"] = config_to_json(cfg);
    {
        std::ifstream in(cfg.dataset_path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        jmanifest["dataset_sha256"] = sha256_hex(buf.str());
    }
    if (manifest.seed_override) jmanifest["seed_override"] = *manifest.seed_override;
    nlohmann::json jruns = nlohmann::json::array();
    for (const auto& r : manifest.runs) {
        nlohmann::json jr;
        jr["seed"] = r.seed;
        jr["train_size"] = r.train_size;
        jr["test_size"] = r.test_size;
        jr["models"] = r.model_artifacts;
        jr["errors"] = r.errors;
        jruns.push_back(jr);
    }
    jmanifest["runs"] = jruns;
    jmanifest["summary"] = (manifest.run_dir / "summary.json").string();
    detail::write_json_file(manifest.run_dir / "manifest.json", jmanifest);
    return manifest;
}

// Renders the seed-aggregated summary as a text table (mean +/- std).
inline std::string render_summary_text(const nlohmann::json& summary) {
    std::ostringstream os;
    os << "seed-aggregated results (" << summary.at("seed_count").get<std::size_t>() << " seeds)\n";
    os << detail::pad_to("model", 10) << detail::pad_to("partition", 11) << detail::pad_to("metric", 13)
       << detail::pad_to("mean", 10) << "std\n";
    const auto& models = summary.at("models");
    for (auto it = models.begin(); it != models.end(); ++it) {
        for (auto pit = it.value().begin(); pit != it.value().end(); ++pit) {
            for (auto mit = pit.value().begin(); mit != pit.value().end(); ++mit) {
                char mean_buf[32], std_buf[32];
                std::snprintf(mean_buf, sizeof(mean_buf), "%.4f", mit.value().at("mean").get<double>());
                std::snprintf(std_buf, sizeof(std_buf), "%.4f", mit.value().at("std").get<double>());
                os << detail::pad_to(it.key(), 10) << detail::pad_to(pit.key(), 11)
                   << detail::pad_to(mit.key(), 13) << detail::pad_to(mean_buf, 10) << std_buf << '\n';
            }
        }
    }
    return os.str();
}

}  // namespace masskit
