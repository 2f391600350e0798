#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "masskit/pipeline.hpp"
#include "test_util.hpp"

using namespace masskit;
namespace fs = std::filesystem;

namespace {

// deterministic dataset with exact class counts, in input order
Dataset planted_classes(std::size_t benign, std::size_t malignant, std::uint64_t seed) {
    Dataset ds;
    ds.schema = mammographic_schema();
    Rng rng(seed);
    for (std::size_t i = 0; i < benign + malignant; ++i) {
        int label = i < benign ? 0 : 1;
        ds.records.push_back(testutil::make_record(
            2 + static_cast<int>(rng.below(4)), 20 + static_cast<int>(rng.below(70)),
            1 + static_cast<int>(rng.below(4)), 1 + static_cast<int>(rng.below(5)),
            1 + static_cast<int>(rng.below(4)), label));
    }
    return ds;
}

std::vector<std::string> formatted(const Dataset& ds) {
    std::vector<std::string> out;
    for (const auto& rec : ds.records) out.push_back(format_record(rec, ds.schema));
    std::sort(out.begin(), out.end());
    return out;
}

TEST(Split, PublishedSizesFor961Records) {
    Dataset ds = planted_classes(516, 445, 1);
    auto [train, test] = split(ds, {0.7, true, 3});
    EXPECT_EQ(train.size(), 673u);
    EXPECT_EQ(test.size(), 288u);
    std::array<std::size_t, 2> train_classes{0, 0}, test_classes{0, 0};
    for (const auto& r : train.records) ++train_classes[static_cast<std::size_t>(r.label)];
    for (const auto& r : test.records) ++test_classes[static_cast<std::size_t>(r.label)];
    EXPECT_EQ(train_classes[0], 361u);
    EXPECT_EQ(test_classes[0], 155u);
    EXPECT_EQ(train_classes[1], 312u);
    EXPECT_EQ(test_classes[1], 133u);
}

TEST(Split, TruePartition) {
    Dataset ds = planted_classes(60, 40, 2);
    auto [train, test] = split(ds, {0.7, true, 9});
    Dataset joined;
    joined.schema = ds.schema;
    joined.records = train.records;
    joined.records.insert(joined.records.end(), test.records.begin(), test.records.end());
    EXPECT_EQ(formatted(joined), formatted(ds));
    EXPECT_EQ(train.size() + test.size(), ds.size());
}

TEST(Split, LargestRemainderTieGoesToLowerClass) {
    Dataset ds = planted_classes(10, 10, 3);
    auto [train, test] = split(ds, {0.75, true, 1});
    // quotas 7.5 / 7.5, 15 seats: floors 7+7, the odd seat goes to class 0
    std::array<std::size_t, 2> c{0, 0};
    for (const auto& r : train.records) ++c[static_cast<std::size_t>(r.label)];
    EXPECT_EQ(c[0], 8u);
    EXPECT_EQ(c[1], 7u);
}

TEST(Split, SeedsChangeAssignmentNotSizes) {
    Dataset ds = planted_classes(80, 60, 4);
    auto [a_train, a_test] = split(ds, {0.7, true, 1});
    auto [b_train, b_test] = split(ds, {0.7, true, 2});
    EXPECT_EQ(a_train.size(), b_train.size());
    EXPECT_EQ(a_test.size(), b_test.size());
    EXPECT_NE(formatted(a_train), formatted(b_train));  // astronomically unlikely to tie
    auto [c_train, c_test] = split(ds, {0.7, true, 1});
    EXPECT_EQ(formatted(a_train), formatted(c_train));  // determinism
}

TEST(Split, NonStratifiedSizes) {
    Dataset ds = planted_classes(50, 50, 5);
    auto [train, test] = split(ds, {0.7, false, 1});
    EXPECT_EQ(train.size(), 70u);
    EXPECT_EQ(test.size(), 30u);
}

TEST(Split, Errors) {
    Dataset ds = planted_classes(10, 10, 6);
    EXPECT_THROW(split(ds, {0.01, false, 1}), std::invalid_argument);  // empty train
    EXPECT_THROW(split(ds, {0.999, false, 1}), std::invalid_argument);  // empty test
    EXPECT_THROW(split(ds, {0.0, true, 1}), std::invalid_argument);
    Dataset single = planted_classes(10, 1, 7);
    EXPECT_THROW(split(single, {0.7, true, 1}), std::invalid_argument);  // class with < 2 records
    Dataset empty;
    empty.schema = mammographic_schema();
    EXPECT_THROW(split(empty, {0.7, true, 1}), std::invalid_argument);
}

TEST(CarveValidation, StratifiedDisjointDeterministic) {
    Dataset ds = planted_classes(80, 60, 8);
    FeatureMatrix fm = encode(ds);
    auto [fit, val] = carve_validation(fm, 0.25, 11);
    EXPECT_EQ(fit.size() + val.size(), fm.size());
    std::size_t val_pos = 0;
    for (int l : val.labels) val_pos += l;
    EXPECT_EQ(val_pos, 15u);  // 25% of 60
    EXPECT_EQ(val.labels.size() - val_pos, 20u);  // 25% of 80
    auto [fit2, val2] = carve_validation(fm, 0.25, 11);
    EXPECT_EQ(val.rows, val2.rows);
}

// --- config & fingerprint ---

ExperimentConfig tiny_config(const fs::path& data, const fs::path& outdir) {
    ExperimentConfig cfg;
    cfg.dataset_path = data.string();
    cfg.output_dir = outdir.string();
    cfg.seeds = {1, 2};
    cfg.mlp.train.max_epochs = 30;
    cfg.mlp.train.patience = 30;
    cfg.mlp.train.hidden = {6};
    cfg.mlp.prune.max_rounds = 1;
    cfg.mlp.prune.retrain_epochs = 10;
    cfg.chaid.min_parent_fraction = 0.05;
    cfg.chaid.min_child_fraction = 0.02;
    cfg.svm.params.max_passes = 10;
    return cfg;
}

TEST(Config, DefaultsAndValidation) {
    ExperimentConfig cfg = config_from_json({{"dataset", "x.csv"}});
    EXPECT_EQ(cfg.models.size(), 3u);
    EXPECT_EQ(cfg.seeds.size(), 10u);
    EXPECT_DOUBLE_EQ(cfg.partition.train_fraction, 0.7);
    EXPECT_DOUBLE_EQ(cfg.svm.params.c, 10.0);
    EXPECT_EQ(cfg.svm.kernel.degree, 4);
    EXPECT_DOUBLE_EQ(cfg.svm.kernel.coef_r, 0.1);
    EXPECT_EQ(cfg.mlp.train.hidden, (std::vector<std::size_t>{30, 18}));

    EXPECT_THROW(config_from_json({{"models", {"chaid"}}}), std::invalid_argument);  // no dataset
    try {
        config_from_json({{"dataset", "x"}, {"models", {"chaid", "forest"}}});
        FAIL() << "expected unknown-model error";
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("forest"), std::string::npos);
        EXPECT_NE(msg.find("chaid, mlp, svm"), std::string::npos);
    }
    EXPECT_THROW(config_from_json({{"dataset", "x"}, {"seeds", nlohmann::json::array()}}),
                 std::invalid_argument);
    EXPECT_THROW(config_from_json({{"dataset", "x"}, {"models", nlohmann::json::array()}}),
                 std::invalid_argument);
}

TEST(Fingerprint, StableUnderKeyReorderingAndFormat) {
    ExperimentConfig a = config_from_json(nlohmann::json::parse(
        R"({"dataset":"d.csv","chaid":{"alpha_merge":0.1,"alpha_split":0.1},"seeds":[1,2]})"));
    ExperimentConfig b = config_from_json(nlohmann::json::parse(
        R"({"seeds":[1,2],"chaid":{"alpha_split":0.1,"alpha_merge":0.1},"dataset":"d.csv"})"));
    EXPECT_EQ(fingerprint(a), fingerprint(b));
    std::string fp = fingerprint(a);
    EXPECT_EQ(fp.size(), 64u);
    for (char c : fp) EXPECT_TRUE((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')) << c;
}

TEST(Fingerprint, SensitiveToHyperparameters) {
    ExperimentConfig a = config_from_json({{"dataset", "d.csv"}});
    ExperimentConfig b = a;
    b.svm.kernel.degree = 3;
    EXPECT_NE(fingerprint(a), fingerprint(b));
    // paths do not affect what is computed, so they are not part of the hash
    ExperimentConfig c = a;
    c.output_dir = "elsewhere";
    c.dataset_path = "other.csv";
    EXPECT_EQ(fingerprint(a), fingerprint(c));
}

// --- run_experiment ---

TEST(RunExperiment, ProducesFullArtifactTree) {
    testutil::TempDir tmp("run");
    Dataset ds = testutil::synthetic_masses(400, 50, 0.05);
    fs::path data = tmp.path() / "data.csv";
    write_dataset(ds, data);

    ExperimentConfig cfg = tiny_config(data, tmp.path() / "out");
    RunManifest manifest = run_experiment(cfg);
    EXPECT_FALSE(manifest.any_model_failed);
    ASSERT_EQ(manifest.runs.size(), 2u);
    EXPECT_EQ(manifest.runs[0].train_size, 280u);
    EXPECT_EQ(manifest.runs[0].test_size, 120u);

    fs::path run_dir = manifest.run_dir;
    EXPECT_TRUE(fs::exists(run_dir / "audit.json"));
    EXPECT_TRUE(fs::exists(run_dir / "summary.json"));
    EXPECT_TRUE(fs::exists(run_dir / "manifest.json"));
    for (std::uint64_t seed : {1, 2}) {
        fs::path sd = run_dir / std::to_string(seed);
        for (const std::string& model : {"chaid", "mlp", "svm"}) {
            EXPECT_TRUE(fs::exists(sd / "models" / (model + ".json"))) << model;
            EXPECT_TRUE(fs::exists(sd / "reports" / (model + "_train.json"))) << model;
            EXPECT_TRUE(fs::exists(sd / "reports" / (model + "_test.json"))) << model;
            EXPECT_TRUE(fs::exists(sd / "curves" / (model + "_test_roc.csv"))) << model;
            EXPECT_TRUE(fs::exists(sd / "curves" / (model + "_test_gain.csv"))) << model;
        }
    }
    // 3 models x 2 partitions x 2 seeds
    EXPECT_EQ(manifest.all_reports.size(), 12u);
}

TEST(RunExperiment, ModelSubsetOnly) {
    testutil::TempDir tmp("subset");
    Dataset ds = testutil::synthetic_masses(200, 51);
    fs::path data = tmp.path() / "data.csv";
    write_dataset(ds, data);
    ExperimentConfig cfg = tiny_config(data, tmp.path() / "out");
    cfg.models = {"chaid"};
    cfg.seeds = {5};
    RunManifest manifest = run_experiment(cfg);
    fs::path sd = manifest.run_dir / "5";
    EXPECT_TRUE(fs::exists(sd / "models" / "chaid.json"));
    EXPECT_FALSE(fs::exists(sd / "models" / "mlp.json"));
    EXPECT_FALSE(fs::exists(sd / "models" / "svm.json"));
    EXPECT_EQ(manifest.all_reports.size(), 2u);
}

TEST(RunExperiment, SeedOverrideIsRecorded) {
    testutil::TempDir tmp("override");
    Dataset ds = testutil::synthetic_masses(200, 52);
    fs::path data = tmp.path() / "data.csv";
    write_dataset(ds, data);
    ExperimentConfig cfg = tiny_config(data, tmp.path() / "out");
    cfg.models = {"chaid"};
    RunManifest manifest = run_experiment(cfg, nullptr, 7);
    ASSERT_EQ(manifest.runs.size(), 1u);
    EXPECT_EQ(manifest.runs[0].seed, 7u);
    nlohmann::json mj;
    std::ifstream in(manifest.run_dir / "manifest.json");
    in >> mj;
    EXPECT_EQ(mj.at("seed_override").get<std::uint64_t>(), 7u);
}

TEST(RunExperiment, SummaryRecomputesFromPerSeedValues) {
    testutil::TempDir tmp("agg");
    Dataset ds = testutil::synthetic_masses(300, 53);
    fs::path data = tmp.path() / "data.csv";
    write_dataset(ds, data);
    ExperimentConfig cfg = tiny_config(data, tmp.path() / "out");
    cfg.models = {"chaid", "svm"};
    cfg.seeds = {1, 2, 3};
    RunManifest manifest = run_experiment(cfg);
    const auto& models = manifest.summary.at("models");
    for (const std::string& model : {"chaid", "svm"}) {
        for (const std::string& part : {"train", "test"}) {
            const auto& stats = models.at(model).at(part);
            for (auto it = stats.begin(); it != stats.end(); ++it) {
                auto values = it.value().at("values").get<std::vector<double>>();
                ASSERT_EQ(values.size(), 3u);
                double mean = (values[0] + values[1] + values[2]) / 3.0;
                EXPECT_NEAR(it.value().at("mean").get<double>(), mean, 1e-12);
                double sq = 0.0;
                for (double v : values) sq += (v - mean) * (v - mean);
                EXPECT_NEAR(it.value().at("std").get<double>(), std::sqrt(sq / 2.0), 1e-12);
            }
        }
    }
}

// byte-identical artifacts across two runs with the same config and data
TEST(RunExperiment, DeterministicArtifacts) {
    testutil::TempDir tmp("det");
    Dataset ds = testutil::synthetic_masses(250, 54, 0.05);
    fs::path data = tmp.path() / "data.csv";
    write_dataset(ds, data);

    ExperimentConfig cfg_a = tiny_config(data, tmp.path() / "out_a");
    ExperimentConfig cfg_b = tiny_config(data, tmp.path() / "out_b");
    RunManifest a = run_experiment(cfg_a);
    RunManifest b = run_experiment(cfg_b);
    ASSERT_EQ(a.fingerprint, b.fingerprint);

    std::size_t compared = 0;
    for (auto it = fs::recursive_directory_iterator(a.run_dir); it != fs::recursive_directory_iterator();
         ++it) {
        if (!it->is_regular_file()) continue;
        fs::path rel = fs::relative(it->path(), a.run_dir);
        if (rel == "manifest.json") continue;  // timestamps live here, nowhere else
        fs::path twin = b.run_dir / rel;
        ASSERT_TRUE(fs::exists(twin)) << rel;
        EXPECT_EQ(testutil::slurp(it->path()), testutil::slurp(twin)) << rel;
        ++compared;
    }
    EXPECT_GT(compared, 20u);
}

TEST(RunExperiment, BadDatasetPathAbortsBeforeTraining) {
    testutil::TempDir tmp("bad");
    ExperimentConfig cfg = tiny_config(tmp.path() / "nope.csv", tmp.path() / "out");
    EXPECT_THROW(run_experiment(cfg), std::runtime_error);
}

TEST(RunExperiment, PartialModelFailureIsRecordedAndOthersContinue) {
    testutil::TempDir tmp("partial");
    // single-class data: chaid degenerates to a one-leaf model and still
    // reports; svm cannot train at all
    Dataset ds = testutil::synthetic_masses(80, 55);
    for (auto& rec : ds.records) rec.label = Severity::benign;
    fs::path data = tmp.path() / "data.csv";
    write_dataset(ds, data);
    ExperimentConfig cfg = tiny_config(data, tmp.path() / "out");
    cfg.models = {"chaid", "svm"};
    cfg.seeds = {1};
    RunManifest manifest = run_experiment(cfg);
    EXPECT_TRUE(manifest.any_model_failed);
    ASSERT_EQ(manifest.runs.size(), 1u);
    EXPECT_TRUE(manifest.runs[0].errors.count("svm"));
    EXPECT_NE(manifest.runs[0].errors.at("svm").find("degenerate"), std::string::npos);
    EXPECT_TRUE(manifest.runs[0].model_artifacts.count("chaid"));
    EXPECT_TRUE(fs::exists(manifest.run_dir / "1" / "reports" / "chaid_test.json"));
    EXPECT_FALSE(fs::exists(manifest.run_dir / "1" / "curves" / "chaid_test_roc.csv"));
}

}  // namespace
