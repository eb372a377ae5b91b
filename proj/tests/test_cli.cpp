#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <balans_cli.hpp>

namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("balans_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int call(std::vector<std::string> args) {
        args.insert(args.begin(), "balans");
        out_.str("");
        err_.str("");
        return balans::cli::run(args, out_, err_);
    }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    }

    void make_data(const std::string& name) {
        ASSERT_EQ(call({"synth", "-o", path(name), "--labels", "3", "--batches", "2", "--dims", "4", "--n-per", "10", "--seed", "5"}), 0) << err_.str();
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

}

TEST_F(CliTest, SynthWritesProfilesWithBatchAndLabel) {
    make_data("data.csv");
    std::istringstream in(slurp(path("data.csv")));
    const auto t = balans::read_profile_csv(in, {"batch", "label"});
    EXPECT_EQ(t.rows(), 60u);
    EXPECT_EQ(t.header, (std::vector<std::string>{"f0", "f1", "f2", "f3", "batch", "label"}));
    EXPECT_EQ(t.column("batch")[0], "b0");
    EXPECT_EQ(t.column("label")[0], "l0");
}

TEST_F(CliTest, CorrectWritesOutputAndMetadata) {
    make_data("data.csv");
    ASSERT_EQ(call({"correct", "-i", path("data.csv"), "-o", path("out.csv"), "--text-col", "label", "--dump-rows", path("rows.bin")}), 0) << err_.str();
    std::istringstream in(slurp(path("out.csv")));
    const auto t = balans::read_profile_csv(in, {"batch", "label"});
    EXPECT_EQ(t.rows(), 60u);
    EXPECT_EQ(t.header, (std::vector<std::string>{"f0", "f1", "f2", "f3", "batch", "label"}));

    const auto meta = nlohmann::json::parse(slurp(path("out.csv.meta.json")));
    EXPECT_EQ(meta["command"], "correct");
    EXPECT_EQ(meta["n"], 60);
    EXPECT_EQ(meta["d"], 4);
    EXPECT_EQ(meta["batches"], (std::vector<std::string>{"b0", "b1"}));
    EXPECT_GE(meta["m"].get<int>(), 1);
    EXPECT_LE(meta["m"].get<int>(), 60);
    EXPECT_EQ(meta["params"]["k"], 5);

    const auto rows = balans::read_bala1(path("rows.bin"));
    EXPECT_EQ(rows.size(), meta["m"].get<std::size_t>());
    EXPECT_EQ(rows.nnz(), meta["nnz"].get<std::size_t>());
}

TEST_F(CliTest, CorrectIsReproducible) {
    make_data("data.csv");
    for (const auto* name : {"a", "b"}) {
        ASSERT_EQ(call({"correct", "-i", path("data.csv"), "-o", path(std::string(name) + ".csv"), "--text-col", "label", "--seed", "9", "--dump-rows",
                        path(std::string(name) + ".bin")}),
                  0);
    }
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(slurp(path("a.bin")), slurp(path("b.bin")));
}

TEST_F(CliTest, MissingBatchColumnIsAnInputError) {
    make_data("data.csv");
    EXPECT_EQ(call({"correct", "-i", path("data.csv"), "-o", path("out.csv"), "--batch-col", "plate"}), 2);
    EXPECT_NE(err_.str().find("--batch-col"), std::string::npos) << err_.str();
    EXPECT_NE(err_.str().find("plate"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("out.csv")));
}

TEST_F(CliTest, BadFlagsAndFiles) {
    EXPECT_EQ(call({"correct", "-i", path("missing.csv"), "-o", path("out.csv")}), 2);
    EXPECT_EQ(call({"correct", "-i", path("x.csv")}), 2);
    EXPECT_EQ(call({"nonsense"}), 2);
    make_data("data.csv");
    EXPECT_EQ(call({"correct", "-i", path("data.csv"), "-o", path("out.csv"), "--text-col", "label", "--k", "0"}), 2);
    EXPECT_EQ(call({"--help"}), 0);
}

TEST_F(CliTest, ConfigFileWithCommandLineOverride) {
    make_data("data.csv");
    {
        std::ofstream cfg(path("cfg.json"));
        cfg << R"({"k": 3, "seed": 4, "text_col": "label", "int": true})";
    }
    ASSERT_EQ(call({"correct", "--config", path("cfg.json"), "-i", path("data.csv"), "-o", path("out.csv"), "--seed", "11"}), 0) << err_.str();
    const auto meta = nlohmann::json::parse(slurp(path("out.csv.meta.json")));
    EXPECT_EQ(meta["params"]["k"], 3);
    EXPECT_EQ(meta["seed"], 11);
    EXPECT_EQ(meta["preprocess"]["int"], true);

    {
        std::ofstream bad(path("bad.json"));
        bad << "[1,2]";
    }
    EXPECT_EQ(call({"correct", "--config", path("bad.json"), "-i", path("data.csv"), "-o", path("out.csv")}), 2);
}

TEST_F(CliTest, EvalReportsScoresAndAppendsCsv) {
    make_data("data.csv");
    for (int i = 0; i < 2; ++i) {
        ASSERT_EQ(call({"eval", "-i", path("data.csv"), "--neighborhood", "10", "--csv", path("scores.csv")}), 0) << err_.str();
    }
    const auto report = nlohmann::json::parse(out_.str());
    std::vector<double> scores;
    for (const auto* key : {"graph_connectivity", "kbet", "lisi_batch", "silhouette_batch"}) {
        ASSERT_TRUE(report["batch"].contains(key)) << key;
        scores.push_back(report["batch"][key].get<double>());
    }
    for (const auto* key : {"lisi_label", "ari", "nmi", "silhouette_label"}) {
        ASSERT_TRUE(report["label"].contains(key)) << key;
        scores.push_back(report["label"][key].get<double>());
    }
    scores.push_back(report["avg_all"].get<double>());
    for (double v : scores) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(report["config"]["neighborhood"], 10);
    std::istringstream lines(slurp(path("scores.csv")));
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        ++count;
    }
    EXPECT_EQ(count, 3);
}

TEST_F(CliTest, BlockModelOutputs) {
    ASSERT_EQ(call({"synth", "--block-model", "-o", path("m.csv"), "--sizes", "2,3", "--affinities", "1,2"}), 0) << err_.str();
    std::istringstream in(slurp(path("m.csv")));
    const auto t = balans::read_profile_csv(in, {"cluster"});
    EXPECT_EQ(t.rows(), 5u);
    EXPECT_EQ(t.features(0, 1), 1.0);
    EXPECT_EQ(t.features(4, 2), 2.0);
    EXPECT_EQ(t.features(0, 4), 0.0);

    ASSERT_EQ(call({"synth", "--block-model", "-o", path("m.bin"), "--sizes", "2,3", "--format", "bala1"}), 0) << err_.str();
    const auto rows = balans::read_bala1(path("m.bin"));
    EXPECT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows.nnz(), 13u);
}

TEST_F(CliTest, VerifyTheoryExperiments) {
    ASSERT_EQ(call({"verify-theory", "--experiment", "coverage", "--sizes", "50,5,5", "--t", "1", "--m", "3", "--trials", "10", "--csv", path("cov.csv")}), 0)
        << err_.str();
    auto j = nlohmann::json::parse(out_.str());
    EXPECT_EQ(j["results"]["adaptive"]["success_rate"], 1.0);
    EXPECT_TRUE(j["results"].contains("uniform"));
    EXPECT_EQ(slurp(path("cov.csv")).substr(0, 28), "sampler,trial,success,T0,T1,");

    ASSERT_EQ(call({"verify-theory", "--experiment", "spectral", "--sizes", "10,10", "--t-values", "1,2", "--trials", "2", "--lambda", "0"}), 0) << err_.str();
    j = nlohmann::json::parse(out_.str());
    EXPECT_EQ(j["median_errors"].size(), 2u);
    EXPECT_LT(j["median_errors"][0].get<double>(), 1e-8);

    ASSERT_EQ(call({"verify-theory", "--experiment", "runtime", "--n-values", "40,80", "--labels", "2", "--batches", "2", "--dims", "3"}), 0) << err_.str();
    j = nlohmann::json::parse(out_.str());
    EXPECT_EQ(j["rows"].size(), 2u);
    EXPECT_EQ(j["time_ratios"].size(), 1u);

    EXPECT_EQ(call({"verify-theory", "--experiment", "other"}), 2);
    EXPECT_EQ(call({"verify-theory", "--experiment", "coverage", "--sampler", "bogus", "--trials", "1"}), 2);
}
