#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "repalign/digest.hpp"
#include "repalign/model_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kCli = REPALIGN_CLI_PATH;

int run_cli(const std::string& args) {
    const std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Shared tiny fixture: one benchmark and one trained reference, reused by
// every CLI test in this binary.
class CliFixture : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = (fs::temp_directory_path() / "repalign_cli_tests").string();
        fs::remove_all(root_);
        fs::create_directories(root_);
        ASSERT_EQ(run_cli("simulate --out " + bench() +
                          " --subjects 2 --common 80 --unique 10 --test 12"
                          " --latent-dim 4 --subject-dim 8 --categories 2"
                          " --noise 0.01 --seed 5"),
                  0);
        ASSERT_EQ(run_cli("train-reference --data " + bench() + " --out " + ref() +
                          " --subject 1 --common-dim 6 --mapper-hidden 12"
                          " --epochs 300 --seed 2"),
                  0);
    }

    static std::string bench() { return root_ + "/bench"; }
    static std::string ref() { return root_ + "/ref"; }
    static std::string path(const std::string& rel) { return root_ + "/" + rel; }

    static std::string root_;
};

std::string CliFixture::root_;

json read_json(const std::string& path) {
    std::ifstream f(path);
    json j;
    f >> j;
    return j;
}

// Report comparison with wall-clock fields removed.
json strip_wall_clock(json j) {
    j.erase("duration_seconds");
    return j;
}

}  // namespace

TEST_F(CliFixture, SimulateProducesExpectedLayout) {
    for (const char* rel :
         {"/config.json", "/latents.ramx", "/targets.ramx", "/categories.csv",
          "/subj_1/embeddings.ramx", "/subj_1/split.csv", "/subj_2/embeddings.ramx"})
        EXPECT_TRUE(fs::exists(bench() + rel)) << rel;
}

TEST_F(CliFixture, SimulateMissingOutIsUsageError) {
    EXPECT_EQ(run_cli("simulate --subjects 2"), 2);
    EXPECT_EQ(run_cli("nonsense-subcommand"), 2);
}

TEST_F(CliFixture, SimulateSameSeedGivesIdenticalDigests) {
    ASSERT_EQ(run_cli("simulate --out " + path("b1") +
                      " --subjects 2 --common 30 --unique 5 --test 5 --latent-dim 4"
                      " --subject-dim 4 --transform orthogonal --categories 2 --seed 7"),
              0);
    ASSERT_EQ(run_cli("simulate --out " + path("b2") +
                      " --subjects 2 --common 30 --unique 5 --test 5 --latent-dim 4"
                      " --subject-dim 4 --transform orthogonal --categories 2 --seed 7"),
              0);
    EXPECT_EQ(repalign::file_digest_hex(path("b1") + "/latents.ramx"),
              repalign::file_digest_hex(path("b2") + "/latents.ramx"));
    EXPECT_EQ(repalign::file_digest_hex(path("b1") + "/subj_2/embeddings.ramx"),
              repalign::file_digest_hex(path("b2") + "/subj_2/embeddings.ramx"));
}

TEST_F(CliFixture, TrainReferenceZeroEpochs) {
    ASSERT_EQ(run_cli("train-reference --data " + bench() + " --out " + path("ref0") +
                      " --epochs 0"),
              0);
    std::ifstream trace(path("ref0") + "/trace.csv");
    std::string line;
    std::getline(trace, line);
    EXPECT_EQ(line, "epoch,total_loss,output_mse,adapter_mse");
    EXPECT_FALSE(std::getline(trace, line));  // no data rows
    EXPECT_TRUE(fs::exists(path("ref0") + "/adapter.json"));
}

TEST_F(CliFixture, MissingDataDirIsRuntimeError) {
    EXPECT_EQ(run_cli("train-reference --data " + path("no_such_dir") + " --out " +
                      path("refX")),
              1);
}

TEST_F(CliFixture, AlignStep1LeavesMapperDigestUnchanged) {
    ASSERT_EQ(run_cli("align --data " + bench() + " --ref " + ref() + " --out " +
                      path("al_step1") + " --subject 2 --mode step1 --seed 3"),
              0);
    EXPECT_EQ(repalign::file_digest_hex(path("al_step1") + "/mapper.json"),
              repalign::file_digest_hex(ref() + "/mapper.json"));
}

TEST_F(CliFixture, AlignAamaxBeatsBaselineOnLimitedCommons) {
    ASSERT_EQ(run_cli("align --data " + bench() + " --ref " + ref() + " --out " +
                      path("al_aamax") + " --subject 2 --mode aamax --common-limit 30"
                      " --epochs 120 --seed 4"),
              0);
    ASSERT_EQ(run_cli("align --data " + bench() + " --ref " + ref() + " --out " +
                      path("al_base") + " --subject 2 --mode baseline --common-limit 30"
                      " --epochs 120 --seed 4"),
              0);
    const double aamax =
        read_json(path("al_aamax") + "/report.json")["metrics"]["test_output_mse"];
    const double base =
        read_json(path("al_base") + "/report.json")["metrics"]["test_output_mse"];
    EXPECT_LT(aamax, base);
}

TEST_F(CliFixture, AlignRerunIsByteIdenticalUpToWallClock) {
    const std::string flags = "align --data " + bench() + " --ref " + ref() +
                              " --subject 2 --mode aamax --common-limit 20 --epochs 40"
                              " --seed 11 --out ";
    ASSERT_EQ(run_cli(flags + path("det1")), 0);
    ASSERT_EQ(run_cli(flags + path("det2")), 0);
    for (const char* f : {"/adapter.json", "/mapper.json", "/trace.csv"})
        EXPECT_EQ(repalign::file_digest_hex(path("det1") + f),
                  repalign::file_digest_hex(path("det2") + f))
            << f;
    json r1 = read_json(path("det1") + "/report.json");
    json r2 = read_json(path("det2") + "/report.json");
    r1["command"] = r2["command"] = "";  // out dirs differ by name
    r1["config"].erase("out");
    EXPECT_EQ(strip_wall_clock(r1).dump(), strip_wall_clock(r2).dump());
}

TEST_F(CliFixture, SelectIsDeterministicAndSelfDescribing) {
    const std::string flags = "select --data " + bench() + " --ref " + ref() +
                              " --dims 4 --w 8 --budget 20 --out ";
    ASSERT_EQ(run_cli(flags + path("sel1.json")), 0);
    ASSERT_EQ(run_cli(flags + path("sel2.json")), 0);
    EXPECT_EQ(repalign::file_digest_hex(path("sel1.json")),
              repalign::file_digest_hex(path("sel2.json")));
    const json j = read_json(path("sel1.json"));
    EXPECT_EQ(j["chosen"].size(), 20u);
    EXPECT_EQ(j["gap_trace"].size(), 20u);
    EXPECT_EQ(j["termination"], "budget_reached");
    EXPECT_EQ(j["item_ids"].size(), 20u);
}

TEST_F(CliFixture, SelectUnbudgetedTerminatesOnCoverage) {
    ASSERT_EQ(run_cli("select --data " + bench() + " --ref " + ref() +
                      " --dims 4 --w 6 --out " + path("sel_full.json")),
              0);
    const std::string term = read_json(path("sel_full.json"))["termination"];
    EXPECT_TRUE(term == "full_coverage" || term == "no_improvement");
}

TEST_F(CliFixture, SelectRestrictsAlignCommons) {
    ASSERT_EQ(run_cli("align --data " + bench() + " --ref " + ref() + " --out " +
                      path("al_sel") + " --subject 2 --mode aamax --select " +
                      path("sel1.json") + " --epochs 20 --seed 6"),
              0);
    const json rep = read_json(path("al_sel") + "/report.json");
    EXPECT_TRUE(rep["input_digests"].contains("selection"));
    EXPECT_EQ(rep["input_digests"]["selection"],
              repalign::file_digest_hex(path("sel1.json")));
}

TEST_F(CliFixture, MetricsSubjectAgainstItselfIsPerfect) {
    ASSERT_EQ(run_cli("metrics --data " + bench() + " --space adapter --adapter " + ref() +
                      "/adapter.json --adapter " + ref() + "/adapter.json --knn-k 5"
                      " --eig-k 2 --out " + path("self_metrics.json")),
              0);
    const json j = read_json(path("self_metrics.json"));
    EXPECT_NEAR(j["cosine"][0][1].get<double>(), 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(j["mse"][0][1].get<double>(), 0.0);
    EXPECT_DOUBLE_EQ(j["knn"][0][1].get<double>(), 1.0);
}

TEST_F(CliFixture, MetricsDefaultsApplied) {
    ASSERT_EQ(run_cli("metrics --data " + bench() + " --space raw --out " +
                      path("raw_metrics.json")),
              0);
    const json j = read_json(path("raw_metrics.json"));
    EXPECT_EQ(j["knn_k"].get<std::size_t>(), 50u);
    EXPECT_EQ(j["eig_k"].get<std::size_t>(), 5u);
}

TEST_F(CliFixture, CoverageTestSingleTrialPValueSupport) {
    ASSERT_EQ(run_cli("coverage-test --data " + bench() + " --ref " + ref() +
                      " --select " + path("sel1.json") + " --trials 1 --seed 1 --out " +
                      path("cov1.json")),
              0);
    const double p = read_json(path("cov1.json"))["p_value"];
    EXPECT_TRUE(p == 0.5 || p == 1.0) << p;
}

TEST_F(CliFixture, CoverageTestUniverseMismatchFails) {
    // a selection built over different dims does not match the recomputed
    // universe
    json j = read_json(path("sel1.json"));
    j["d"] = 3;
    {
        std::ofstream f(path("sel_bad.json"));
        f << j.dump(2) << '\n';
    }
    EXPECT_EQ(run_cli("coverage-test --data " + bench() + " --ref " + ref() +
                      " --select " + path("sel_bad.json") + " --trials 5 --out " +
                      path("cov_bad.json")),
              1);
}

TEST_F(CliFixture, ExtremesProducesTwoListsAndValidatesDim) {
    ASSERT_EQ(run_cli("extremes --data " + bench() + " --ref " + ref() +
                      " --dims 4 --dim 0 --count 10 --out " + path("ext.json")),
              0);
    const json j = read_json(path("ext.json"));
    EXPECT_EQ(j["top"].size(), 10u);
    EXPECT_EQ(j["bottom"].size(), 10u);
    EXPECT_EQ(run_cli("extremes --data " + bench() + " --ref " + ref() +
                      " --dims 4 --dim 4 --count 10 --out " + path("ext2.json")),
              2);

    // determinism across runs
    ASSERT_EQ(run_cli("extremes --data " + bench() + " --ref " + ref() +
                      " --dims 4 --dim 0 --count 10 --out " + path("ext3.json")),
              0);
    EXPECT_EQ(repalign::file_digest_hex(path("ext.json")),
              repalign::file_digest_hex(path("ext3.json")));
}

TEST_F(CliFixture, ConfigFileSuppliesOverridableDefaults) {
    {
        std::ofstream f(path("cfg.json"));
        f << R"({"dims": 4, "w": 8, "budget": 5})" << '\n';
    }
    ASSERT_EQ(run_cli("select --data " + bench() + " --ref " + ref() + " --config " +
                      path("cfg.json") + " --out " + path("sel_cfg.json")),
              0);
    EXPECT_EQ(read_json(path("sel_cfg.json"))["chosen"].size(), 5u);
    // explicit flag wins over the config value
    ASSERT_EQ(run_cli("select --data " + bench() + " --ref " + ref() + " --config " +
                      path("cfg.json") + " --budget 3 --out " + path("sel_cfg2.json")),
              0);
    EXPECT_EQ(read_json(path("sel_cfg2.json"))["chosen"].size(), 3u);
}
