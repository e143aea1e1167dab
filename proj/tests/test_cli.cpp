#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "focklab/json_io.hpp"

using namespace focklab;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

Outcome lab(const std::string& args) {
    const std::string cmd = std::string(LAB_BINARY) + " " + args + " 2>/dev/null";
    Outcome r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    std::size_t k;
    while ((k = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), k);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& leaf) {
    auto d = std::filesystem::temp_directory_path() / ("focklab_cli_" + leaf);
    std::filesystem::remove_all(d);
    return d;
}

}  // namespace

TEST(Cli, List) {
    Outcome r = lab("list");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 15);
    EXPECT_NE(r.out.find("dilation-threshold\n"), std::string::npos);
}

TEST(Cli, PairingTranslation) {
    // V_a k_0 = k_a up to a unimodular factor, so |<V_a k_0, k_a>| = 1
    Outcome r = lab(R"(pairing --op '{"family":"translation","a":[[1,0]]}' --z 0,0 --w 1,0)");
    ASSERT_EQ(r.code, 0) << r.out;
    Json j = Json::parse(r.out);
    EXPECT_NEAR(to_double(j["abs"]), 1.0, 1e-12);
    EXPECT_EQ(j["method"], "closed_form");
}

TEST(Cli, BerezinIdentity) {
    Outcome r = lab(R"(berezin --op '{"family":"identity"}' --z 2,-1)");
    ASSERT_EQ(r.code, 0);
    EXPECT_NEAR(to_double(Json::parse(r.out)["abs"]), 1.0, 1e-12);
}

TEST(Cli, ReportIdentityFromFile) {
    auto dir = scratch("report");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "op.json") << R"({"schema":"fock-lab/1","family":"identity","n":1})";
    Outcome r = lab("--threads 2 report --op " + (dir / "op.json").string() + " --out " + (dir / "r.json").string() + " --csv " +
                (dir / "r.csv").string());
    ASSERT_EQ(r.code, 0);
    Json j = Json::parse(slurp(dir / "r.json"));
    for (const char* k : {"p_localization", "xz", "sl", "wl"}) EXPECT_EQ(j["verdicts"][k], "pass") << k;
    EXPECT_EQ(j["param_hash"], "a4484da73fc658e2");
    const std::string csv = slurp(dir / "r.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);

    Outcome single = lab("--threads 1 report --op " + (dir / "op.json").string());
    ASSERT_EQ(single.code, 0);
    EXPECT_EQ(Json::parse(single.out), j);
    std::filesystem::remove_all(dir);
}

TEST(Cli, ExperimentWritesDeterministicFiles) {
    auto dir = scratch("exp");
    Outcome a = lab("experiment dilation-threshold --out " + dir.string());
    ASSERT_EQ(a.code, 0) << a.out;
    const std::string csv = slurp(dir / "dilation-threshold.csv");
    const std::string json = slurp(dir / "dilation-threshold.json");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
    EXPECT_EQ(Json::parse(json)["verdict"], "pass");
    Outcome b = lab("experiment dilation-threshold --out " + dir.string());
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(slurp(dir / "dilation-threshold.csv"), csv);
    EXPECT_EQ(slurp(dir / "dilation-threshold.json"), json);
    std::filesystem::remove_all(dir);
}

TEST(Cli, FailingExperimentExitsOne) {
    auto dir = scratch("fail");
    Outcome r = lab("experiment strictness-sl-xzsl --out " + dir.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(Json::parse(slurp(dir / "strictness-sl-xzsl.json"))["verdict"], "fail");
    std::filesystem::remove_all(dir);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(lab("").code, 2);
    EXPECT_EQ(lab("frobnicate").code, 2);
    EXPECT_EQ(lab("experiment").code, 2);
    EXPECT_EQ(lab("experiment no-such-experiment --out /tmp/focklab_cli_none").code, 2);
    EXPECT_EQ(lab("report --op '{\"family\":\"nope\"}'").code, 2);
    EXPECT_EQ(lab("report --op /nonexistent/op.json").code, 2);
    EXPECT_EQ(lab(R"(pairing --op '{"family":"identity"}' --z 0 --w 1,0)").code, 2);
    EXPECT_EQ(lab("--hermite-order -3 list").code, 2);
    EXPECT_EQ(lab("--help").code, 0);
}
