#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "focklab/experiments.hpp"

using namespace focklab;

namespace {

const ExperimentResult& cached(const std::string& name) {
    static std::map<std::string, ExperimentResult> memo;
    auto it = memo.find(name);
    if (it == memo.end()) it = memo.emplace(name, run_experiment(name)).first;
    return it->second;
}

double value_of(const ExperimentResult& r, const std::string& diag, const std::string& family, int n = 0) {
    int seen = 0;
    for (const auto& row : r.rows)
        if (row.diagnostic == diag && row.family == family && seen++ == n) return std::stod(row.result);
    ADD_FAILURE() << "no row " << diag << " for " << family;
    return 0.0;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Catalog, Names) {
    const auto& names = experiment_names();
    EXPECT_EQ(names.size(), 15u);
    for (const char* n : {"eq31-crosscheck", "dilation-threshold", "sphi-l2", "toeplitz-measure", "lacunary-open-probe"})
        EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
    EXPECT_THROW(run_experiment("no-such-experiment"), UnknownExperiment);
}

TEST(Catalog, FastExperimentsPass) {
    for (const char* n : {"lacunary-berezin", "sphi-identity", "sphi-window", "translation-strong", "composition-1d"}) {
        const ExperimentResult& r = cached(n);
        EXPECT_TRUE(r.pass) << n;
        EXPECT_EQ(r.failures(), 0u) << n;
        EXPECT_FALSE(r.anchor.empty());
        EXPECT_FALSE(r.rule.empty());
        for (const auto& rep : r.reports) EXPECT_TRUE(rep.invariants_ok) << n << " " << param_hash(rep.op);
    }
}

TEST(Catalog, DilationFlipPoints) {
    const ExperimentResult& r = cached("dilation-threshold");
    EXPECT_TRUE(r.pass);
    // p* = 4/(1+r) on a 0.05 grid
    const std::vector<std::pair<double, double>> want{{4.0, 4.05}, {3.2, 3.25}, {2.65, 2.7}, {2.25, 2.3}};
    for (std::size_t k = 0; k < want.size(); ++k) {
        EXPECT_NEAR(value_of(r, "last_bounded_p", "dilation", static_cast<int>(k)), want[k].first, 1e-9);
        EXPECT_NEAR(value_of(r, "first_divergent_p", "dilation", static_cast<int>(k)), want[k].second, 1e-9);
    }
}

TEST(Catalog, ExploratoryProbe) {
    const ExperimentResult& r = cached("lacunary-open-probe");
    EXPECT_TRUE(r.exploratory);
    EXPECT_EQ(r.failures(), 0u);
    EXPECT_EQ(to_json(r)["verdict"], "exploratory");
}

TEST(Catalog, FailuresCountsOnlyCheckedRows) {
    ExperimentResult r;
    OperatorSpec op = OperatorSpec::identity();
    r.rows.push_back(make_row(op, "raw", "", 1.0, "fail"));
    r.rows.push_back(make_row(op, "check.a", "", 1.0, "pass"));
    EXPECT_EQ(r.failures(), 0u);
    r.rows.push_back(make_row(op, "check.b", "", 1.0, "fail"));
    EXPECT_EQ(r.failures(), 1u);
}

TEST(Output, DeterministicFiles) {
    const std::string n = "sphi-window";
    ExperimentResult again = run_experiment(n);
    EXPECT_EQ(to_json(again).dump(), to_json(cached(n)).dump());

    const auto dir = std::filesystem::temp_directory_path() / "focklab_test_experiments";
    std::filesystem::remove_all(dir);
    write_experiment(cached(n), dir);
    const std::string csv = slurp(dir / (n + ".csv"));
    const std::string json = slurp(dir / (n + ".json"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    Json j = Json::parse(json);
    EXPECT_EQ(j["name"], n);
    EXPECT_EQ(j["verdict"], "pass");
    EXPECT_EQ(j["inputs"]["seed"], ExperimentConfig{}.seed);
    EXPECT_FALSE(j.contains("runtime_seconds"));
    write_experiment(again, dir);
    EXPECT_EQ(slurp(dir / (n + ".json")), json);
    EXPECT_EQ(slurp(dir / (n + ".csv")), csv);
    std::filesystem::remove_all(dir);
}
