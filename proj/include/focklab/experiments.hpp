#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json_io.hpp"

namespace focklab {

struct ExperimentConfig {
    LabConfig lab;
    std::uint64_t seed = 20240611ULL;
};

struct ExperimentResult {
    std::string name;
    std::string anchor;  ///< what the experiment reproduces
    std::string rule;    ///< acceptance rule applied to the checked rows
    bool exploratory = false;
    Json inputs = Json::object();
    std::vector<CsvRow> rows;
    bool pass = false;
    double runtime_seconds = 0.0;
    std::vector<LocalizationReport> reports;

    /// Checked rows carry a "check." diagnostic prefix and a pass/fail classification.
    /// Number of checked rows that failed.
    std::size_t failures() const;
};

const std::vector<std::string>& experiment_names();

/// Throws UnknownExperiment for names outside the catalog.
ExperimentResult run_experiment(const std::string& name, const ExperimentConfig& cfg = {});

/// Deterministic JSON: runtime is left out so that reruns give identical bytes.
Json to_json(const ExperimentResult& r);

/// Writes <dir>/<name>.csv and <dir>/<name>.json.
void write_experiment(const ExperimentResult& r, const std::filesystem::path& dir);

}  // namespace focklab
