#pragma once

#include <optional>
#include <string>
#include <vector>

#include "site/data.hpp"
#include "site/evolve.hpp"

namespace site {

/// Built-in generator request inside a run config.
struct GeneratorSpec {
    std::string name; // maxwell | reynolds | newtonian
    int points = 150;
    int times = 100;
    double noise_level = 0.0;
    std::uint64_t noise_seed = 1;
    bool compressible = false;
};

struct SubsampleSpec {
    int k = 0;
    std::uint64_t seed = 1;
};

/// Parsed run configuration: exactly one data source, optional terminal
/// restriction, evolution settings, output location and report pruning.
struct RunConfig {
    std::optional<std::string> data_path;
    std::optional<std::string> schema_path;
    std::optional<GeneratorSpec> generator;
    std::vector<std::string> tensor_functions{"add", "sub", "inner", "p"};
    std::vector<std::string> scalar_functions{"add", "sub", "mul", "div"};
    std::vector<std::string> tensor_terminals; // empty = all from schema
    std::vector<std::string> scalar_terminals; // empty = all from schema
    std::optional<SubsampleSpec> subsample;
    EvolutionConfig evolution;
    std::string output_dir = "out";
    double prune_threshold = 1e-3;
    std::optional<std::string> seed_file;
};

/// Loads and validates a JSON run config. Long-form hyperparameter
/// names are accepted as key aliases. Throws ConfigError with the offending
/// key/line context.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text, const std::string& origin);

/// Materializes the configured data source (file pair or generator),
/// applying any subsample request.
Dataset resolve_dataset(const RunConfig& cfg);

/// Semantic validation beyond parsing: terminal references exist, libraries
/// non-empty, plasmid gene count 1, probabilities in [0,1], etc.
void validate_run_config(const RunConfig& cfg, const Dataset& ds);

/// Worker-thread override from the environment (SITE_THREADS), else the
/// configured value.
int resolve_threads(int configured);

} // namespace site
