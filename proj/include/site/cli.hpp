#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "site/config.hpp"
#include "site/report.hpp"

namespace site {

/// FNV-1a 64-bit digest of a file's bytes, as "fnv1a64:<hex>".
std::string file_digest(const std::string& path);

struct RunOutcome {
    EvolveResult result;
    Report report;
    std::string target_name;
    std::string generation_log; // full log text, also written to disk
    std::string warnings;
};

/// Runs discovery for a resolved config + dataset. Writes nothing.
RunOutcome run_discovery(const RunConfig& cfg, const Dataset& ds);

/// Writes gen_log.tsv, report.txt, report.json and metadata.json (timestamps
/// live only in the metadata file) under `out_dir`.
void write_run_outputs(const std::string& out_dir, const RunOutcome& outcome,
                       double elapsed_seconds);

struct BatchAggregate {
    std::string modal_structure;
    int modal_count = 0;
    int n_runs = 0;
    std::vector<std::pair<std::string, int>> structure_counts;
    // term key -> (mean, stddev, n) over modal-structure runs
    std::vector<std::tuple<std::string, double, double, int>> term_stats;
    std::vector<double> losses; // pruned loss per run
};

BatchAggregate aggregate_reports(const std::vector<Report>& reports);
std::string render_aggregate_text(const BatchAggregate& a);
std::string render_aggregate_json(const BatchAggregate& a);

/// Entry point used by the `site` binary.
int cli_main(int argc, const char* const* argv);

} // namespace site
