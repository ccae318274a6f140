#include "site/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "site/benchmarks.hpp"
#include "site/errors.hpp"
#include "site/symbols.hpp"

namespace site {

namespace fs = std::filesystem;
using nlohmann::json;

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open for digest: " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    char out[32];
    std::snprintf(out, sizeof out, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return out;
}

RunOutcome run_discovery(const RunConfig& cfg, const Dataset& ds) {
    validate_run_config(cfg, ds);
    LibraryPair libs = build_libraries(ds, cfg.tensor_functions, cfg.scalar_functions,
                                       cfg.evolution.rnc_mode);

    HostChromosome seed_template;
    const HostChromosome* seed_ptr = nullptr;
    if (cfg.seed_file) {
        std::ifstream in(*cfg.seed_file);
        if (!in) throw ConfigError("cannot open seed file: " + *cfg.seed_file);
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        seed_template = parse_chromosome(text, libs);
        std::string err = validate_chromosome(seed_template, libs, cfg.evolution.host_head_len,
                                              cfg.evolution.plasmid_head_len);
        if (!err.empty()) throw ConfigError("seed file: " + err);
        seed_ptr = &seed_template;
    }

    EvolutionConfig evo = cfg.evolution;
    evo.threads = resolve_threads(evo.threads);

    RunOutcome out;
    out.target_name = ds.target.name;
    std::ostringstream gen_log, warn_log;
    out.result = evolve(ds, libs, evo, seed_ptr, &gen_log, &warn_log);
    out.generation_log = gen_log.str();
    out.warnings = warn_log.str();
    out.report = build_report(out.result.best, out.result.best_fit, libs, ds,
                              evo.eval_settings(), cfg.prune_threshold);
    return out;
}

void write_run_outputs(const std::string& out_dir, const RunOutcome& outcome,
                       double elapsed_seconds) {
    fs::create_directories(out_dir);
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream f(fs::path(out_dir) / name);
        if (!f) throw DataError("cannot write " + (fs::path(out_dir) / name).string());
        f << content;
    };
    write("gen_log.tsv", outcome.generation_log);
    write("report.txt", render_report_text(outcome.report, outcome.target_name));
    write("report.json", render_report_json(outcome.report, outcome.target_name));

    json meta;
    const auto now = std::chrono::system_clock::now();
    meta["finished_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
    meta["elapsed_seconds"] = elapsed_seconds;
    meta["generations"] = outcome.result.generations_run;
    meta["threshold_reached"] = outcome.result.threshold_reached;
    if (!outcome.warnings.empty()) meta["warnings"] = outcome.warnings;
    write("metadata.json", meta.dump(2) + "\n");
}

BatchAggregate aggregate_reports(const std::vector<Report>& reports) {
    BatchAggregate a;
    a.n_runs = static_cast<int>(reports.size());

    std::map<std::string, int> counts;
    for (const auto& r : reports) ++counts[r.structure_signature];
    for (const auto& [sig, n] : counts) a.structure_counts.push_back({sig, n});
    std::sort(a.structure_counts.begin(), a.structure_counts.end(),
              [](const auto& x, const auto& y) {
                  if (x.second != y.second) return x.second > y.second;
                  return x.first < y.first;
              });
    if (!a.structure_counts.empty()) {
        a.modal_structure = a.structure_counts.front().first;
        a.modal_count = a.structure_counts.front().second;
    }

    std::map<std::string, std::vector<double>> per_term;
    for (const auto& r : reports) {
        a.losses.push_back(r.pruned_loss);
        if (r.structure_signature != a.modal_structure) continue;
        for (const auto& t : r.pruned_terms) per_term[t.structure_key()].push_back(t.coefficient);
    }
    for (const auto& [key, vals] : per_term) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        const double sd = vals.size() > 1 ? std::sqrt(var / (vals.size() - 1)) : 0.0;
        a.term_stats.push_back({key, mean, sd, static_cast<int>(vals.size())});
    }
    return a;
}

std::string render_aggregate_text(const BatchAggregate& a) {
    std::ostringstream os;
    os << "runs: " << a.n_runs << "\n";
    os << "modal structure (" << a.modal_count << "/" << a.n_runs
       << "): " << a.modal_structure << "\n";
    os << "structure frequency:\n";
    for (const auto& [sig, n] : a.structure_counts)
        os << "  " << n << "x  " << (sig.empty() ? "(empty)" : sig) << "\n";
    os << "coefficients over modal-structure runs (mean +/- std):\n";
    char buf[160];
    for (const auto& [key, mean, sd, n] : a.term_stats) {
        std::snprintf(buf, sizeof buf, "  %-40s %.6g +/- %.3g  (n=%d)\n", key.c_str(), mean,
                      sd, n);
        os << buf;
    }
    return os.str();
}

std::string render_aggregate_json(const BatchAggregate& a) {
    json j;
    j["runs"] = a.n_runs;
    j["modal_structure"] = a.modal_structure;
    j["modal_count"] = a.modal_count;
    j["structures"] = json::array();
    for (const auto& [sig, n] : a.structure_counts)
        j["structures"].push_back({{"structure", sig}, {"count", n}});
    j["terms"] = json::array();
    for (const auto& [key, mean, sd, n] : a.term_stats)
        j["terms"].push_back({{"term", key}, {"mean", mean}, {"std", sd}, {"runs", n}});
    j["losses"] = a.losses;
    return j.dump(2) + "\n";
}

namespace {

int cmd_generate(const std::string& name, int points, int times, double noise,
                 std::uint64_t seed, bool compressible, const std::string& out_dir) {
    Dataset ds;
    NoiseSpec ns{noise, seed};
    if (name == "maxwell")
        ds = gen_maxwell(points, ns);
    else if (name == "reynolds")
        ds = gen_reynolds_decay(times);
    else if (name == "newtonian")
        ds = gen_newtonian_field(points, compressible, ns);
    else
        throw ConfigError("unknown generator '" + name + "'");

    fs::create_directories(out_dir);
    const std::string data_path = (fs::path(out_dir) / "data.csv").string();
    const std::string schema_path = (fs::path(out_dir) / "schema.json").string();
    save_dataset(ds, data_path, schema_path);
    std::cout << file_digest(data_path) << "  " << data_path << "\n"
              << file_digest(schema_path) << "  " << schema_path << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
    RunConfig cfg = load_run_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    Dataset ds = resolve_dataset(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome outcome = run_discovery(cfg, ds);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!outcome.warnings.empty()) std::cerr << outcome.warnings;
    write_run_outputs(cfg.output_dir, outcome, elapsed);
    std::cout << render_report_text(outcome.report, outcome.target_name);
    std::cout << "generations: " << outcome.result.generations_run
              << ", threshold reached: " << (outcome.result.threshold_reached ? "yes" : "no")
              << "\n";
    return outcome.result.threshold_reached ? 0 : 1;
}

int cmd_batch(const std::string& config_path, int n_runs, std::uint64_t base_seed,
              bool resample, const std::string& out_override) {
    if (n_runs < 1) throw ArgumentError("batch: runs must be >= 1");
    RunConfig cfg = load_run_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    fs::create_directories(cfg.output_dir);

    std::vector<Report> reports;
    for (int r = 0; r < n_runs; ++r) {
        RunConfig run_cfg = cfg;
        run_cfg.evolution.rng_seed = base_seed + static_cast<std::uint64_t>(r);
        if (resample) {
            if (!run_cfg.subsample)
                throw ConfigError("batch --resample needs a 'subsample' block in the config");
            run_cfg.subsample->seed = base_seed + static_cast<std::uint64_t>(r);
        }
        char sub[32];
        std::snprintf(sub, sizeof sub, "run_%04d", r);
        run_cfg.output_dir = (fs::path(cfg.output_dir) / sub).string();

        Dataset ds = resolve_dataset(run_cfg);
        const auto t0 = std::chrono::steady_clock::now();
        RunOutcome outcome = run_discovery(run_cfg, ds);
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_run_outputs(run_cfg.output_dir, outcome, elapsed);
        reports.push_back(outcome.report);
        std::cout << sub << ": loss " << outcome.report.pruned_loss << ", structure ["
                  << outcome.report.structure_signature << "]\n";
    }

    BatchAggregate agg = aggregate_reports(reports);
    std::ofstream(fs::path(cfg.output_dir) / "aggregate.txt") << render_aggregate_text(agg);
    std::ofstream(fs::path(cfg.output_dir) / "aggregate.json") << render_aggregate_json(agg);
    std::cout << render_aggregate_text(agg);
    return 0;
}

int cmd_validate(const std::string& config_path) {
    RunConfig cfg = load_run_config(config_path);
    Dataset ds = resolve_dataset(cfg);
    validate_run_config(cfg, ds);
    std::cout << "config OK: " << config_path << " (" << ds.n_data << " rows, n_dim "
              << ds.n_dim << ", " << ds.tensors.size() << " tensor / " << ds.scalars.size()
              << " scalar terminals)\n";
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"SITE: symbolic identification of tensor equations"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "write a benchmark dataset + schema");
    std::string gen_name, gen_out = "out";
    int gen_points = 150, gen_times = 100;
    double gen_noise = 0.0;
    std::uint64_t gen_seed = 1;
    bool gen_compressible = false;
    gen->add_option("generator", gen_name, "maxwell | reynolds | newtonian")->required();
    gen->add_option("--points", gen_points, "number of sample points");
    gen->add_option("--times", gen_times, "number of time instants (reynolds)");
    gen->add_option("--noise", gen_noise, "relative Gaussian noise level");
    gen->add_option("--seed", gen_seed, "sampling / noise seed");
    gen->add_flag("--compressible", gen_compressible, "newtonian: nonzero divergence");
    gen->add_option("--out", gen_out, "output directory");

    // run
    auto* run = app.add_subcommand("run", "run discovery from a config file");
    std::string run_config, run_out;
    run->add_option("--config", run_config, "JSON run config")->required();
    run->add_option("--out", run_out, "override output directory");

    // batch
    auto* batch = app.add_subcommand("batch", "repeat a run over consecutive seeds");
    std::string batch_config, batch_out;
    int batch_runs = 1;
    std::uint64_t batch_seed = 1;
    bool batch_resample = false;
    batch->add_option("--config", batch_config, "JSON run config")->required();
    batch->add_option("--runs", batch_runs, "number of runs")->required();
    batch->add_option("--base-seed", batch_seed, "first RNG seed");
    batch->add_flag("--resample", batch_resample, "re-draw the subsample each run");
    batch->add_option("--out", batch_out, "override output directory");

    // validate-config
    auto* val = app.add_subcommand("validate-config", "parse and validate a config");
    std::string val_config;
    val->add_option("--config", val_config, "JSON run config")->required();

    try {
        app.parse(argc, argv);
        if (gen->parsed())
            return cmd_generate(gen_name, gen_points, gen_times, gen_noise, gen_seed,
                                gen_compressible, gen_out);
        if (run->parsed()) return cmd_run(run_config, run_out);
        if (batch->parsed())
            return cmd_batch(batch_config, batch_runs, batch_seed, batch_resample, batch_out);
        if (val->parsed()) return cmd_validate(val_config);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace site
