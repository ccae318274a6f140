#include "site/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "site/benchmarks.hpp"
#include "site/errors.hpp"

namespace site {

using nlohmann::json;

namespace {

std::string normalize_key(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else if (!out.empty() && out.back() != '_')
            out.push_back('_');
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

// Long-form hyperparameter names map onto the canonical evolution keys.
const std::unordered_map<std::string, std::string>& key_aliases() {
    static const std::unordered_map<std::string, std::string> m = {
        {"head_length_of_the_host_gene", "host_head_length"},
        {"head_length_of_the_plasmid_gene", "plasmid_head_length"},
        {"number_of_genes_in_a_host_cs", "host_genes"},
        {"number_of_genes_in_a_plasmid_cs", "plasmid_genes"},
        {"number_of_individuals_in_the_population", "population"},
        {"the_maximum_number_of_generations", "max_generations"},
        {"the_number_of_elites", "elites"},
        {"tournament_size", "tournament_size"},
        {"the_number_of_seed_individuals", "seed_individuals"},
    };
    return m;
}

std::string canonical_key(const std::string& raw) {
    std::string k = normalize_key(raw);
    auto it = key_aliases().find(k);
    return it != key_aliases().end() ? it->second : k;
}

template <typename T>
void read_into(const json& j, T& out, const std::string& key) {
    try {
        out = j.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

void parse_evolution(const json& j, EvolutionConfig& ev) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = canonical_key(it.key());
        const json& v = it.value();
        if (key == "host_head_length")
            read_into(v, ev.host_head_len, key);
        else if (key == "plasmid_head_length")
            read_into(v, ev.plasmid_head_len, key);
        else if (key == "host_genes")
            read_into(v, ev.host_genes, key);
        else if (key == "plasmid_genes")
            read_into(v, ev.plasmid_genes, key);
        else if (key == "population")
            read_into(v, ev.population, key);
        else if (key == "max_generations")
            read_into(v, ev.max_generations, key);
        else if (key == "elites")
            read_into(v, ev.elites, key);
        else if (key == "tournament_size")
            read_into(v, ev.tournament_size, key);
        else if (key == "seed_individuals")
            read_into(v, ev.seed_individuals, key);
        else if (key == "seed_interval")
            read_into(v, ev.seed_interval, key);
        else if (key == "seed_retry_cap")
            read_into(v, ev.seed_retry_cap, key);
        else if (key == "max_fragment")
            read_into(v, ev.max_fragment, key);
        else if (key == "loss_threshold")
            read_into(v, ev.loss_threshold, key);
        else if (key == "penalty")
            read_into(v, ev.penalty, key);
        else if (key == "rnc_mode")
            read_into(v, ev.rnc_mode, key);
        else if (key == "rng_seed")
            read_into(v, ev.rng_seed, key);
        else if (key == "threads")
            read_into(v, ev.threads, key);
        else if (key == "probabilities") {
            for (auto pit = v.begin(); pit != v.end(); ++pit) {
                const std::string pk = normalize_key(pit.key());
                double pv = 0.0;
                read_into(pit.value(), pv, pk);
                auto& p = ev.probs;
                if (pk == "host_mutation")
                    p.host_mutation = pv;
                else if (pk == "host_inversion")
                    p.host_inversion = pv;
                else if (pk == "host_is_transposition")
                    p.host_is_transposition = pv;
                else if (pk == "host_ris_transposition")
                    p.host_ris_transposition = pv;
                else if (pk == "host_gene_transposition")
                    p.host_gene_transposition = pv;
                else if (pk == "host_one_point_crossover")
                    p.host_one_point_crossover = pv;
                else if (pk == "host_two_point_crossover")
                    p.host_two_point_crossover = pv;
                else if (pk == "host_gene_crossover")
                    p.host_gene_crossover = pv;
                else if (pk == "plasmid_mutation")
                    p.plasmid_mutation = pv;
                else if (pk == "plasmid_inversion")
                    p.plasmid_inversion = pv;
                else if (pk == "plasmid_is_transposition")
                    p.plasmid_is_transposition = pv;
                else if (pk == "plasmid_ris_transposition")
                    p.plasmid_ris_transposition = pv;
                else if (pk == "plasmid_gene_transposition")
                    p.plasmid_gene_transposition = pv;
                else if (pk == "rnc_mutation")
                    p.rnc_mutation = pv;
                else
                    throw ConfigError("unknown operator probability '" + pit.key() + "'");
            }
        } else {
            throw ConfigError("unknown evolution key '" + it.key() + "'");
        }
    }
}

GeneratorSpec parse_generator(const json& j) {
    GeneratorSpec g;
    if (j.is_string()) {
        g.name = j.get<std::string>();
        return g;
    }
    if (!j.contains("name")) throw ConfigError("generator: missing name");
    read_into(j["name"], g.name, "generator.name");
    if (j.contains("points")) read_into(j["points"], g.points, "generator.points");
    if (j.contains("times")) read_into(j["times"], g.times, "generator.times");
    if (j.contains("noise_level"))
        read_into(j["noise_level"], g.noise_level, "generator.noise_level");
    if (j.contains("noise_seed"))
        read_into(j["noise_seed"], g.noise_seed, "generator.noise_seed");
    if (j.contains("compressible"))
        read_into(j["compressible"], g.compressible, "generator.compressible");
    return g;
}

} // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + origin + ": " + e.what());
    }

    RunConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = normalize_key(it.key());
        const json& v = it.value();
        if (key == "data") {
            if (!v.contains("path") || !v.contains("schema"))
                throw ConfigError("data: needs 'path' and 'schema'");
            cfg.data_path = v["path"].get<std::string>();
            cfg.schema_path = v["schema"].get<std::string>();
        } else if (key == "generator") {
            cfg.generator = parse_generator(v);
        } else if (key == "functions") {
            if (v.contains("tensor"))
                read_into(v["tensor"], cfg.tensor_functions, "functions.tensor");
            if (v.contains("scalar"))
                read_into(v["scalar"], cfg.scalar_functions, "functions.scalar");
        } else if (key == "terminals") {
            if (v.contains("tensor"))
                read_into(v["tensor"], cfg.tensor_terminals, "terminals.tensor");
            if (v.contains("scalar"))
                read_into(v["scalar"], cfg.scalar_terminals, "terminals.scalar");
        } else if (key == "subsample") {
            SubsampleSpec ss;
            if (!v.contains("k")) throw ConfigError("subsample: missing k");
            read_into(v["k"], ss.k, "subsample.k");
            if (v.contains("seed")) read_into(v["seed"], ss.seed, "subsample.seed");
            cfg.subsample = ss;
        } else if (key == "evolution") {
            parse_evolution(v, cfg.evolution);
        } else if (key == "output_dir") {
            read_into(v, cfg.output_dir, key);
        } else if (key == "prune_threshold") {
            read_into(v, cfg.prune_threshold, key);
        } else if (key == "seed_file") {
            std::string p;
            read_into(v, p, key);
            cfg.seed_file = p;
        } else {
            throw ConfigError("unknown config key '" + it.key() + "'");
        }
    }

    const bool has_file = cfg.data_path.has_value();
    const bool has_gen = cfg.generator.has_value();
    if (has_file == has_gen)
        throw ConfigError("config must specify exactly one data source ('data' or 'generator')");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text, path);
}

Dataset resolve_dataset(const RunConfig& cfg) {
    Dataset ds;
    if (cfg.generator) {
        const GeneratorSpec& g = *cfg.generator;
        NoiseSpec noise{g.noise_level, g.noise_seed};
        if (g.name == "maxwell")
            ds = gen_maxwell(g.points, noise);
        else if (g.name == "reynolds")
            ds = gen_reynolds_decay(g.times);
        else if (g.name == "newtonian")
            ds = gen_newtonian_field(g.points, g.compressible, noise);
        else
            throw ConfigError("unknown generator '" + g.name + "'");
    } else {
        ds = load_dataset(*cfg.data_path, *cfg.schema_path);
    }

    if (cfg.subsample) ds = subsample(ds, cfg.subsample->k, cfg.subsample->seed);

    // Optional terminal restriction.
    auto filter = [&](auto& fields, const std::vector<std::string>& keep,
                      const std::string& what) {
        if (keep.empty()) return;
        for (const auto& name : keep) {
            bool found = false;
            for (const auto& f : fields)
                if (f.name == name) found = true;
            if (!found)
                throw ConfigError(what + " terminal '" + name + "' not found in the schema");
        }
        std::erase_if(fields, [&](const auto& f) {
            return std::find(keep.begin(), keep.end(), f.name) == keep.end();
        });
    };
    filter(ds.tensors, cfg.tensor_terminals, "tensor");
    filter(ds.scalars, cfg.scalar_terminals, "scalar");
    return ds;
}

void validate_run_config(const RunConfig& cfg, const Dataset& ds) {
    if (ds.tensors.empty()) throw ConfigError("tensor terminal library is empty");
    if (ds.scalars.empty()) throw ConfigError("scalar terminal library is empty");
    const EvolutionConfig& e = cfg.evolution;
    if (e.plasmid_genes != 1) throw ConfigError("plasmid chromosomes carry exactly one gene");
    if (e.population < 1) throw ConfigError("population must be >= 1");
    if (e.host_genes < 1) throw ConfigError("host_genes must be >= 1");
    if (e.host_head_len < 1 || e.plasmid_head_len < 1)
        throw ConfigError("head lengths must be >= 1");
    if (e.elites < 0 || e.elites > e.population) throw ConfigError("elites out of range");
    if (e.tournament_size < 1) throw ConfigError("tournament_size must be >= 1");
    if (cfg.prune_threshold < 0) throw ConfigError("prune_threshold must be >= 0");
    const double probs[] = {e.probs.host_mutation,
                            e.probs.host_inversion,
                            e.probs.host_is_transposition,
                            e.probs.host_ris_transposition,
                            e.probs.host_gene_transposition,
                            e.probs.host_one_point_crossover,
                            e.probs.host_two_point_crossover,
                            e.probs.host_gene_crossover,
                            e.probs.plasmid_mutation,
                            e.probs.plasmid_inversion,
                            e.probs.plasmid_is_transposition,
                            e.probs.plasmid_ris_transposition,
                            e.probs.plasmid_gene_transposition,
                            e.probs.rnc_mutation};
    for (double p : probs)
        if (p < 0.0 || p > 1.0) throw ConfigError("operator probabilities must be in [0,1]");
}

int resolve_threads(int configured) {
    if (const char* env = std::getenv("SITE_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 1) return static_cast<int>(v);
    }
    if (configured >= 1) return configured;
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

} // namespace site
