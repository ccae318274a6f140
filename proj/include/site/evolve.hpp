#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "site/eval.hpp"
#include "site/genome.hpp"

namespace site {

/// Per-operator invocation probabilities (Table A.1 defaults). Mutation rates
/// act per gene element; the other modification rates act per individual
/// (host) or per plasmid, and crossover rates per consecutive pair.
struct OperatorProbs {
    double host_mutation = 0.2;
    double host_inversion = 0.2;
    double host_is_transposition = 0.2;
    double host_ris_transposition = 0.2;
    double host_gene_transposition = 0.2;
    double host_one_point_crossover = 0.2;
    double host_two_point_crossover = 0.2;
    double host_gene_crossover = 0.2;
    double plasmid_mutation = 0.05;
    double plasmid_inversion = 0.1;
    double plasmid_is_transposition = 0.1;
    double plasmid_ris_transposition = 0.1;
    double plasmid_gene_transposition = 0.1; // inert with 1 plasmid gene
    double rnc_mutation = 0.05;              // per RNC element, RNC mode only
};

struct EvolutionConfig {
    int host_head_len = 5;
    int plasmid_head_len = 10;
    int host_genes = 4;
    int plasmid_genes = 1; // must be 1
    int population = 1600;
    int max_generations = 2000;
    int elites = 1;
    int tournament_size = 200;
    int seed_individuals = 100;
    int seed_interval = 20;     // generations between injections; 0 disables
    int seed_retry_cap = 2000;  // rejection-sampling bound per seed gene
    int max_fragment = 3;       // inversion/IS/RIS fragment length cap
    OperatorProbs probs;
    double loss_threshold = 1e-10;
    double penalty = 1e12;
    bool rnc_mode = false;
    std::uint64_t rng_seed = 1;
    int threads = 1; // evaluation workers; results independent of this

    EvalSettings eval_settings() const {
        EvalSettings s;
        s.penalty = penalty;
        return s;
    }
};

struct Individual {
    HostChromosome chrom;
    std::optional<FitResult> fit;
};

struct Population {
    std::vector<Individual> hosts;
    int generation = 0;
};

struct GenerationStats {
    int generation = 0;
    double best_loss = 0.0;
    double mean_ok_loss = 0.0; // mean over non-penalized individuals (nan if none)
    double dim_pass_fraction = 0.0;
    std::string best_serialized;
};

struct EvolveResult {
    HostChromosome best;
    FitResult best_fit;
    std::vector<GenerationStats> history;
    int generations_run = 0;
    bool threshold_reached = false;
};

struct OpContext {
    const LibraryPair* libs = nullptr;
    PlasmidFactory* factory = nullptr;
    int max_fragment = 3;
};

// --- genetic operators (canonical GEP semantics, head/tail preserving) ---

/// Per-element mutation; head positions redraw over functions+terminals, tail
/// positions over terminals, always excluding the current symbol so a fired
/// position always changes. Returns the number of changed elements.
int mutate_host(HostChromosome& c, double rate, const OpContext& ctx, Rng& rng);

/// Per-element mutation over every plasmid gene of the chromosome.
int mutate_plasmids(HostChromosome& c, double rate, const OpContext& ctx, Rng& rng);

/// Reverses a fragment (length <= max_fragment) strictly inside one head.
void invert_gene(Gene& g, int max_fragment, Rng& rng);
void invert_host(HostChromosome& c, const OpContext& ctx, Rng& rng);

/// IS transposition: copies a fragment from a random position of a random
/// source gene into a random non-root head position of a random target gene,
/// truncating the head. Duplicated plasmids get fresh ids via ctx.factory.
void is_transpose_event(std::vector<Gene*>& genes, PlasmidFactory* factory,
                        int max_fragment, Rng& rng);
void is_transpose_host(HostChromosome& c, const OpContext& ctx, Rng& rng);

/// RIS transposition: like IS but the fragment must start with a function
/// (scanned from a random head position) and lands at its own gene's root.
void ris_transpose_event(std::vector<Gene*>& genes, const Library& lib,
                         PlasmidFactory* factory, int max_fragment, Rng& rng);
void ris_transpose_host(HostChromosome& c, const OpContext& ctx, Rng& rng);

/// Moves a randomly chosen gene (other than the first) to the front.
void gene_transpose_host(HostChromosome& c, Rng& rng);

void one_point_crossover(HostChromosome& a, HostChromosome& b, Rng& rng);
void two_point_crossover(HostChromosome& a, HostChromosome& b, Rng& rng);
void gene_crossover(HostChromosome& a, HostChromosome& b, Rng& rng);

/// RNC mode only: re-draws random-constant values uniformly from [-10,10] at
/// the given per-element rate. Returns the number of changed values.
int rnc_mutate(HostChromosome& c, double rate, const OpContext& ctx, Rng& rng);

/// Total order used for elitism and tournament ties: loss, then expressed
/// node count, then chromosome serialization.
bool fitter_than(const Individual& a, const Individual& b, const LibraryPair& libs);

Population init_population(const EvolutionConfig& cfg, const LibraryPair& libs, Rng& rng,
                           PlasmidFactory& factory);

/// Elites copied unchanged into the first slots, remaining slots filled by
/// tournaments of cfg.tournament_size drawn uniformly with replacement.
Population select(const Population& pop, const EvolutionConfig& cfg, const LibraryPair& libs,
                  Rng& rng);

/// Algorithm-1 application: every non-elite individual is hit with
/// probability p_b and its cached fitness invalidated.
void apply_modification(Population& pop,
                        const std::function<void(HostChromosome&, Rng&)>& op, double p_b,
                        int elites, Rng& rng);

/// Algorithm-2 application over consecutive non-elite pairs.
void apply_crossover(Population& pop,
                     const std::function<void(HostChromosome&, HostChromosome&, Rng&)>& op,
                     double p_b, int elites, Rng& rng);

/// Builds one seed individual whose genes each pass the per-gene dimension
/// check (rejection sampling, cfg.seed_retry_cap tries per gene) and replaces
/// the worst-known non-elite individuals with fresh-id copies. A provided
/// seed_template is injected instead of sampling. Returns false when the
/// retry cap was exhausted (event skipped, warning to `log`).
bool inject_seeds(Population& pop, const EvolutionConfig& cfg, const LibraryPair& libs,
                  const DimVector& target_dim, PlasmidFactory& factory, Rng& rng,
                  const HostChromosome* seed_template, std::ostream* log);

/// Evaluates every individual lacking a cached fit. Evaluation consumes no
/// randomness, so the worker count cannot change any result.
void evaluate_population(Population& pop, const LibraryPair& libs, const EvalContext& ctx,
                         int threads);

/// The full SITE loop: evaluate, select, host modification + crossover,
/// plasmid modification, periodic seed injection; stops when the best loss
/// falls below cfg.loss_threshold or cfg.max_generations is reached.
EvolveResult evolve(const Dataset& ds, const LibraryPair& libs, const EvolutionConfig& cfg,
                    const HostChromosome* seed_template = nullptr,
                    std::ostream* gen_log = nullptr, std::ostream* warn_log = nullptr);

std::string format_generation_line(const GenerationStats& s);

} // namespace site
