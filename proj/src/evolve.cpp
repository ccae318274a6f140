#include "site/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "site/dimcheck.hpp"
#include "site/errors.hpp"

namespace site {

namespace {

double unif01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

int unif_int(Rng& rng, int lo, int hi) { // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Redraw of one element excluding its current symbol. Returns true if the
/// position had an alternative. Fresh plasmids/RNC values are drawn here.
bool redraw_element(Element& e, const Library& lib, bool head, const OpContext& ctx,
                    Rng& rng) {
    int choices, base;
    if (head) {
        choices = lib.n_symbols() - 1;
        base = 0;
    } else {
        choices = lib.n_terminals() - 1;
        base = lib.n_functions();
    }
    if (choices <= 0) return false;
    int j = unif_int(rng, 0, choices - 1);
    int code = base + j + (base + j >= e.code ? 1 : 0);

    e.code = code;
    const SymbolDef& sym = lib.symbol(code);
    if (sym.is_function && sym.op == OpKind::plasmid) {
        e.plasmid = std::make_unique<PlasmidChromosome>(ctx.factory->make(rng));
    } else {
        e.plasmid.reset();
    }
    if (sym.is_rnc) {
        e.rnc_value = std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
    } else {
        e.rnc_value = 0.0;
    }
    return true;
}

int mutate_gene(Gene& g, const Library& lib, double rate, const OpContext& ctx, Rng& rng) {
    int changed = 0;
    for (int pos = 0; pos < g.size(); ++pos) {
        if (unif01(rng) < rate)
            if (redraw_element(g.elems[pos], lib, g.in_head(pos), ctx, rng)) ++changed;
    }
    return changed;
}

} // namespace

int mutate_host(HostChromosome& c, double rate, const OpContext& ctx, Rng& rng) {
    int changed = 0;
    for (auto& g : c.genes) changed += mutate_gene(g, ctx.libs->tensor, rate, ctx, rng);
    return changed;
}

int mutate_plasmids(HostChromosome& c, double rate, const OpContext& ctx, Rng& rng) {
    int changed = 0;
    for (auto& g : c.genes)
        for (auto& e : g.elems)
            if (e.plasmid)
                changed += mutate_gene(e.plasmid->gene, ctx.libs->scalar, rate, ctx, rng);
    return changed;
}

void invert_gene(Gene& g, int max_fragment, Rng& rng) {
    const int h = g.head_len;
    if (h < 2) return;
    const int len = unif_int(rng, 1, std::min(max_fragment, h));
    const int start = unif_int(rng, 0, h - len);
    std::reverse(g.elems.begin() + start, g.elems.begin() + start + len);
}

void invert_host(HostChromosome& c, const OpContext& ctx, Rng& rng) {
    Gene& g = c.genes[unif_int(rng, 0, c.n_genes() - 1)];
    invert_gene(g, ctx.max_fragment, rng);
}

void is_transpose_event(std::vector<Gene*>& genes, PlasmidFactory* factory,
                        int max_fragment, Rng& rng) {
    Gene& target = *genes[unif_int(rng, 0, static_cast<int>(genes.size()) - 1)];
    const int h = target.head_len;
    if (h < 2) return;
    const int len = unif_int(rng, 1, std::min(max_fragment, h - 1));
    Gene& source = *genes[unif_int(rng, 0, static_cast<int>(genes.size()) - 1)];
    const int start = unif_int(rng, 0, source.size() - len);
    const int at = unif_int(rng, 1, h - 1); // never the root

    std::vector<Element> frag(source.elems.begin() + start,
                              source.elems.begin() + start + len);
    if (factory)
        for (auto& e : frag)
            if (e.plasmid) e.plasmid->id = factory->fresh_id();

    std::vector<Element> head;
    head.reserve(h);
    for (int i = 0; i < at; ++i) head.push_back(std::move(target.elems[i]));
    for (auto& e : frag) head.push_back(std::move(e));
    for (int i = at; i < h && static_cast<int>(head.size()) < h; ++i)
        head.push_back(std::move(target.elems[i]));
    head.resize(h);
    for (int i = 0; i < h; ++i) target.elems[i] = std::move(head[i]);
}

void is_transpose_host(HostChromosome& c, const OpContext& ctx, Rng& rng) {
    std::vector<Gene*> genes;
    for (auto& g : c.genes) genes.push_back(&g);
    is_transpose_event(genes, ctx.factory, ctx.max_fragment, rng);
}

void ris_transpose_event(std::vector<Gene*>& genes, const Library& lib,
                         PlasmidFactory* factory, int max_fragment, Rng& rng) {
    Gene& g = *genes[unif_int(rng, 0, static_cast<int>(genes.size()) - 1)];
    const int h = g.head_len;
    if (h < 1) return;
    const int scan_from = unif_int(rng, 0, h - 1);
    int fpos = -1;
    for (int i = scan_from; i < h; ++i) {
        if (lib.symbol(g.elems[i].code).is_function) {
            fpos = i;
            break;
        }
    }
    if (fpos < 0) return;
    const int len = unif_int(rng, 1, std::min({max_fragment, h, g.size() - fpos}));

    std::vector<Element> frag(g.elems.begin() + fpos, g.elems.begin() + fpos + len);
    if (factory)
        for (auto& e : frag)
            if (e.plasmid) e.plasmid->id = factory->fresh_id();

    std::vector<Element> head;
    head.reserve(h);
    for (auto& e : frag) head.push_back(std::move(e));
    for (int i = 0; i < h && static_cast<int>(head.size()) < h; ++i)
        head.push_back(std::move(g.elems[i]));
    head.resize(h);
    for (int i = 0; i < h; ++i) g.elems[i] = std::move(head[i]);
}

void ris_transpose_host(HostChromosome& c, const OpContext& ctx, Rng& rng) {
    std::vector<Gene*> genes;
    for (auto& g : c.genes) genes.push_back(&g);
    ris_transpose_event(genes, ctx.libs->tensor, ctx.factory, ctx.max_fragment, rng);
}

void gene_transpose_host(HostChromosome& c, Rng& rng) {
    if (c.n_genes() < 2) return;
    const int j = unif_int(rng, 1, c.n_genes() - 1);
    std::rotate(c.genes.begin(), c.genes.begin() + j, c.genes.begin() + j + 1);
}

namespace {

void swap_linear_range(HostChromosome& a, HostChromosome& b, int from, int to) {
    const int gene_size = a.genes[0].size();
    for (int idx = from; idx < to; ++idx) {
        const int gi = idx / gene_size;
        const int off = idx % gene_size;
        std::swap(a.genes[gi].elems[off], b.genes[gi].elems[off]);
    }
}

} // namespace

void one_point_crossover(HostChromosome& a, HostChromosome& b, Rng& rng) {
    const int L = a.n_genes() * a.genes[0].size();
    if (L < 2) return;
    const int cut = unif_int(rng, 1, L - 1);
    swap_linear_range(a, b, cut, L);
}

void two_point_crossover(HostChromosome& a, HostChromosome& b, Rng& rng) {
    const int L = a.n_genes() * a.genes[0].size();
    int c1 = unif_int(rng, 0, L);
    int c2 = unif_int(rng, 0, L);
    if (c1 > c2) std::swap(c1, c2);
    if (c1 == c2) return;
    swap_linear_range(a, b, c1, c2);
}

void gene_crossover(HostChromosome& a, HostChromosome& b, Rng& rng) {
    const int gi = unif_int(rng, 0, a.n_genes() - 1);
    std::swap(a.genes[gi], b.genes[gi]);
}

int rnc_mutate(HostChromosome& c, double rate, const OpContext& ctx, Rng& rng) {
    const int rnc = ctx.libs->scalar.rnc_code();
    if (rnc < 0) return 0;
    int changed = 0;
    for (auto& g : c.genes)
        for (auto& e : g.elems)
            if (e.plasmid)
                for (auto& pe : e.plasmid->gene.elems)
                    if (pe.code == rnc && unif01(rng) < rate) {
                        pe.rnc_value =
                            std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
                        ++changed;
                    }
    return changed;
}

// ---------------------------------------------------------------------------
// Selection

bool fitter_than(const Individual& a, const Individual& b, const LibraryPair& libs) {
    const double la = a.fit ? a.fit->loss : std::numeric_limits<double>::infinity();
    const double lb = b.fit ? b.fit->loss : std::numeric_limits<double>::infinity();
    if (la != lb) return la < lb;
    const int na = a.fit ? a.fit->node_count : 0;
    const int nb = b.fit ? b.fit->node_count : 0;
    if (na != nb) return na < nb;
    return serialize_chromosome(a.chrom, libs) < serialize_chromosome(b.chrom, libs);
}

namespace {

/// Index comparator over a population with memoized serializations.
struct FitOrder {
    const std::vector<Individual>* hosts;
    const LibraryPair* libs;
    mutable std::vector<std::string> serial_cache;

    explicit FitOrder(const std::vector<Individual>& h, const LibraryPair& l)
        : hosts(&h), libs(&l), serial_cache(h.size()) {}

    const std::string& serial(int i) const {
        if (serial_cache[i].empty())
            serial_cache[i] = serialize_chromosome((*hosts)[i].chrom, *libs);
        return serial_cache[i];
    }

    bool operator()(int i, int j) const {
        const auto& a = (*hosts)[i];
        const auto& b = (*hosts)[j];
        const double la = a.fit ? a.fit->loss : std::numeric_limits<double>::infinity();
        const double lb = b.fit ? b.fit->loss : std::numeric_limits<double>::infinity();
        if (la != lb) return la < lb;
        const int na = a.fit ? a.fit->node_count : 0;
        const int nb = b.fit ? b.fit->node_count : 0;
        if (na != nb) return na < nb;
        return serial(i) < serial(j);
    }
};

} // namespace

Population init_population(const EvolutionConfig& cfg, const LibraryPair& libs, Rng& rng,
                           PlasmidFactory& factory) {
    Population pop;
    pop.hosts.reserve(cfg.population);
    for (int i = 0; i < cfg.population; ++i) {
        Individual ind;
        ind.chrom.genes.reserve(cfg.host_genes);
        for (int g = 0; g < cfg.host_genes; ++g)
            ind.chrom.genes.push_back(
                random_gene(Realm::tensor, libs.tensor, cfg.host_head_len, rng, &factory));
        pop.hosts.push_back(std::move(ind));
    }
    return pop;
}

Population select(const Population& pop, const EvolutionConfig& cfg, const LibraryPair& libs,
                  Rng& rng) {
    const int n = static_cast<int>(pop.hosts.size());
    FitOrder order(pop.hosts, libs);

    std::vector<int> rank(n);
    std::iota(rank.begin(), rank.end(), 0);
    const int n_elites = std::min(cfg.elites, n);
    std::partial_sort(rank.begin(), rank.begin() + n_elites, rank.end(), order);

    Population next;
    next.generation = pop.generation;
    next.hosts.reserve(n);
    for (int e = 0; e < n_elites; ++e) next.hosts.push_back(pop.hosts[rank[e]]);

    // A tournament at least as large as the population is exhaustive: every
    // slot receives the global best. Below that, draws are uniform with
    // replacement.
    if (cfg.tournament_size >= n) {
        std::partial_sort(rank.begin(), rank.begin() + 1, rank.end(), order);
        for (int slot = n_elites; slot < n; ++slot) next.hosts.push_back(pop.hosts[rank[0]]);
        return next;
    }
    for (int slot = n_elites; slot < n; ++slot) {
        int best = unif_int(rng, 0, n - 1);
        for (int t = 1; t < cfg.tournament_size; ++t) {
            int cand = unif_int(rng, 0, n - 1);
            if (order(cand, best)) best = cand;
        }
        next.hosts.push_back(pop.hosts[best]);
    }
    return next;
}

void apply_modification(Population& pop,
                        const std::function<void(HostChromosome&, Rng&)>& op, double p_b,
                        int elites, Rng& rng) {
    for (std::size_t i = elites; i < pop.hosts.size(); ++i) {
        if (unif01(rng) < p_b) {
            op(pop.hosts[i].chrom, rng);
            pop.hosts[i].fit.reset();
        }
    }
}

void apply_crossover(Population& pop,
                     const std::function<void(HostChromosome&, HostChromosome&, Rng&)>& op,
                     double p_b, int elites, Rng& rng) {
    for (std::size_t i = elites; i + 1 < pop.hosts.size(); i += 2) {
        if (unif01(rng) < p_b) {
            op(pop.hosts[i].chrom, pop.hosts[i + 1].chrom, rng);
            pop.hosts[i].fit.reset();
            pop.hosts[i + 1].fit.reset();
        }
    }
}

bool inject_seeds(Population& pop, const EvolutionConfig& cfg, const LibraryPair& libs,
                  const DimVector& target_dim, PlasmidFactory& factory, Rng& rng,
                  const HostChromosome* seed_template, std::ostream* log) {
    if (cfg.seed_individuals <= 0) return true;

    HostChromosome seed;
    if (seed_template) {
        seed = *seed_template;
    } else {
        for (int gi = 0; gi < cfg.host_genes; ++gi) {
            bool found = false;
            for (int attempt = 0; attempt < cfg.seed_retry_cap; ++attempt) {
                Gene g = random_gene(Realm::tensor, libs.tensor, cfg.host_head_len, rng,
                                     &factory);
                if (gene_passes(g, libs, target_dim)) {
                    seed.genes.push_back(std::move(g));
                    found = true;
                    break;
                }
            }
            if (!found) {
                if (log)
                    *log << "warning: seed injection skipped (no dimensionally valid gene "
                            "within "
                         << cfg.seed_retry_cap << " tries)\n";
                return false;
            }
        }
    }

    // Rank non-elite slots by last-known loss, worst first; slots without a
    // cached fit (freshly modified offspring) are kept in favor of known-bad
    // individuals and used only if the quota is not met.
    const int n = static_cast<int>(pop.hosts.size());
    std::vector<int> with_fit, without_fit;
    for (int i = cfg.elites; i < n; ++i)
        (pop.hosts[i].fit ? with_fit : without_fit).push_back(i);
    std::stable_sort(with_fit.begin(), with_fit.end(), [&](int a, int b) {
        return pop.hosts[a].fit->loss > pop.hosts[b].fit->loss;
    });
    std::reverse(without_fit.begin(), without_fit.end());
    with_fit.insert(with_fit.end(), without_fit.begin(), without_fit.end());

    const int count = std::min<int>(cfg.seed_individuals, static_cast<int>(with_fit.size()));
    for (int c = 0; c < count; ++c) {
        int slot = with_fit[c];
        pop.hosts[slot].chrom = clone_fresh_ids(seed, factory);
        pop.hosts[slot].fit.reset();
    }
    return true;
}

void evaluate_population(Population& pop, const LibraryPair& libs, const EvalContext& ctx,
                         int threads) {
    std::vector<int> todo;
    for (int i = 0; i < static_cast<int>(pop.hosts.size()); ++i)
        if (!pop.hosts[i].fit) todo.push_back(i);
    if (todo.empty()) return;

    auto work = [&](int from, int to) {
        for (int k = from; k < to; ++k) {
            Individual& ind = pop.hosts[todo[k]];
            ind.fit = evaluate_individual(ind.chrom, libs, ctx);
        }
    };

    const int nt = std::max(1, threads);
    if (nt == 1 || static_cast<int>(todo.size()) < 2 * nt) {
        work(0, static_cast<int>(todo.size()));
        return;
    }
    std::vector<std::thread> pool;
    const int n = static_cast<int>(todo.size());
    for (int t = 0; t < nt; ++t) {
        const int from = static_cast<int>(static_cast<long long>(n) * t / nt);
        const int to = static_cast<int>(static_cast<long long>(n) * (t + 1) / nt);
        if (from < to) pool.emplace_back(work, from, to);
    }
    for (auto& th : pool) th.join();
}

std::string format_generation_line(const GenerationStats& s) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.17g\t%.6f\t", s.generation, s.best_loss,
                  s.mean_ok_loss, s.dim_pass_fraction);
    return std::string(buf) + s.best_serialized;
}

EvolveResult evolve(const Dataset& ds, const LibraryPair& libs, const EvolutionConfig& cfg,
                    const HostChromosome* seed_template, std::ostream* gen_log,
                    std::ostream* warn_log) {
    if (cfg.population < 1) throw ArgumentError("population must be >= 1");
    if (cfg.plasmid_genes != 1)
        throw ArgumentError("plasmid chromosomes carry exactly one gene");

    std::string warnings;
    EvalContext ctx(ds, cfg.eval_settings(), &warnings);
    if (warn_log && !warnings.empty()) *warn_log << warnings;

    Rng rng(cfg.rng_seed);
    PlasmidFactory factory{&libs.scalar, cfg.plasmid_head_len, 1};
    OpContext opctx{&libs, &factory, cfg.max_fragment};

    Population pop = init_population(cfg, libs, rng, factory);

    EvolveResult result;
    Individual best_ever;

    if (gen_log) *gen_log << "# generation\tbest_loss\tmean_ok_loss\tdim_pass\tbest\n";

    for (int gen = 1; gen <= cfg.max_generations; ++gen) {
        pop.generation = gen;
        evaluate_population(pop, libs, ctx, cfg.threads);

        // Generation statistics.
        int best_idx = 0;
        double ok_sum = 0.0;
        int ok_count = 0, dim_count = 0;
        FitOrder order(pop.hosts, libs);
        for (int i = 0; i < static_cast<int>(pop.hosts.size()); ++i) {
            const FitResult& f = *pop.hosts[i].fit;
            if (f.status == FitStatus::ok) {
                ok_sum += f.loss;
                ++ok_count;
            }
            if (f.dim_pass) ++dim_count;
            if (i != best_idx && order(i, best_idx)) best_idx = i;
        }
        const Individual& gen_best = pop.hosts[best_idx];
        if (!best_ever.fit || fitter_than(gen_best, best_ever, libs)) best_ever = gen_best;

        GenerationStats st;
        st.generation = gen;
        st.best_loss = gen_best.fit->loss;
        st.mean_ok_loss =
            ok_count ? ok_sum / ok_count : std::numeric_limits<double>::quiet_NaN();
        st.dim_pass_fraction =
            static_cast<double>(dim_count) / static_cast<double>(pop.hosts.size());
        st.best_serialized = serialize_chromosome(gen_best.chrom, libs);
        if (gen_log) *gen_log << format_generation_line(st) << '\n';
        result.history.push_back(std::move(st));
        result.generations_run = gen;

        if (best_ever.fit->loss < cfg.loss_threshold) {
            result.threshold_reached = true;
            break;
        }
        if (gen == cfg.max_generations) break;

        // Next generation: selection, host operators, plasmid operators.
        Population next = select(pop, cfg, libs, rng);
        const int elites = std::min(cfg.elites, static_cast<int>(next.hosts.size()));
        const OperatorProbs& p = cfg.probs;

        for (std::size_t i = elites; i < next.hosts.size(); ++i) {
            if (mutate_host(next.hosts[i].chrom, p.host_mutation, opctx, rng) > 0)
                next.hosts[i].fit.reset();
        }
        apply_modification(
            next, [&](HostChromosome& c, Rng& r) { invert_host(c, opctx, r); },
            p.host_inversion, elites, rng);
        apply_modification(
            next, [&](HostChromosome& c, Rng& r) { is_transpose_host(c, opctx, r); },
            p.host_is_transposition, elites, rng);
        apply_modification(
            next, [&](HostChromosome& c, Rng& r) { ris_transpose_host(c, opctx, r); },
            p.host_ris_transposition, elites, rng);
        apply_modification(
            next, [&](HostChromosome& c, Rng& r) { gene_transpose_host(c, r); },
            p.host_gene_transposition, elites, rng);
        apply_crossover(next, one_point_crossover, p.host_one_point_crossover, elites, rng);
        apply_crossover(next, two_point_crossover, p.host_two_point_crossover, elites, rng);
        apply_crossover(next, gene_crossover, p.host_gene_crossover, elites, rng);

        // Plasmid population evolves through modification only.
        for (std::size_t i = elites; i < next.hosts.size(); ++i) {
            if (mutate_plasmids(next.hosts[i].chrom, p.plasmid_mutation, opctx, rng) > 0)
                next.hosts[i].fit.reset();
        }
        auto per_plasmid = [&](double p_b, auto&& apply) {
            if (p_b <= 0.0) return;
            for (std::size_t i = elites; i < next.hosts.size(); ++i) {
                bool touched = false;
                for (auto& g : next.hosts[i].chrom.genes)
                    for (auto& e : g.elems)
                        if (e.plasmid && unif01(rng) < p_b) {
                            apply(*e.plasmid);
                            touched = true;
                        }
                if (touched) next.hosts[i].fit.reset();
            }
        };
        per_plasmid(p.plasmid_inversion, [&](PlasmidChromosome& pc) {
            invert_gene(pc.gene, cfg.max_fragment, rng);
        });
        per_plasmid(p.plasmid_is_transposition, [&](PlasmidChromosome& pc) {
            std::vector<Gene*> pool{&pc.gene};
            is_transpose_event(pool, nullptr, cfg.max_fragment, rng);
        });
        per_plasmid(p.plasmid_ris_transposition, [&](PlasmidChromosome& pc) {
            std::vector<Gene*> pool{&pc.gene};
            ris_transpose_event(pool, libs.scalar, nullptr, cfg.max_fragment, rng);
        });
        // Plasmid gene transposition is configured but inert: one gene.
        per_plasmid(p.plasmid_gene_transposition, [&](PlasmidChromosome&) {});
        if (cfg.rnc_mode) {
            for (std::size_t i = elites; i < next.hosts.size(); ++i) {
                if (rnc_mutate(next.hosts[i].chrom, p.rnc_mutation, opctx, rng) > 0)
                    next.hosts[i].fit.reset();
            }
        }

        if (cfg.seed_interval > 0 && (gen + 1) % cfg.seed_interval == 0)
            inject_seeds(next, cfg, libs, ctx.target_dim, factory, rng, seed_template,
                         warn_log);

        pop = std::move(next);
    }

    result.best = best_ever.chrom;
    result.best_fit = *best_ever.fit;
    return result;
}

} // namespace site
