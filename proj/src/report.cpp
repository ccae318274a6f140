#include "site/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "site/dimcheck.hpp"
#include "site/errors.hpp"

namespace site {

using nlohmann::json;

namespace {

std::string fmt(double v, const char* f = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// One additive piece of an expanded gene: sign * (product of scalar series)
// * (inner-product chain value).
struct RawPiece {
    double sign = 1.0;
    ScalarSeries scalar;   // running product, starts all-ones
    TensorSeries skeleton; // running inner-product chain value
    std::string scalar_desc;
    std::string skel_desc;
};

std::vector<RawPiece> distribute(const ExprTree& t, const Dataset& ds) {
    const int n = ds.n_data;
    const int nd = ds.n_dim;
    if (!t.sym->is_function) {
        RawPiece p;
        p.scalar.assign(n, 1.0);
        const auto& f = ds.tensors[t.sym->terminal_index];
        p.skeleton = TensorSeries(nd, n);
        for (int c = 0; c < nd * nd; ++c)
            std::copy(f.comp[c].begin(), f.comp[c].end(),
                      p.skeleton.v.begin() + static_cast<std::ptrdiff_t>(c) * n);
        p.skel_desc = f.name;
        return {std::move(p)};
    }
    switch (t.sym->op) {
        case OpKind::add:
        case OpKind::sub: {
            auto a = distribute(t.children[0], ds);
            auto b = distribute(t.children[1], ds);
            if (t.sym->op == OpKind::sub)
                for (auto& p : b) p.sign = -p.sign;
            for (auto& p : b) a.push_back(std::move(p));
            return a;
        }
        case OpKind::scalar_mul: {
            auto s = eval_scalar_tree(t.children[0], ds);
            if (!s) throw InternalError("non-finite scalar part while reporting");
            auto pieces = distribute(t.children[1], ds);
            const std::string desc = expr_to_string(t.children[0]);
            for (auto& p : pieces) {
                for (int i = 0; i < n; ++i) p.scalar[i] *= (*s)[i];
                p.scalar_desc = p.scalar_desc.empty() ? desc : p.scalar_desc + "*" + desc;
            }
            return pieces;
        }
        case OpKind::inner: {
            auto as = distribute(t.children[0], ds);
            auto bs = distribute(t.children[1], ds);
            std::vector<RawPiece> out;
            for (const auto& a : as)
                for (const auto& b : bs) {
                    RawPiece p;
                    p.sign = a.sign * b.sign;
                    p.scalar.resize(n);
                    for (int i = 0; i < n; ++i) p.scalar[i] = a.scalar[i] * b.scalar[i];
                    p.skeleton = TensorSeries(nd, n);
                    for (int i = 0; i < nd; ++i)
                        for (int j = 0; j < nd; ++j) {
                            double* rv = p.skeleton.comp(i, j);
                            for (int k = 0; k < nd; ++k) {
                                const double* av = a.skeleton.comp(i, k);
                                const double* bv = b.skeleton.comp(k, j);
                                for (int r = 0; r < n; ++r) rv[r] += av[r] * bv[r];
                            }
                        }
                    p.scalar_desc = a.scalar_desc.empty()
                                        ? b.scalar_desc
                                        : (b.scalar_desc.empty()
                                               ? a.scalar_desc
                                               : a.scalar_desc + "*" + b.scalar_desc);
                    p.skel_desc = a.skel_desc + "." + b.skel_desc;
                    out.push_back(std::move(p));
                }
            return out;
        }
        default:
            throw InternalError("unexpected operator while distributing terms");
    }
}

/// Candidate canonical form: integer monomial over scalar terminals times one
/// tensor terminal (or delta when tensor_index < 0).
struct Candidate {
    std::vector<int> exp; // per dataset scalar
    int tensor_index = -1;
    int complexity = 0;
};

std::vector<Candidate> enumerate_candidates(const Dataset& ds, const DimVector& target_dim) {
    const int ns = static_cast<int>(ds.scalars.size());
    constexpr int kMaxExp = 3;
    constexpr int kMaxTotal = 4;

    std::vector<Candidate> out;
    std::vector<int> exp(ns, 0);

    std::vector<std::pair<int, DimVector>> skeletons; // tensor_index, dim
    skeletons.push_back({-1, DimVector{}});           // delta
    for (int t = 0; t < static_cast<int>(ds.tensors.size()); ++t)
        skeletons.push_back({t, ds.tensors[t].dim});

    // Depth-first over bounded exponent vectors; DV filter at the leaves.
    std::function<void(int, int, DimVector)> rec = [&](int i, int total, DimVector dim) {
        if (i == ns) {
            for (const auto& [ti, tdim] : skeletons) {
                if (dim + tdim == target_dim) {
                    Candidate c;
                    c.exp = exp;
                    c.tensor_index = ti;
                    c.complexity = total + (ti >= 0 ? 1 : 0);
                    out.push_back(std::move(c));
                }
            }
            return;
        }
        for (int e = -kMaxExp; e <= kMaxExp; ++e) {
            if (total + std::abs(e) > kMaxTotal) continue;
            exp[i] = e;
            rec(i + 1, total + std::abs(e), dim + e * ds.scalars[i].dim);
        }
        exp[i] = 0;
    };
    rec(0, 0, DimVector{});

    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        if (a.complexity != b.complexity) return a.complexity < b.complexity;
        if (a.exp != b.exp) return a.exp < b.exp;
        return a.tensor_index < b.tensor_index;
    });
    return out;
}

std::optional<TensorSeries> candidate_value(const Candidate& c, const Dataset& ds) {
    const int n = ds.n_data;
    const int nd = ds.n_dim;
    ScalarSeries m(n, 1.0);
    for (std::size_t s = 0; s < c.exp.size(); ++s) {
        const int e = c.exp[s];
        if (e == 0) continue;
        const auto& vals = ds.scalars[s].values;
        for (int i = 0; i < n; ++i) {
            double f = 1.0;
            for (int k = 0; k < std::abs(e); ++k) f *= vals[i];
            m[i] = e > 0 ? m[i] * f : m[i] / f;
        }
    }
    for (double v : m)
        if (!std::isfinite(v)) return std::nullopt;

    TensorSeries out(nd, n);
    if (c.tensor_index < 0) {
        for (int i = 0; i < nd; ++i)
            std::copy(m.begin(), m.end(), out.v.begin() + (i * nd + i) * n);
    } else {
        const auto& t = ds.tensors[c.tensor_index];
        for (int i = 0; i < nd * nd; ++i) {
            const auto& col = t.comp[i];
            double* dst = out.v.data() + static_cast<std::size_t>(i) * n;
            for (int r = 0; r < n; ++r) dst[r] = m[r] * col[r];
        }
    }
    return out;
}

double dot(const TensorSeries& a, const TensorSeries& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
    return s;
}

struct Matched {
    bool ok = false;
    double kappa = 0.0;
    const Candidate* candidate = nullptr;
};

Matched match_candidate(const TensorSeries& value, const std::vector<Candidate>& candidates,
                        const Dataset& ds) {
    const double v2 = dot(value, value);
    constexpr double rtol = 1e-6;
    for (const auto& c : candidates) {
        auto cv = candidate_value(c, ds);
        if (!cv) continue;
        const double c2 = dot(*cv, *cv);
        if (!(c2 > 0.0)) continue;
        const double kappa = dot(value, *cv) / c2;
        double resid = 0.0;
        for (std::size_t i = 0; i < value.v.size(); ++i) {
            const double d = value.v[i] - kappa * cv->v[i];
            resid += d * d;
        }
        if (resid <= rtol * rtol * v2) return {true, kappa, &c};
    }
    return {};
}

} // namespace

std::string CanonTerm::structure_key() const {
    if (raw) return "raw:" + *raw;
    std::string s;
    for (const auto& [name, e] : scalars) {
        if (!s.empty()) s += "*";
        s += e == 1 ? name : name + "^" + std::to_string(e);
    }
    if (skeleton.empty()) {
        s += s.empty() ? "delta" : "*delta";
    } else {
        for (const auto& t : skeleton) s += (s.empty() ? "" : "*") + t;
    }
    return s;
}

std::string CanonTerm::label() const { return structure_key(); }

std::vector<CanonTerm> canonicalize_terms(const HostChromosome& c, const FitResult& fit,
                                          const LibraryPair& libs, const Dataset& ds,
                                          const std::vector<int>& gene_subset) {
    std::vector<Candidate> candidates = enumerate_candidates(ds, ds.target.dim);

    double target_norm2 = 0.0;
    for (const auto& col : ds.target.comp)
        for (double v : col) target_norm2 += v * v;

    struct Accum {
        CanonTerm term;
        TensorSeries value; // net contribution, for the zero-term drop
    };
    std::vector<Accum> acc;
    auto merge = [&](CanonTerm&& t, const TensorSeries& contribution) {
        for (auto& existing : acc) {
            if (existing.term.structure_key() == t.structure_key()) {
                existing.term.coefficient += t.coefficient;
                for (std::size_t i = 0; i < contribution.v.size(); ++i)
                    existing.value.v[i] += contribution.v[i];
                for (int g : t.genes)
                    if (std::find(existing.term.genes.begin(), existing.term.genes.end(),
                                  g) == existing.term.genes.end())
                        existing.term.genes.push_back(g);
                return;
            }
        }
        acc.push_back({std::move(t), contribution});
    };

    for (int g : gene_subset) {
        const double w = fit.gene_weights[g];
        if (w == 0.0) continue;
        ExprTree tree = decode_and_expand(c.genes[g], libs);
        for (auto& piece : distribute(tree, ds)) {
            // Full value of this piece across all components.
            TensorSeries value = piece.skeleton;
            const int n = ds.n_data;
            for (int comp = 0; comp < ds.n_dim * ds.n_dim; ++comp) {
                double* v = value.v.data() + static_cast<std::size_t>(comp) * n;
                for (int i = 0; i < n; ++i) v[i] *= piece.sign * piece.scalar[i];
            }
            const double v2 = dot(value, value);
            if (v2 <= 1e-24 * target_norm2) continue; // contributes nothing

            CanonTerm term;
            term.genes.push_back(g);
            term.dim = ds.target.dim;
            Matched m = match_candidate(value, candidates, ds);
            if (m.ok) {
                term.coefficient = w * m.kappa;
                for (std::size_t s = 0; s < m.candidate->exp.size(); ++s)
                    if (m.candidate->exp[s] != 0)
                        term.scalars[ds.scalars[s].name] = m.candidate->exp[s];
                if (m.candidate->tensor_index >= 0)
                    term.skeleton.push_back(ds.tensors[m.candidate->tensor_index].name);
            } else {
                term.coefficient = w * piece.sign;
                std::string desc = piece.scalar_desc.empty()
                                       ? piece.skel_desc
                                       : piece.scalar_desc + "*" + piece.skel_desc;
                term.raw = desc;
            }
            TensorSeries contribution = value;
            for (auto& v : contribution.v) v *= w;
            merge(std::move(term), contribution);
        }
    }

    // Terms whose merged contributions cancelled (e.g. +X - X inside one gene)
    // vanish from the report.
    std::vector<CanonTerm> terms;
    for (auto& a : acc)
        if (dot(a.value, a.value) > 1e-24 * target_norm2) terms.push_back(std::move(a.term));

    std::sort(terms.begin(), terms.end(), [](const CanonTerm& a, const CanonTerm& b) {
        const double ma = std::fabs(a.coefficient), mb = std::fabs(b.coefficient);
        if (ma != mb) return ma > mb;
        return a.structure_key() < b.structure_key();
    });
    return terms;
}

namespace {

/// Fit a subset of genes with the standard pipeline over cached gene values.
FitResult fit_subset(const std::vector<TensorSeries>& gene_values,
                     const std::vector<int>& subset, const EvalContext& ctx, int n_genes) {
    FitResult fr;
    fr.gene_weights.assign(n_genes, 0.0);
    FeatureMatrix fm;
    for (int g : subset) {
        fm.columns.push_back(gene_values[g]);
        fm.gene_index.push_back(g);
    }
    FeatureMatrix reduced = select_independent(fm, ctx, ctx.settings.independence_tol);
    if (reduced.columns.empty()) {
        fr.loss = ctx.settings.penalty;
        fr.reason = PenaltyReason::degenerate;
        return fr;
    }
    auto w = tlr_solve(reduced, ctx);
    if (!w) {
        fr.loss = ctx.settings.penalty;
        fr.reason = PenaltyReason::degenerate;
        return fr;
    }
    fr.status = FitStatus::ok;
    fr.loss = tensor_loss(predict(reduced, *w), ctx);
    fr.weights = *w;
    fr.retained_genes = reduced.gene_index;
    for (std::size_t i = 0; i < w->size(); ++i) fr.gene_weights[reduced.gene_index[i]] = (*w)[i];
    return fr;
}

} // namespace

PruneResult prune_genes(const HostChromosome& c, const LibraryPair& libs,
                        const EvalContext& ctx, const FitResult& full_fit,
                        double prune_threshold) {
    const int n_genes = c.n_genes();
    std::vector<TensorSeries> gene_values;
    for (const auto& g : c.genes) {
        auto v = eval_tree(decode_and_expand(g, libs), *ctx.ds);
        if (!v) throw InternalError("pruning a numerically failing individual");
        gene_values.push_back(std::move(*v));
    }

    std::vector<int> current(n_genes);
    for (int i = 0; i < n_genes; ++i) current[i] = i;

    FitResult current_fit = full_fit;
    while (current.size() > 1) {
        double best_loss = std::numeric_limits<double>::infinity();
        int best_drop = -1;
        FitResult best_fit;
        for (std::size_t k = 0; k < current.size(); ++k) {
            std::vector<int> sub = current;
            sub.erase(sub.begin() + k);
            FitResult f = fit_subset(gene_values, sub, ctx, n_genes);
            if (f.loss < best_loss) {
                best_loss = f.loss;
                best_drop = static_cast<int>(k);
                best_fit = std::move(f);
            }
        }
        if (best_drop < 0 || best_loss - full_fit.loss >= prune_threshold) break;
        current.erase(current.begin() + best_drop);
        current_fit = std::move(best_fit);
    }
    return {std::move(current), std::move(current_fit)};
}

Report build_report(const HostChromosome& best, const FitResult& fit, const LibraryPair& libs,
                    const Dataset& ds, const EvalSettings& settings, double prune_threshold) {
    Report r;
    r.chromosome = serialize_chromosome(best, libs);
    r.full_loss = fit.loss;

    std::ostringstream raw;
    for (int g = 0; g < best.n_genes(); ++g) {
        if (g) raw << "  +  ";
        const double w = g < static_cast<int>(fit.gene_weights.size()) ? fit.gene_weights[g]
                                                                       : 0.0;
        raw << fmt(w) << " * " << expr_to_string(decode_and_expand(best.genes[g], libs));
    }
    r.raw_expression = raw.str();

    if (fit.status != FitStatus::ok) {
        r.pruned_loss = fit.loss;
        r.structure_signature = "(penalized)";
        return r;
    }

    EvalContext ctx(ds, settings);
    std::vector<int> all(best.n_genes());
    for (int i = 0; i < best.n_genes(); ++i) all[i] = i;
    r.full_terms = canonicalize_terms(best, fit, libs, ds, all);

    PruneResult pr = prune_genes(best, libs, ctx, fit, prune_threshold);
    r.pruned_gene_set = pr.genes;
    r.pruned_loss = pr.fit.loss;
    r.pruned_terms = canonicalize_terms(best, pr.fit, libs, ds, pr.genes);

    std::vector<std::string> keys;
    for (const auto& t : r.pruned_terms) keys.push_back(t.structure_key());
    std::sort(keys.begin(), keys.end());
    std::string sig;
    for (const auto& k : keys) sig += (sig.empty() ? "" : "; ") + k;
    r.structure_signature = sig;
    return r;
}

namespace {

std::string equation_string(const std::vector<CanonTerm>& terms,
                            const std::string& target_name) {
    std::string eq = target_name + " =";
    if (terms.empty()) return eq + " (no terms)";
    bool first = true;
    for (const auto& t : terms) {
        const double c = t.coefficient;
        eq += first ? (c < 0 ? " -" : " ") : (c < 0 ? " - " : " + ");
        eq += fmt(std::fabs(c), "%.4g");
        eq += "*" + t.label();
        first = false;
    }
    return eq;
}

json term_to_json(const CanonTerm& t) {
    json j;
    j["coefficient"] = t.coefficient;
    j["label"] = t.label();
    if (t.raw) {
        j["raw"] = *t.raw;
    } else {
        j["scalars"] = t.scalars;
        j["skeleton"] = t.skeleton;
    }
    j["genes"] = t.genes;
    json d = json::array();
    for (int e : t.dim.exp) d.push_back(e);
    j["dim"] = d;
    return j;
}

} // namespace

std::string render_report_text(const Report& r, const std::string& target_name) {
    std::ostringstream os;
    os << "discovered equation (pruned):\n  " << equation_string(r.pruned_terms, target_name)
       << "\n";
    os << "loss: full = " << fmt(r.full_loss, "%.9g")
       << ", pruned = " << fmt(r.pruned_loss, "%.9g") << "\n\n";
    os << "full equation:\n  " << equation_string(r.full_terms, target_name) << "\n\n";
    os << "raw expression:\n  " << r.raw_expression << "\n\n";
    os << "best chromosome:\n  " << r.chromosome << "\n";
    return os.str();
}

std::string render_report_json(const Report& r, const std::string& target_name) {
    json j;
    j["target"] = target_name;
    j["loss_full"] = r.full_loss;
    j["loss_pruned"] = r.pruned_loss;
    j["structure"] = r.structure_signature;
    j["equation_pruned"] = equation_string(r.pruned_terms, target_name);
    j["terms_full"] = json::array();
    for (const auto& t : r.full_terms) j["terms_full"].push_back(term_to_json(t));
    j["terms_pruned"] = json::array();
    for (const auto& t : r.pruned_terms) j["terms_pruned"].push_back(term_to_json(t));
    j["pruned_genes"] = r.pruned_gene_set;
    j["chromosome"] = r.chromosome;
    j["raw_expression"] = r.raw_expression;
    return j.dump(2) + "\n";
}

} // namespace site
