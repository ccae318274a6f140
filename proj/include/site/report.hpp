#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "site/eval.hpp"
#include "site/evolve.hpp"

namespace site {

/// One canonical term of a discovered equation: coefficient times an integer
/// monomial over scalar terminals times a chain of tensor terminals (empty
/// chain = delta_ij). `raw` is set instead when the scalar part could not be
/// matched to any monomial.
struct CanonTerm {
    double coefficient = 0.0;
    std::map<std::string, int> scalars; // terminal name -> exponent
    std::vector<std::string> skeleton;  // tensor terminal chain, inner products
    std::optional<std::string> raw;     // fallback label
    std::vector<int> genes;             // provenance gene indices
    DimVector dim;

    /// Structure key ignoring the coefficient (for modal-structure grouping).
    std::string structure_key() const;
    std::string label() const; // key + nothing else, human form
};

struct Report {
    std::vector<CanonTerm> full_terms;
    std::vector<CanonTerm> pruned_terms;
    double full_loss = 0.0;
    double pruned_loss = 0.0;
    std::vector<int> pruned_gene_set; // genes surviving pruning
    std::string chromosome;           // serialized best individual
    std::string raw_expression;       // weight * expanded expression per gene
    std::string structure_signature;  // sorted structure keys of pruned terms
};

/// Distributes a best individual's expanded genes into canonical terms.
/// Scalar parts are matched data-driven: the term's evaluated series must be
/// proportional (rtol 1e-6) to a candidate monomial x tensor-terminal value,
/// candidates enumerated in ascending complexity under a DV filter. Terms
/// whose value is numerically zero against the target are dropped.
std::vector<CanonTerm> canonicalize_terms(const HostChromosome& c, const FitResult& fit,
                                          const LibraryPair& libs, const Dataset& ds,
                                          const std::vector<int>& gene_subset);

/// Greedy gene pruning with TLR refit: repeatedly removes the gene whose
/// removal costs the least, while the pruned loss stays within
/// `prune_threshold` of the full loss. Returns surviving gene indices and the
/// refitted weights/loss.
struct PruneResult {
    std::vector<int> genes;
    FitResult fit;
};
PruneResult prune_genes(const HostChromosome& c, const LibraryPair& libs,
                        const EvalContext& ctx, const FitResult& full_fit,
                        double prune_threshold);

Report build_report(const HostChromosome& best, const FitResult& fit,
                    const LibraryPair& libs, const Dataset& ds,
                    const EvalSettings& settings, double prune_threshold);

std::string render_report_text(const Report& r, const std::string& target_name);
std::string render_report_json(const Report& r, const std::string& target_name);

} // namespace site
