#pragma once

#include <vector>

#include "site/genome.hpp"

namespace site {

/// Outcome of a dimensional-homogeneity derivation. On failure the offending
/// node is kept for diagnostics; `dim` is only meaningful when homogeneous.
struct DimResult {
    bool homogeneous = true;
    DimVector dim;
    const ExprTree* offending = nullptr;
};

/// Combines the dimension vectors of an operator's operands:
/// add/sub are homogeneous iff a == b; mul, inner product and scalar
/// multiplication sum exponents; div subtracts them.
DimResult dv_combine(OpKind op, const DimVector& a, const DimVector& b);

/// Bottom-up fold of dv_combine over a plasmid-expanded tree; the first
/// inhomogeneous combination short-circuits.
DimResult infer_dimension(const ExprTree& t);

struct GeneCheck {
    bool pass = false;   // homogeneous AND dim == target
    DimResult result;
};

/// Per-gene dimensional check against the target dimension. The individual
/// passes iff every gene passes.
std::vector<GeneCheck> check_individual(const HostChromosome& c,
                                        const LibraryPair& libs,
                                        const DimVector& target_dim);

bool gene_passes(const Gene& g, const LibraryPair& libs, const DimVector& target_dim);

} // namespace site
