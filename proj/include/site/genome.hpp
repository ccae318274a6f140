#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "site/symbols.hpp"

namespace site {

struct PlasmidChromosome;

/// One position of a linear gene. The plasmid pointer is engaged exactly when
/// the code is the tensor realm's 'p' function; it travels with the element
/// through every genetic operation.
struct Element {
    int code = 0;
    double rnc_value = 0.0; // meaningful only when the code is the RNC terminal
    std::unique_ptr<PlasmidChromosome> plasmid;

    Element() = default;
    explicit Element(int c) : code(c) {}
    Element(const Element& other);            // deep copy, plasmid id preserved
    Element& operator=(const Element& other);
    Element(Element&&) noexcept = default;
    Element& operator=(Element&&) noexcept = default;
    ~Element();

    bool operator==(const Element& other) const;
};

/// Fixed-length Karva gene: head of length `head_len` (functions or
/// terminals) followed by a terminals-only tail of length
/// head_len*(a_max-1)+1.
struct Gene {
    std::vector<Element> elems;
    int head_len = 0;

    int size() const { return static_cast<int>(elems.size()); }
    int tail_len() const { return size() - head_len; }
    bool in_head(int pos) const { return pos < head_len; }

    bool operator==(const Gene&) const;
};

/// Single-gene scalar chromosome attached to a 'p' element of a host gene.
struct PlasmidChromosome {
    std::uint64_t id = 0;
    Gene gene;

    bool operator==(const PlasmidChromosome&) const;
};

/// Multi-gene tensor chromosome; genes act as additive features whose
/// weights come from tensor linear regression.
struct HostChromosome {
    std::vector<Gene> genes;

    int n_genes() const { return static_cast<int>(genes.size()); }
    bool operator==(const HostChromosome&) const = default;
};

/// Decoded expression tree. 'p' nodes reference their plasmid until
/// expand_plasmids rewrites them into scalar_mul nodes.
struct ExprTree {
    const SymbolDef* sym = nullptr;
    std::vector<ExprTree> children;
    const PlasmidChromosome* plasmid = nullptr; // 'p' nodes, pre-expansion
    double rnc_value = 0.0;                     // RNC leaves
};

int tail_length(int head_len, int max_arity);

using Rng = std::mt19937_64;

/// Creates fresh random plasmids and hands out stable ids. One per run so
/// that id assignment is reproducible.
struct PlasmidFactory {
    const Library* scalar_lib = nullptr;
    int head_len = 10;
    std::uint64_t next_id = 1;

    std::uint64_t fresh_id() { return next_id++; }
    PlasmidChromosome make(Rng& rng);
};

/// Uniform random gene for a realm: head drawn from functions+terminals,
/// tail from terminals. In the tensor realm every drawn 'p' gets a fresh
/// random plasmid from `factory` (pass nullptr for scalar-realm genes).
Gene random_gene(Realm realm, const Library& lib, int head_len, Rng& rng,
                 PlasmidFactory* factory);

/// Breadth-first (Karva) decoding of the open reading frame.
ExprTree decode_gene(const Gene& g, const Library& lib);

/// Rewrites every p(X) node as scalar_mul(plasmid expression, X), recursively.
/// Throws InternalError on a dangling plasmid link.
ExprTree expand_plasmids(const ExprTree& t, const Library& scalar_lib);

ExprTree decode_and_expand(const Gene& g, const LibraryPair& libs);

/// Number of 'p' elements over all genes, expressed or not.
int count_plasmids(const HostChromosome& c);

int count_nodes(const ExprTree& t);

/// Deep copy with fresh plasmid ids (used when genetic material is duplicated).
Gene clone_gene_fresh_ids(const Gene& g, PlasmidFactory& factory);
HostChromosome clone_fresh_ids(const HostChromosome& c, PlasmidFactory& factory);

/// Structural validity: head/tail composition, tail length formula, plasmid
/// linkage totality (every 'p' has a plasmid, nothing else does, plasmid
/// genes are valid scalar genes without 'p'). Returns a diagnostic or empty.
std::string validate_chromosome(const HostChromosome& c, const LibraryPair& libs,
                                int host_head_len, int plasmid_head_len);

/// Human-readable one-line serialization: gene-by-gene symbol lists with a
/// head|tail separator, then an id-keyed plasmid table.
std::string serialize_chromosome(const HostChromosome& c, const LibraryPair& libs);
std::string serialize_gene(const Gene& g, const Library& lib);

/// Parses the serialize_chromosome format (used by seed-individual files).
HostChromosome parse_chromosome(const std::string& text, const LibraryPair& libs);

std::string expr_to_string(const ExprTree& t);

} // namespace site
