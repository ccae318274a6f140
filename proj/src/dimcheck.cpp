#include "site/dimcheck.hpp"

#include "site/errors.hpp"

namespace site {

DimResult dv_combine(OpKind op, const DimVector& a, const DimVector& b) {
    DimResult r;
    switch (op) {
        case OpKind::add:
        case OpKind::sub:
            if (a == b) {
                r.dim = a;
            } else {
                r.homogeneous = false;
            }
            break;
        case OpKind::mul:
        case OpKind::inner:
        case OpKind::scalar_mul:
            r.dim = a + b;
            break;
        case OpKind::div:
            r.dim = a - b;
            break;
        case OpKind::plasmid:
            throw InternalError("dv_combine on unexpanded 'p' node");
    }
    return r;
}

DimResult infer_dimension(const ExprTree& t) {
    if (!t.sym->is_function) {
        DimResult r;
        r.dim = t.sym->dim; // RNC terminals carry the zero vector
        return r;
    }
    DimResult left = infer_dimension(t.children[0]);
    if (!left.homogeneous) return left;
    if (t.sym->arity == 1) {
        // Only 'p' is unary and it must have been expanded away.
        throw InternalError("unary node '" + t.sym->id + "' in dimensional inference");
    }
    DimResult right = infer_dimension(t.children[1]);
    if (!right.homogeneous) return right;
    DimResult r = dv_combine(t.sym->op, left.dim, right.dim);
    if (!r.homogeneous) r.offending = &t;
    return r;
}

std::vector<GeneCheck> check_individual(const HostChromosome& c, const LibraryPair& libs,
                                        const DimVector& target_dim) {
    std::vector<GeneCheck> out;
    out.reserve(c.genes.size());
    for (const auto& g : c.genes) {
        GeneCheck gc;
        ExprTree t = decode_and_expand(g, libs);
        gc.result = infer_dimension(t);
        gc.result.offending = nullptr; // tree is local; keep only the verdict
        gc.pass = gc.result.homogeneous && gc.result.dim == target_dim;
        out.push_back(gc);
    }
    return out;
}

bool gene_passes(const Gene& g, const LibraryPair& libs, const DimVector& target_dim) {
    ExprTree t = decode_and_expand(g, libs);
    DimResult r = infer_dimension(t);
    return r.homogeneous && r.dim == target_dim;
}

} // namespace site
