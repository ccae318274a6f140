#include "site/eval.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "site/errors.hpp"

namespace site {

namespace {

bool all_finite(const double* v, int n) {
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(v[i])) return false;
    return true;
}

bool all_finite(const std::vector<double>& v) {
    return all_finite(v.data(), static_cast<int>(v.size()));
}

} // namespace

EvalContext::EvalContext(const Dataset& dataset, EvalSettings s, std::string* warnings)
    : ds(&dataset), target_dim(dataset.target.dim), settings(s) {
    const int nc = dataset.n_dim * dataset.n_dim;
    included.assign(nc, false);
    y_sqnorm.assign(nc, 0.0);
    for (int c = 0; c < nc; ++c) {
        double s2 = 0.0;
        for (double v : dataset.target.comp[c]) s2 += v * v;
        y_sqnorm[c] = s2;
        included[c] = s2 > 0.0;
        if (included[c]) ++n_included;
        if (!included[c] && warnings) {
            *warnings += "target component (" + std::to_string(c / dataset.n_dim + 1) + "," +
                         std::to_string(c % dataset.n_dim + 1) +
                         ") has zero norm; excluded from the loss\n";
        }
    }
    if (n_included == 0)
        throw DataError("target tensor is identically zero; nothing to fit");
}

// ---------------------------------------------------------------------------
// Tree evaluation

std::optional<ScalarSeries> eval_scalar_tree(const ExprTree& t, const Dataset& ds) {
    const int n = ds.n_data;
    if (!t.sym->is_function) {
        if (t.sym->is_rnc) return ScalarSeries(n, t.rnc_value);
        const auto& f = ds.scalars[t.sym->terminal_index];
        return f.values; // copy; terminals are small columns
    }
    auto a = eval_scalar_tree(t.children[0], ds);
    if (!a) return std::nullopt;
    auto b = eval_scalar_tree(t.children[1], ds);
    if (!b) return std::nullopt;
    ScalarSeries r(n);
    switch (t.sym->op) {
        case OpKind::add:
            for (int i = 0; i < n; ++i) r[i] = (*a)[i] + (*b)[i];
            break;
        case OpKind::sub:
            for (int i = 0; i < n; ++i) r[i] = (*a)[i] - (*b)[i];
            break;
        case OpKind::mul:
            for (int i = 0; i < n; ++i) r[i] = (*a)[i] * (*b)[i];
            break;
        case OpKind::div:
            for (int i = 0; i < n; ++i) r[i] = (*a)[i] / (*b)[i];
            break;
        default:
            throw InternalError("tensor operator in scalar expression");
    }
    if (!all_finite(r)) return std::nullopt;
    return r;
}

std::optional<TensorSeries> eval_tree(const ExprTree& t, const Dataset& ds) {
    const int n = ds.n_data;
    const int nd = ds.n_dim;
    if (!t.sym->is_function) {
        const auto& f = ds.tensors[t.sym->terminal_index];
        TensorSeries r(nd, n);
        for (int c = 0; c < nd * nd; ++c)
            std::copy(f.comp[c].begin(), f.comp[c].end(),
                      r.v.begin() + static_cast<std::ptrdiff_t>(c) * n);
        return r;
    }
    if (t.sym->op == OpKind::scalar_mul) {
        auto s = eval_scalar_tree(t.children[0], ds);
        if (!s) return std::nullopt;
        auto x = eval_tree(t.children[1], ds);
        if (!x) return std::nullopt;
        TensorSeries r(nd, n);
        for (int c = 0; c < nd * nd; ++c) {
            const double* xv = x->v.data() + static_cast<std::size_t>(c) * n;
            double* rv = r.v.data() + static_cast<std::size_t>(c) * n;
            for (int i = 0; i < n; ++i) rv[i] = (*s)[i] * xv[i];
        }
        if (!all_finite(r.v.data(), static_cast<int>(r.v.size()))) return std::nullopt;
        return r;
    }
    if (t.sym->op == OpKind::plasmid)
        throw InternalError("eval_tree on unexpanded 'p' node");

    auto a = eval_tree(t.children[0], ds);
    if (!a) return std::nullopt;
    auto b = eval_tree(t.children[1], ds);
    if (!b) return std::nullopt;
    TensorSeries r(nd, n);
    switch (t.sym->op) {
        case OpKind::add:
            for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] = a->v[i] + b->v[i];
            break;
        case OpKind::sub:
            for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] = a->v[i] - b->v[i];
            break;
        case OpKind::inner:
            // C_ij = A_ik B_kj, pointwise over rows.
            for (int i = 0; i < nd; ++i)
                for (int j = 0; j < nd; ++j) {
                    double* rv = r.comp(i, j);
                    for (int k = 0; k < nd; ++k) {
                        const double* av = a->comp(i, k);
                        const double* bv = b->comp(k, j);
                        for (int row = 0; row < n; ++row) rv[row] += av[row] * bv[row];
                    }
                }
            break;
        default:
            throw InternalError("scalar operator in tensor expression");
    }
    if (!all_finite(r.v.data(), static_cast<int>(r.v.size()))) return std::nullopt;
    return r;
}

// ---------------------------------------------------------------------------
// Features, selection, regression

FeatureBuildResult build_features(const HostChromosome& c, const LibraryPair& libs,
                                  const EvalContext& ctx) {
    FeatureBuildResult out;

    std::vector<ExprTree> trees;
    trees.reserve(c.genes.size());
    bool dims_ok = true;
    int nodes = 0;
    for (const auto& g : c.genes) {
        ExprTree t = decode_and_expand(g, libs);
        nodes += count_nodes(t);
        if (dims_ok) {
            DimResult r = infer_dimension(t);
            dims_ok = r.homogeneous && r.dim == ctx.target_dim;
        }
        trees.push_back(std::move(t));
    }
    out.node_count = nodes;
    out.dim_pass = dims_ok;
    if (!dims_ok) {
        out.reason = PenaltyReason::dimension;
        return out;
    }

    FeatureMatrix fm;
    for (int gi = 0; gi < static_cast<int>(trees.size()); ++gi) {
        auto v = eval_tree(trees[gi], *ctx.ds);
        if (!v) {
            out.reason = PenaltyReason::numeric;
            return out;
        }
        fm.columns.push_back(std::move(*v));
        fm.gene_index.push_back(gi);
    }
    out.features = std::move(fm);
    return out;
}

FeatureMatrix select_independent(const FeatureMatrix& features, const EvalContext& ctx,
                                 double tol) {
    const int n = ctx.ds->n_data;
    const int nc = ctx.ds->n_dim * ctx.ds->n_dim;
    const int rows = ctx.n_included * n;

    // Stack the included component blocks, scaled by 1/||y_ij|| to match the
    // geometry of the regression.
    auto stack = [&](const TensorSeries& col) {
        Eigen::VectorXd v(rows);
        int at = 0;
        for (int c = 0; c < nc; ++c) {
            if (!ctx.included[c]) continue;
            const double s = 1.0 / std::sqrt(ctx.y_sqnorm[c]);
            const double* p = col.v.data() + static_cast<std::size_t>(c) * n;
            for (int i = 0; i < n; ++i) v[at++] = p[i] * s;
        }
        return v;
    };

    FeatureMatrix kept;
    std::vector<Eigen::VectorXd> basis; // orthonormal
    for (std::size_t k = 0; k < features.columns.size(); ++k) {
        Eigen::VectorXd v = stack(features.columns[k]);
        const double norm0 = v.norm();
        if (!(norm0 > 0.0)) continue;
        for (const auto& q : basis) v -= q.dot(v) * q;
        // One re-orthogonalization pass keeps the basis clean.
        for (const auto& q : basis) v -= q.dot(v) * q;
        if (v.norm() > tol * norm0) {
            basis.push_back(v / v.norm());
            kept.columns.push_back(features.columns[k]);
            kept.gene_index.push_back(features.gene_index[k]);
        }
    }
    return kept;
}

std::optional<std::vector<double>> tlr_solve(const FeatureMatrix& features,
                                             const EvalContext& ctx) {
    const int k = static_cast<int>(features.columns.size());
    if (k == 0) return std::nullopt;
    const int n = ctx.ds->n_data;
    const int nc = ctx.ds->n_dim * ctx.ds->n_dim;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);

    Eigen::MatrixXd Th(n, k);
    Eigen::VectorXd y(n);
    for (int c = 0; c < nc; ++c) {
        if (!ctx.included[c]) continue;
        for (int col = 0; col < k; ++col)
            Th.col(col) = Eigen::Map<const Eigen::VectorXd>(
                features.columns[col].v.data() + static_cast<std::size_t>(c) * n, n);
        y = Eigen::Map<const Eigen::VectorXd>(ctx.ds->target.comp[c].data(), n);
        const double inv = 1.0 / ctx.y_sqnorm[c];
        A.noalias() += inv * (Th.transpose() * Th);
        b.noalias() += inv * (Th.transpose() * y);
    }

    // Equilibrate columns before the condition estimate and solve.
    Eigen::VectorXd d(k);
    for (int i = 0; i < k; ++i) {
        if (!(A(i, i) > 0.0)) return std::nullopt;
        d[i] = 1.0 / std::sqrt(A(i, i));
    }
    Eigen::MatrixXd As = d.asDiagonal() * A * d.asDiagonal();
    Eigen::VectorXd bs = d.asDiagonal() * b;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(As);
    if (es.info() != Eigen::Success) return std::nullopt;
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmax > 0.0) || lmin <= 0.0 || lmin / lmax < ctx.settings.rcond_min)
        return std::nullopt;

    Eigen::VectorXd ws = es.eigenvectors() *
                         (es.eigenvectors().transpose() * bs).cwiseQuotient(es.eigenvalues());
    Eigen::VectorXd w = d.asDiagonal() * ws;
    if (!w.allFinite()) return std::nullopt;
    return std::vector<double>(w.data(), w.data() + k);
}

TensorSeries predict(const FeatureMatrix& features, const std::vector<double>& weights) {
    if (features.columns.empty()) throw InternalError("predict on empty feature matrix");
    TensorSeries out(features.columns[0].n_dim, features.columns[0].n_data);
    for (std::size_t col = 0; col < features.columns.size(); ++col) {
        const double w = weights[col];
        const auto& v = features.columns[col].v;
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] += w * v[i];
    }
    return out;
}

double tensor_loss(const TensorSeries& yhat, const TensorSeries& y) {
    if (yhat.n_dim != y.n_dim || yhat.n_data != y.n_data)
        throw ArgumentError("tensor_loss: shape mismatch");
    const int nc = y.n_dim * y.n_dim;
    const int n = y.n_data;
    double loss = 0.0;
    for (int c = 0; c < nc; ++c) {
        const double* yv = y.v.data() + static_cast<std::size_t>(c) * n;
        const double* pv = yhat.v.data() + static_cast<std::size_t>(c) * n;
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = pv[i] - yv[i];
            num += d * d;
            den += yv[i] * yv[i];
        }
        if (den > 0.0) loss += num / den;
    }
    return loss;
}

double tensor_loss(const TensorSeries& yhat, const EvalContext& ctx) {
    const int nc = ctx.ds->n_dim * ctx.ds->n_dim;
    const int n = ctx.ds->n_data;
    double loss = 0.0;
    for (int c = 0; c < nc; ++c) {
        if (!ctx.included[c]) continue;
        const double* yv = ctx.ds->target.comp[c].data();
        const double* pv = yhat.v.data() + static_cast<std::size_t>(c) * n;
        double num = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = pv[i] - yv[i];
            num += d * d;
        }
        loss += num / ctx.y_sqnorm[c];
    }
    return loss;
}

FitResult evaluate_individual(const HostChromosome& c, const LibraryPair& libs,
                              const EvalContext& ctx) {
    FitResult fr;
    fr.gene_weights.assign(c.genes.size(), 0.0);

    FeatureBuildResult fb = build_features(c, libs, ctx);
    fr.dim_pass = fb.dim_pass;
    fr.node_count = fb.node_count;

    auto penalize = [&](PenaltyReason why) {
        fr.status = FitStatus::penalized;
        fr.reason = why;
        fr.loss = ctx.settings.penalty;
        return fr;
    };

    if (!fb.features) return penalize(fb.reason);

    FeatureMatrix reduced =
        select_independent(*fb.features, ctx, ctx.settings.independence_tol);
    if (reduced.columns.empty()) return penalize(PenaltyReason::degenerate);

    auto w = tlr_solve(reduced, ctx);
    if (!w) return penalize(PenaltyReason::degenerate);

    TensorSeries yhat = predict(reduced, *w);
    fr.loss = tensor_loss(yhat, ctx);
    if (!std::isfinite(fr.loss)) return penalize(PenaltyReason::numeric);

    fr.status = FitStatus::ok;
    fr.reason = PenaltyReason::none;
    fr.weights = *w;
    fr.retained_genes = reduced.gene_index;
    for (std::size_t i = 0; i < w->size(); ++i) fr.gene_weights[reduced.gene_index[i]] = (*w)[i];
    return fr;
}

FitResult evaluate_individual(const HostChromosome& c, const LibraryPair& libs,
                              const Dataset& ds, const EvalSettings& settings) {
    EvalContext ctx(ds, settings);
    return evaluate_individual(c, libs, ctx);
}

} // namespace site
