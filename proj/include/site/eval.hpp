#pragma once

#include <optional>
#include <string>
#include <vector>

#include "site/data.hpp"
#include "site/dimcheck.hpp"
#include "site/genome.hpp"

namespace site {

/// Per-datapoint values of a tensor expression, component-major:
/// v[(i*n_dim + j)*n_data + row].
struct TensorSeries {
    int n_dim = 0;
    int n_data = 0;
    std::vector<double> v;

    TensorSeries() = default;
    TensorSeries(int nd, int n) : n_dim(nd), n_data(n), v(static_cast<std::size_t>(nd) * nd * n, 0.0) {}

    double* comp(int i, int j) { return v.data() + (static_cast<std::size_t>(i) * n_dim + j) * n_data; }
    const double* comp(int i, int j) const {
        return v.data() + (static_cast<std::size_t>(i) * n_dim + j) * n_data;
    }
};

using ScalarSeries = std::vector<double>;

enum class FitStatus { ok, penalized };
enum class PenaltyReason { none, dimension, degenerate, numeric };

/// Result of evaluating one host individual: TLR weights for the retained
/// genes, the tensor loss, and how it was penalized if it was.
struct FitResult {
    FitStatus status = FitStatus::penalized;
    PenaltyReason reason = PenaltyReason::none;
    double loss = 0.0;
    std::vector<double> weights;       // one per retained column
    std::vector<int> retained_genes;   // provenance: gene index per column
    std::vector<double> gene_weights;  // length n_genes; dropped genes get 0
    bool dim_pass = false;
    int node_count = 0;                // expanded tree nodes (selection tie-break)
};

struct EvalSettings {
    double penalty = 1e12;
    double independence_tol = 1e-10; // column dropped if residual < tol * norm
    double rcond_min = 1e-14;        // normal-matrix reciprocal condition guard
};

/// Precomputed per-dataset state shared by every evaluation: target component
/// vectors, their squared norms, and the mask of components included in the
/// loss (zero-norm components are excluded, warned once via `warn`).
struct EvalContext {
    const Dataset* ds = nullptr;
    DimVector target_dim;
    EvalSettings settings;
    std::vector<bool> included;        // n_dim*n_dim
    std::vector<double> y_sqnorm;      // n_dim*n_dim
    int n_included = 0;

    EvalContext() = default;
    EvalContext(const Dataset& dataset, EvalSettings s, std::string* warnings = nullptr);
};

/// Evaluates a plasmid-expanded tensor tree over the dataset. Returns nullopt
/// when any intermediate is non-finite (division by zero, overflow, NaN).
std::optional<TensorSeries> eval_tree(const ExprTree& t, const Dataset& ds);
std::optional<ScalarSeries> eval_scalar_tree(const ExprTree& t, const Dataset& ds);

/// Feature matrix of one individual: a tensor series per retained gene.
struct FeatureMatrix {
    std::vector<TensorSeries> columns;
    std::vector<int> gene_index;
};

struct FeatureBuildResult {
    std::optional<FeatureMatrix> features; // nullopt => penalized
    PenaltyReason reason = PenaltyReason::none;
    bool dim_pass = false;
    int node_count = 0;
};

/// Dimensional check then per-gene numeric evaluation. A failed check yields
/// the dimension penalty; a non-finite gene yields the numeric penalty.
FeatureBuildResult build_features(const HostChromosome& c, const LibraryPair& libs,
                                  const EvalContext& ctx);

/// Greedy left-to-right retention of linearly independent columns, judged on
/// the included component blocks stacked vertically (scaled by 1/||y_ij||
/// like the regression). Dropped genes keep coefficient 0 downstream.
FeatureMatrix select_independent(const FeatureMatrix& features, const EvalContext& ctx,
                                 double tol);

/// Closed-form tensor linear regression: solves the normal equations
///   (sum_ij Th^T Th / y^T y) w = sum_ij Th^T y / y^T y
/// over included components, with column equilibration and a reciprocal
/// condition guard. Returns nullopt when the system is singular beyond
/// tolerance.
std::optional<std::vector<double>> tlr_solve(const FeatureMatrix& features,
                                             const EvalContext& ctx);

/// sum_ij ||yhat_ij - y_ij||^2 / ||y_ij||^2 over components with nonzero
/// target norm.
double tensor_loss(const TensorSeries& yhat, const TensorSeries& y);
double tensor_loss(const TensorSeries& yhat, const EvalContext& ctx);

TensorSeries predict(const FeatureMatrix& features, const std::vector<double>& weights);

/// Full pipeline: build_features -> select_independent -> tlr_solve ->
/// tensor_loss. Every failure folds into a penalized FitResult carrying the
/// configured penalty constant as loss.
FitResult evaluate_individual(const HostChromosome& c, const LibraryPair& libs,
                              const EvalContext& ctx);

FitResult evaluate_individual(const HostChromosome& c, const LibraryPair& libs,
                              const Dataset& ds, const EvalSettings& settings);

} // namespace site
