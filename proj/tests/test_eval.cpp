#include <doctest.h>

#include <Eigen/Dense>

#include "site/benchmarks.hpp"
#include "site/eval.hpp"
#include "testutil.hpp"

using namespace site;
using namespace testutil;

namespace {

/// The four exact Maxwell genes (eps0 E_iE_j, eps0 E_kk delta, B_iB_j/mu0,
/// B_kk delta/mu0) as a host chromosome over the gen_maxwell library.
HostChromosome maxwell_solution(const LibraryPair& libs) {
    GeneBuilder gb{&libs, 5};
    HostChromosome c;
    Gene g1 = gb.tensor_gene({"p", "E_iE_j"}, "delta");
    gb.attach_plasmid(g1, 0, {"eps0"}, "eps0", 10);
    c.genes.push_back(std::move(g1));
    Gene g2 = gb.tensor_gene({"p", "delta"}, "delta");
    gb.attach_plasmid(g2, 0, {"mul", "eps0", "E_kk"}, "eps0", 10);
    c.genes.push_back(std::move(g2));
    Gene g3 = gb.tensor_gene({"p", "B_iB_j"}, "delta");
    gb.attach_plasmid(g3, 0, {"div", "B_kk", "mul", "mu0", "B_kk"}, "B_kk", 10);
    c.genes.push_back(std::move(g3));
    Gene g4 = gb.tensor_gene({"p", "delta"}, "delta");
    gb.attach_plasmid(g4, 0, {"div", "B_kk", "mu0"}, "B_kk", 10);
    c.genes.push_back(std::move(g4));
    return c;
}

TensorSeries from_field(const TensorField& f) {
    TensorSeries s(f.n_dim, static_cast<int>(f.comp[0].size()));
    for (int c = 0; c < f.n_dim * f.n_dim; ++c)
        std::copy(f.comp[c].begin(), f.comp[c].end(),
                  s.v.begin() + static_cast<std::size_t>(c) * s.n_data);
    return s;
}

} // namespace

TEST_CASE("eval_tree: identity, outer products, scalar arithmetic") {
    Dataset ds = gen_maxwell(10, {0.0, 2});
    LibraryPair libs = tiny_libs(ds);
    GeneBuilder gb{&libs, 5};

    // delta evaluates to the identity at every row.
    Gene gd = gb.tensor_gene({"delta"}, "delta");
    auto vd = eval_tree(decode_and_expand(gd, libs), ds);
    REQUIRE(vd);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int r = 0; r < ds.n_data; ++r)
                CHECK(vd->comp(i, j)[r] == (i == j ? 1.0 : 0.0));

    // eps0 * E_iE_j at a row where E = (E0, E0, E0): every entry eps0 E0^2.
    Dataset one;
    one.n_data = 1;
    one.n_dim = 3;
    {
        auto E = maxwell_E(0.5, 0.0, 0.5);
        auto B = maxwell_B(0.5, 0.0, 0.5);
        CHECK(E[0] == doctest::Approx(constants::maxwell_E0));
        CHECK(E[1] == doctest::Approx(constants::maxwell_E0));
        CHECK(B[0] == doctest::Approx(0.0));
        TensorField EE;
        EE.name = "E_iE_j";
        EE.n_dim = 3;
        EE.dim = dv(2, 2, -6, -2);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) EE.comp.push_back({E[i] * E[j]});
        one.tensors.push_back(EE);
        TensorField delta;
        delta.name = "delta";
        delta.n_dim = 3;
        delta.synthetic_identity = true;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) delta.comp.push_back({i == j ? 1.0 : 0.0});
        one.tensors.push_back(delta);
        one.scalars.push_back(
            {"eps0", {constants::eps0}, dv(-1, -3, 4, 2)});
        one.target = EE;
        one.target.name = "T";
    }
    LibraryPair libs1 = tiny_libs(one);
    GeneBuilder gb1{&libs1, 5};
    Gene ge = gb1.tensor_gene({"p", "E_iE_j"}, "delta");
    gb1.attach_plasmid(ge, 0, {"eps0"}, "eps0", 10);
    auto ve = eval_tree(decode_and_expand(ge, libs1), one);
    REQUIRE(ve);
    const double want = constants::eps0 * constants::maxwell_E0 * constants::maxwell_E0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(ve->comp(i, j)[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("eval_scalar_tree: mu + (mu x p) gives mu(1+p)") {
    Dataset ds = gen_newtonian_field(7, false, {0.0, 3});
    LibraryPair libs = tiny_libs(ds);
    GeneBuilder gb{&libs, 5};
    Gene g = gb.scalar_gene({"add", "mu", "mul", "mu", "p"}, "mu", 10);
    auto v = eval_scalar_tree(decode_gene(g, libs.scalar), ds);
    REQUIRE(v);
    const auto& mu = *ds.find_scalar("mu");
    const auto& p = *ds.find_scalar("p");
    for (int r = 0; r < ds.n_data; ++r)
        CHECK((*v)[r] == doctest::Approx(mu.values[r] * (1.0 + p.values[r])));
}

TEST_CASE("eval_tree: inner product is the pointwise matrix product") {
    Dataset ds = tiny_dataset(2, 5);
    LibraryPair libs = tiny_libs(ds);
    GeneBuilder gb{&libs, 3};
    Gene g = gb.tensor_gene({"inner", "A", "A"}, "A");
    auto v = eval_tree(decode_and_expand(g, libs), ds);
    REQUIRE(v);
    const auto& A = ds.tensors[0];
    for (int r = 0; r < ds.n_data; ++r)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double want = 0.0;
                for (int k = 0; k < 2; ++k) want += A.at(i, k)[r] * A.at(k, j)[r];
                CHECK(v->comp(i, j)[r] == doctest::Approx(want).epsilon(1e-14));
            }
}

TEST_CASE("eval guards: division by zero and overflow poison the tree") {
    Dataset ds = tiny_dataset(2, 4);
    ds.scalars[0].values[2] = 0.0; // a has a zero row
    ds.scalars[1].values.assign(4, 1e308);
    LibraryPair libs = tiny_libs(ds);
    GeneBuilder gb{&libs, 5};

    Gene g = gb.tensor_gene({"p", "A"}, "A");
    gb.attach_plasmid(g, 0, {"div", "b", "a"}, "b", 10); // b / a, a hits 0
    CHECK_FALSE(eval_tree(decode_and_expand(g, libs), ds).has_value());

    Gene g2 = gb.tensor_gene({"p", "A"}, "A");
    gb.attach_plasmid(g2, 0, {"mul", "b", "b"}, "b", 10); // 1e308^2 overflows
    CHECK_FALSE(eval_tree(decode_and_expand(g2, libs), ds).has_value());
}

TEST_CASE("build_features: penalties and shapes") {
    Dataset ds = gen_maxwell(20, {0.0, 4});
    LibraryPair libs = tiny_libs(ds);
    EvalContext ctx(ds, {});
    GeneBuilder gb{&libs, 5};

    FeatureBuildResult ok = build_features(maxwell_solution(libs), libs, ctx);
    REQUIRE(ok.features);
    CHECK(ok.dim_pass);
    CHECK(ok.features->columns.size() == 4);
    CHECK(ok.features->columns[0].n_data == 20);

    HostChromosome bad;
    bad.genes.push_back(gb.tensor_gene({"delta"}, "delta")); // wrong dimension
    FeatureBuildResult dim = build_features(bad, libs, ctx);
    CHECK_FALSE(dim.features);
    CHECK(dim.reason == PenaltyReason::dimension);
    CHECK_FALSE(dim.dim_pass);
}

TEST_CASE("select_independent: duplicates dropped, zero column degenerate") {
    Dataset ds = tiny_dataset(2, 30);
    EvalContext ctx(ds, {});
    const int n = ds.n_data;

    TensorSeries f(2, n), g(2, n), zero(2, n);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto& v : f.v) v = u(rng);
    for (auto& v : g.v) v = u(rng);
    TensorSeries f2 = f;
    for (auto& v : f2.v) v *= 2.0;

    FeatureMatrix fm;
    fm.columns = {f, f2, g};
    fm.gene_index = {0, 1, 2};
    FeatureMatrix kept = select_independent(fm, ctx, 1e-10);
    REQUIRE(kept.columns.size() == 2);
    CHECK(kept.gene_index == std::vector<int>{0, 2});

    FeatureMatrix zm;
    zm.columns = {zero};
    zm.gene_index = {0};
    CHECK(select_independent(zm, ctx, 1e-10).columns.empty());

    // The four maxwell features are mutually independent: rank oracle via
    // full-pivot LU on the stacked matrix.
    Dataset mx = gen_maxwell(40, {0.0, 6});
    LibraryPair libs = tiny_libs(mx);
    EvalContext mctx(mx, {});
    FeatureBuildResult fb = build_features(maxwell_solution(libs), libs, mctx);
    REQUIRE(fb.features);
    Eigen::MatrixXd stacked(9 * 40, 4);
    for (int col = 0; col < 4; ++col)
        for (int c = 0; c < 9; ++c)
            for (int r = 0; r < 40; ++r)
                stacked(c * 40 + r, col) = fb.features->columns[col].v[c * 40 + r];
    CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(stacked).rank() == 4);
    CHECK(select_independent(*fb.features, mctx, 1e-10).columns.size() == 4);
}

TEST_CASE("tlr_solve: exact cases and oracle agreement") {
    Dataset ds = gen_maxwell(60, {0.0, 8});
    LibraryPair libs = tiny_libs(ds);
    EvalContext ctx(ds, {});

    // Single column equal to the target: w = [1], loss 0.
    FeatureMatrix fm;
    fm.columns = {from_field(ds.target)};
    fm.gene_index = {0};
    auto w1 = tlr_solve(fm, ctx);
    REQUIRE(w1);
    CHECK((*w1)[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tensor_loss(predict(fm, *w1), ctx) < 1e-18);

    // The four maxwell features fit with weights (1, -0.5, 1, -0.5).
    FeatureBuildResult fb = build_features(maxwell_solution(libs), libs, ctx);
    REQUIRE(fb.features);
    auto w4 = tlr_solve(*fb.features, ctx);
    REQUIRE(w4);
    CHECK((*w4)[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((*w4)[1] == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK((*w4)[2] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((*w4)[3] == doctest::Approx(-0.5).epsilon(1e-9));

    // Random 3-column, 50-row, 2x2 instance against the iterative oracle.
    std::mt19937_64 rng(13);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Dataset rd = tiny_dataset(2, 50);
    for (auto& c : rd.target.comp)
        for (auto& v : c) v = gauss(rng);
    EvalContext rctx(rd, {});
    FeatureMatrix rfm;
    for (int col = 0; col < 3; ++col) {
        TensorSeries s(2, 50);
        for (auto& v : s.v) v = gauss(rng);
        rfm.columns.push_back(std::move(s));
        rfm.gene_index.push_back(col);
    }
    auto wr = tlr_solve(rfm, rctx);
    REQUIRE(wr);
    const double loss_closed = tensor_loss(predict(rfm, *wr), rctx);
    std::vector<double> wo = tlr_oracle(rfm, rctx);
    const double loss_oracle = tensor_loss(predict(rfm, wo), rctx);
    CHECK(std::fabs(loss_closed - loss_oracle) < 1e-8);
}

TEST_CASE("tensor_loss: values and invariants") {
    TensorSeries y(2, 2), yhat(2, 2);
    y.v = {1, 0, 2, 1, 3, -1, 0.5, 0.25}; // 4 components x 2 rows
    yhat = y;
    CHECK(tensor_loss(yhat, y) == 0.0);

    TensorSeries zero(2, 2);
    CHECK(tensor_loss(zero, y) == 4.0); // n_dim^2 exactly

    // y_11 = (1,0), yhat_11 = (0,0), everything else exact: loss 1.
    TensorSeries y2(2, 2), p2(2, 2);
    y2.v = {1, 0, 5, 5, 5, 5, 5, 5};
    p2.v = {0, 0, 5, 5, 5, 5, 5, 5};
    CHECK(tensor_loss(p2, y2) == doctest::Approx(1.0));

    // Scale invariance in both arguments.
    TensorSeries cy = y, cyh = yhat;
    cyh.v[3] += 0.5; // make it a nonzero residual case
    double l1 = tensor_loss(cyh, cy);
    for (auto& v : cy.v) v *= 3.7;
    for (auto& v : cyh.v) v *= 3.7;
    CHECK(tensor_loss(cyh, cy) == doctest::Approx(l1).epsilon(1e-12));
}

TEST_CASE("evaluate_individual: pipeline, penalties, optimality") {
    Dataset ds = gen_maxwell(50, {0.0, 12});
    LibraryPair libs = tiny_libs(ds);
    EvalContext ctx(ds, {});
    GeneBuilder gb{&libs, 5};

    HostChromosome good = maxwell_solution(libs);
    FitResult fr = evaluate_individual(good, libs, ctx);
    CHECK(fr.status == FitStatus::ok);
    CHECK(fr.loss < 1e-20);
    CHECK(fr.dim_pass);
    REQUIRE(fr.weights.size() == 4);
    CHECK(fr.gene_weights[0] == doctest::Approx(1.0).epsilon(1e-9));

    // First-order optimality: nudging any weight never lowers the loss.
    Dataset noisy = gen_maxwell(50, {0.1, 12});
    EvalContext nctx(noisy, {});
    FeatureBuildResult nfb = build_features(good, libs, nctx);
    REQUIRE(nfb.features);
    FeatureMatrix nred = select_independent(*nfb.features, nctx, 1e-10);
    auto nw = tlr_solve(nred, nctx);
    REQUIRE(nw);
    const double base = tensor_loss(predict(nred, *nw), nctx);
    for (std::size_t k = 0; k < nw->size(); ++k) {
        for (double s : {-1.0, 1.0}) {
            auto w = *nw;
            w[k] += s * 1e-4 * std::fabs(w[k]);
            CHECK(tensor_loss(predict(nred, w), nctx) >= base);
        }
    }

    // Column scaling covariance: scaling a feature column by c divides its
    // weight by c and leaves the loss unchanged.
    FeatureMatrix scaled = nred;
    for (auto& v : scaled.columns[2].v) v *= 8.0;
    auto sw = tlr_solve(scaled, nctx);
    REQUIRE(sw);
    CHECK((*sw)[2] == doctest::Approx((*nw)[2] / 8.0).epsilon(1e-8));
    CHECK(tensor_loss(predict(scaled, *sw), nctx) == doctest::Approx(base).epsilon(1e-9));

    // Target scaling: y -> c y multiplies every weight by c, same loss.
    Dataset ty = noisy;
    for (auto& c : ty.target.comp)
        for (auto& v : c) v *= 2.5;
    EvalContext tctx(ty, {});
    auto tw = tlr_solve(nred, tctx);
    REQUIRE(tw);
    for (std::size_t k = 0; k < tw->size(); ++k)
        CHECK((*tw)[k] == doctest::Approx(2.5 * (*nw)[k]).epsilon(1e-8));
    CHECK(tensor_loss(predict(nred, *tw), tctx) == doctest::Approx(base).epsilon(1e-9));

    // Penalty paths.
    HostChromosome dim_bad;
    dim_bad.genes.push_back(gb.tensor_gene({"delta"}, "delta"));
    FitResult fd = evaluate_individual(dim_bad, libs, ctx);
    CHECK(fd.status == FitStatus::penalized);
    CHECK(fd.reason == PenaltyReason::dimension);
    CHECK(fd.loss == ctx.settings.penalty);

    Dataset zds = gen_maxwell(10, {0.0, 3});
    zds.scalars[0].values[4] = 0.0; // E_kk zero at one row
    LibraryPair zlibs = tiny_libs(zds);
    EvalContext zctx(zds, {});
    GeneBuilder zgb{&zlibs, 5};
    HostChromosome div0;
    Gene zg = zgb.tensor_gene({"p", "E_iE_j"}, "delta");
    // eps0 * (E_kk / E_kk): stress dimension, 0/0 at the zeroed row.
    zgb.attach_plasmid(zg, 0, {"mul", "eps0", "div", "E_kk", "E_kk"}, "E_kk", 10);
    div0.genes.push_back(std::move(zg));
    FitResult fz = evaluate_individual(div0, zlibs, zctx);
    CHECK(fz.status == FitStatus::penalized);
    CHECK(fz.reason == PenaltyReason::numeric);
}

TEST_CASE("evaluate_individual: exact span gives near-zero loss (random)") {
    // When the target lies in the span of the features the closed-form fit
    // drives the relative loss to numerical zero.
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Dataset ds = tiny_dataset(3, 40, 5);
    // target = 1.5*A - 0.25*delta(scaled rows) is inside span{A, delta}.
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int r = 0; r < 40; ++r)
                ds.target.comp[i * 3 + j][r] =
                    1.5 * ds.tensors[0].comp[i * 3 + j][r] + (i == j ? -0.25 : 0.0) +
                    0.0 * u(rng);
    EvalContext ctx(ds, {});
    FeatureMatrix fm;
    fm.columns = {from_field(ds.tensors[0]), from_field(ds.tensors[1])};
    fm.gene_index = {0, 1};
    auto w = tlr_solve(fm, ctx);
    REQUIRE(w);
    CHECK(tensor_loss(predict(fm, *w), ctx) < 1e-18);
}

TEST_CASE("zero-norm target components are excluded with a warning") {
    Dataset ds = gen_reynolds_decay(30); // off-diagonal target components are 0
    std::string warnings;
    EvalContext ctx(ds, {}, &warnings);
    CHECK(ctx.n_included == 3);
    CHECK(warnings.find("zero norm") != std::string::npos);

    // Loss of the zero predictor over included components only.
    TensorSeries zero(3, 30);
    CHECK(tensor_loss(zero, ctx) == 3.0);
}
