#include <doctest.h>

#include "site/benchmarks.hpp"
#include "site/cli.hpp"
#include "site/report.hpp"
#include "testutil.hpp"

using namespace site;
using namespace testutil;

namespace {

HostChromosome maxwell_chromosome(const LibraryPair& libs) {
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

std::map<std::string, double> term_map(const std::vector<CanonTerm>& terms) {
    std::map<std::string, double> m;
    for (const auto& t : terms) m[t.structure_key()] = t.coefficient;
    return m;
}

} // namespace

TEST_CASE("canonicalize_terms: exact maxwell chromosome maps to the 4 named terms") {
    Dataset ds = gen_maxwell(60, {0.0, 17});
    LibraryPair libs = tiny_libs(ds);
    HostChromosome c = maxwell_chromosome(libs);
    FitResult fit = evaluate_individual(c, libs, ds, {});
    REQUIRE(fit.status == FitStatus::ok);

    std::vector<int> all{0, 1, 2, 3};
    auto terms = term_map(canonicalize_terms(c, fit, libs, ds, all));
    REQUIRE(terms.size() == 4);
    CHECK(terms.at("eps0*E_iE_j") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(terms.at("E_kk*eps0*delta") == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(terms.at("mu0^-1*B_iB_j") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(terms.at("B_kk*mu0^-1*delta") == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("canonicalize_terms: equivalent algebraic forms share a label") {
    // (E_iE_j . E_iE_j) has the same value as E_kk * E_iE_j: the data-driven
    // matcher must map both onto the simpler canonical term.
    Dataset ds = gen_maxwell(40, {0.0, 23});
    // Target chosen so the gene is dimensionally admissible.
    for (int c = 0; c < 9; ++c)
        for (int r = 0; r < 40; ++r)
            ds.target.comp[c][r] = ds.tensors[0].comp[c][r] * ds.scalars[0].values[r];
    ds.target.dim = dv(4, 4, -12, -4);

    LibraryPair libs = tiny_libs(ds);
    GeneBuilder gb{&libs, 5};
    HostChromosome c;
    c.genes.push_back(gb.tensor_gene({"inner", "E_iE_j", "E_iE_j"}, "delta"));
    FitResult fit = evaluate_individual(c, libs, ds, {});
    REQUIRE(fit.status == FitStatus::ok);
    CHECK(fit.loss < 1e-18);

    auto terms = canonicalize_terms(c, fit, libs, ds, {0});
    REQUIRE(terms.size() == 1);
    CHECK(terms[0].structure_key() == "E_kk*E_iE_j");
    CHECK(terms[0].coefficient == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("prune_genes drops zero-weight duplicates within the threshold") {
    Dataset ds = gen_maxwell(60, {0.0, 29});
    LibraryPair libs = tiny_libs(ds);
    HostChromosome c = maxwell_chromosome(libs);
    // Gene 4 duplicates gene 0 exactly: the duplicate column is dropped by
    // the independence selection and pruning must remove it.
    c.genes.push_back(c.genes[0]);

    EvalContext ctx(ds, {});
    FitResult fit = evaluate_individual(c, libs, ctx);
    REQUIRE(fit.status == FitStatus::ok);
    CHECK(fit.gene_weights[4] == 0.0);

    PruneResult pr = prune_genes(c, libs, ctx, fit, 1e-3);
    CHECK(pr.genes.size() == 4);
    CHECK(std::fabs(pr.fit.loss - fit.loss) < 1e-3);
    // exactly one of the two identical genes survives
    const bool has0 = std::find(pr.genes.begin(), pr.genes.end(), 0) != pr.genes.end();
    const bool has4 = std::find(pr.genes.begin(), pr.genes.end(), 4) != pr.genes.end();
    CHECK(has0 != has4);
}

TEST_CASE("build_report: structure signature, equation text, determinism") {
    Dataset ds = gen_maxwell(60, {0.0, 31});
    LibraryPair libs = tiny_libs(ds);
    HostChromosome c = maxwell_chromosome(libs);
    FitResult fit = evaluate_individual(c, libs, ds, {});

    Report r1 = build_report(c, fit, libs, ds, {}, 1e-3);
    Report r2 = build_report(c, fit, libs, ds, {}, 1e-3);
    CHECK(render_report_text(r1, "T_ij") == render_report_text(r2, "T_ij"));
    CHECK(render_report_json(r1, "T_ij") == render_report_json(r2, "T_ij"));

    CHECK(r1.structure_signature ==
          "B_kk*mu0^-1*delta; E_kk*eps0*delta; eps0*E_iE_j; mu0^-1*B_iB_j");
    CHECK(r1.pruned_terms.size() == 4);
    CHECK(std::fabs(r1.pruned_loss - r1.full_loss) < 1e-3);

    std::string text = render_report_text(r1, "T_ij");
    CHECK(text.find("T_ij =") != std::string::npos);
    CHECK(text.find("eps0*E_iE_j") != std::string::npos);
}

TEST_CASE("aggregate_reports: modal structure and coefficient statistics") {
    auto mk = [](const std::string& key, double coef, double loss) {
        Report r;
        CanonTerm t;
        t.coefficient = coef;
        t.raw = key; // raw label keeps the key verbatim
        r.pruned_terms.push_back(t);
        r.structure_signature = "raw:" + key;
        r.pruned_loss = loss;
        return r;
    };

    std::vector<Report> reports{mk("x", 1.0, 0.1), mk("x", 1.2, 0.2), mk("y", 9.0, 0.3)};
    BatchAggregate a = aggregate_reports(reports);
    CHECK(a.n_runs == 3);
    CHECK(a.modal_structure == "raw:x");
    CHECK(a.modal_count == 2);
    REQUIRE(a.term_stats.size() == 1);
    CHECK(std::get<1>(a.term_stats[0]) == doctest::Approx(1.1));
    CHECK(std::get<2>(a.term_stats[0]) == doctest::Approx(std::sqrt(0.02)));

    // Single run: std is zero.
    BatchAggregate one = aggregate_reports({mk("x", 2.0, 0.0)});
    CHECK(std::get<2>(one.term_stats[0]) == 0.0);
    CHECK(one.modal_count == 1);

    std::string txt = render_aggregate_text(a);
    CHECK(txt.find("modal structure (2/3)") != std::string::npos);
}
