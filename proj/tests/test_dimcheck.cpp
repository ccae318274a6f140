#include <doctest.h>

#include "site/benchmarks.hpp"
#include "site/dimcheck.hpp"
#include "testutil.hpp"

using namespace site;
using namespace testutil;

namespace {

const DimVector kDvE = dv(1, 1, -3, -1);     // electric field, V/m
const DimVector kDvB = dv(1, 0, -2, -1);     // magnetic field, T
const DimVector kDvEps0 = dv(-1, -3, 4, 2);  // vacuum permittivity
const DimVector kDvStress = dv(1, -1, -2);   // Pa

} // namespace

TEST_CASE("dv_combine rules") {
    // E and B have different dimensions: their sum is inhomogeneous.
    DimResult r = dv_combine(OpKind::add, kDvE, kDvB);
    CHECK_FALSE(r.homogeneous);

    r = dv_combine(OpKind::add, kDvE, kDvE);
    CHECK(r.homogeneous);
    CHECK(r.dim == kDvE);

    r = dv_combine(OpKind::mul, dimensionless(), kDvB);
    CHECK(r.homogeneous);
    CHECK(r.dim == kDvB);

    r = dv_combine(OpKind::div, kDvEps0, kDvEps0);
    CHECK(r.homogeneous);
    CHECK(r.dim.is_dimensionless());

    // mul commutes; div with itself is the zero vector (property sample).
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> e(-3, 3);
    for (int i = 0; i < 200; ++i) {
        DimVector a, b;
        for (int k = 0; k < 7; ++k) {
            a[k] = e(rng);
            b[k] = e(rng);
        }
        CHECK(dv_combine(OpKind::mul, a, b).dim == dv_combine(OpKind::mul, b, a).dim);
        CHECK(dv_combine(OpKind::div, a, a).dim.is_dimensionless());
    }
}

TEST_CASE("infer_dimension: maxwell hand cases") {
    Dataset ds = gen_maxwell(3, {0.0, 1});
    LibraryPair libs = tiny_libs(ds);
    GeneBuilder gb{&libs, 5};

    // eps0 * E_iE_j has the stress dimension.
    Gene g = gb.tensor_gene({"p", "E_iE_j"}, "delta");
    gb.attach_plasmid(g, 0, {"eps0"}, "eps0", 10);
    DimResult r = infer_dimension(decode_and_expand(g, libs));
    CHECK(r.homogeneous);
    CHECK(r.dim == kDvStress);

    // delta + delta stays dimensionless.
    Gene g2 = gb.tensor_gene({"add", "delta", "delta"}, "delta");
    r = infer_dimension(decode_and_expand(g2, libs));
    CHECK(r.homogeneous);
    CHECK(r.dim.is_dimensionless());

    // E_iE_j + B_iB_j is inhomogeneous, with the offending add node reported.
    Gene g3 = gb.tensor_gene({"add", "E_iE_j", "B_iB_j"}, "delta");
    ExprTree t3 = decode_and_expand(g3, libs);
    r = infer_dimension(t3);
    CHECK_FALSE(r.homogeneous);
    CHECK(r.offending == &t3);
}

TEST_CASE("check_individual: the four maxwell terms pass, mismatches fail") {
    Dataset ds = gen_maxwell(3, {0.0, 1});
    LibraryPair libs = tiny_libs(ds);
    GeneBuilder gb{&libs, 5};

    HostChromosome c;
    {
        Gene g = gb.tensor_gene({"p", "E_iE_j"}, "delta"); // eps0 E_iE_j
        gb.attach_plasmid(g, 0, {"eps0"}, "eps0", 10);
        c.genes.push_back(std::move(g));
    }
    {
        Gene g = gb.tensor_gene({"p", "delta"}, "delta"); // eps0 E_kk delta
        gb.attach_plasmid(g, 0, {"mul", "eps0", "E_kk"}, "eps0", 10);
        c.genes.push_back(std::move(g));
    }
    {
        Gene g = gb.tensor_gene({"p", "B_iB_j"}, "delta"); // B_iB_j / mu0
        gb.attach_plasmid(g, 0, {"div", "B_kk", "mul", "mu0", "B_kk"}, "B_kk", 10);
        c.genes.push_back(std::move(g));
    }
    {
        Gene g = gb.tensor_gene({"p", "delta"}, "delta"); // B_kk delta / mu0
        gb.attach_plasmid(g, 0, {"div", "B_kk", "mu0"}, "B_kk", 10);
        c.genes.push_back(std::move(g));
    }

    auto checks = check_individual(c, libs, ds.target.dim);
    REQUIRE(checks.size() == 4);
    for (const auto& gc : checks) {
        CHECK(gc.pass);
        CHECK(gc.result.dim == kDvStress);
    }

    // A bare delta gene is homogeneous but dimensionally wrong for stress.
    HostChromosome bare;
    bare.genes.push_back(gb.tensor_gene({"delta"}, "delta"));
    auto bc = check_individual(bare, libs, ds.target.dim);
    CHECK(bc[0].result.homogeneous);
    CHECK_FALSE(bc[0].pass);

    // E_iE_j + delta fails with inhomogeneous status.
    HostChromosome mixed;
    mixed.genes.push_back(gb.tensor_gene({"add", "E_iE_j", "delta"}, "delta"));
    auto mc = check_individual(mixed, libs, ds.target.dim);
    CHECK_FALSE(mc[0].pass);
    CHECK_FALSE(mc[0].result.homogeneous);
}

TEST_CASE("check depends on dimension vectors only, never on data") {
    Dataset ds = gen_maxwell(5, {0.0, 1});
    Dataset scaled = ds;
    for (auto& t : scaled.tensors)
        for (auto& comp : t.comp)
            for (auto& v : comp) v *= 1e6;
    for (auto& s : scaled.scalars)
        for (auto& v : s.values) v *= 1e-3;

    LibraryPair libs = tiny_libs(ds);
    LibraryPair libs2 = tiny_libs(scaled);
    Rng rng(17);
    PlasmidFactory pf{&libs.scalar, 10, 1};
    for (int i = 0; i < 300; ++i) {
        HostChromosome c;
        c.genes.push_back(random_gene(Realm::tensor, libs.tensor, 5, rng, &pf));
        auto r1 = check_individual(c, libs, ds.target.dim);
        auto r2 = check_individual(c, libs2, scaled.target.dim);
        CHECK(r1[0].pass == r2[0].pass);
        CHECK(r1[0].result.homogeneous == r2[0].result.homogeneous);
    }
}

TEST_CASE("infer_dimension invariant under re-association of products") {
    Dataset ds = tiny_dataset();
    LibraryPair libs = tiny_libs(ds);
    GeneBuilder gb{&libs, 7};

    // (A . A) . A vs A . (A . A)
    Gene left = gb.tensor_gene({"inner", "inner", "A", "A", "A"}, "A");
    Gene right = gb.tensor_gene({"inner", "A", "inner", "A", "A"}, "A");
    DimResult rl = infer_dimension(decode_and_expand(left, libs));
    DimResult rr = infer_dimension(decode_and_expand(right, libs));
    REQUIRE(rl.homogeneous);
    REQUIRE(rr.homogeneous);
    CHECK(rl.dim == rr.dim);
}

TEST_CASE("per-gene check equals whole-sum check when all genes pass") {
    Dataset ds = gen_maxwell(3, {0.0, 1});
    LibraryPair libs = tiny_libs(ds);
    Rng rng(23);
    PlasmidFactory pf{&libs.scalar, 10, 1};

    std::vector<Gene> passing;
    for (int i = 0; i < 60000 && passing.size() < 12; ++i) {
        Gene g = random_gene(Realm::tensor, libs.tensor, 5, rng, &pf);
        if (gene_passes(g, libs, ds.target.dim)) passing.push_back(std::move(g));
    }
    REQUIRE(passing.size() >= 2);
    int found = 0;
    for (std::size_t i = 0; i + 1 < passing.size(); ++i) {
        const Gene& a = passing[i];
        const Gene& b = passing[i + 1];
        ++found;
        // Linking the two passing genes by addition stays homogeneous with
        // the same dimension.
        ExprTree ta = decode_and_expand(a, libs);
        ExprTree tb = decode_and_expand(b, libs);
        static SymbolDef link = [] {
            SymbolDef s;
            s.id = "add";
            s.is_function = true;
            s.arity = 2;
            s.realm = Realm::tensor;
            s.op = OpKind::add;
            return s;
        }();
        ExprTree sum;
        sum.sym = &link;
        sum.children.push_back(std::move(ta));
        sum.children.push_back(std::move(tb));
        DimResult r = infer_dimension(sum);
        CHECK(r.homogeneous);
        CHECK(r.dim == ds.target.dim);
    }
    CHECK(found > 0);
}

TEST_CASE("infer_dimension agrees with the brute-force oracle (sample)") {
    Dataset ds = gen_maxwell(3, {0.0, 1});
    LibraryPair libs = tiny_libs(ds, true);
    Rng rng(5);
    PlasmidFactory pf{&libs.scalar, 10, 1};
    for (int i = 0; i < 2000; ++i) {
        Gene g = random_gene(Realm::tensor, libs.tensor, 5, rng, &pf);
        ExprTree t = decode_and_expand(g, libs);
        DimResult r = infer_dimension(t);
        auto oracle = dv_oracle(t);
        CHECK(r.homogeneous == oracle.has_value());
        if (oracle) CHECK(r.dim == *oracle);
    }
}
