#include "site/benchmarks.hpp"

#include <cmath>
#include <random>

#include "site/errors.hpp"

namespace site {

namespace {

constexpr double kPi = 3.14159265358979323846;

DimVector dv(int M, int L, int T, int I = 0) {
    DimVector d;
    d[0] = M;
    d[1] = L;
    d[2] = T;
    d[3] = I;
    return d;
}

TensorField make_tensor(const std::string& name, int nd, int n, const DimVector& dim) {
    TensorField f;
    f.name = name;
    f.n_dim = nd;
    f.dim = dim;
    f.comp.assign(nd * nd, std::vector<double>(n, 0.0));
    return f;
}

TensorField make_identity(const std::string& name, int nd, int n) {
    TensorField f = make_tensor(name, nd, n, DimVector{});
    f.synthetic_identity = true;
    for (int i = 0; i < nd; ++i) f.comp[i * nd + i].assign(n, 1.0);
    return f;
}

struct Noiser {
    double level;
    std::mt19937_64* rng;
    std::normal_distribution<double> gauss{0.0, 1.0};

    double operator()(double v) { return v * (1.0 + level * gauss(*rng)); }
};

} // namespace

std::array<double, 3> maxwell_E(double x, double y, double z) {
    using namespace constants;
    return {maxwell_E0 * std::sin(kPi * x), maxwell_E0 * std::cos(kPi * y),
            maxwell_E0 * std::sin(kPi * z)};
}

std::array<double, 3> maxwell_B(double x, double y, double z) {
    using namespace constants;
    return {maxwell_B0 * std::cos(kPi * x), maxwell_B0 * std::sin(kPi * y),
            maxwell_B0 * std::cos(kPi * z)};
}

std::array<double, 9> maxwell_stress(const std::array<double, 3>& E,
                                     const std::array<double, 3>& B) {
    using namespace constants;
    const double E2 = E[0] * E[0] + E[1] * E[1] + E[2] * E[2];
    const double B2 = B[0] * B[0] + B[1] * B[1] + B[2] * B[2];
    std::array<double, 9> T{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double d = i == j ? 1.0 : 0.0;
            T[i * 3 + j] = eps0 * (E[i] * E[j] - 0.5 * E2 * d) +
                           (B[i] * B[j] - 0.5 * B2 * d) / mu0;
        }
    return T;
}

Dataset gen_maxwell(int n_points, const NoiseSpec& noise) {
    if (n_points < 1) throw ArgumentError("gen_maxwell: n_points must be >= 1");
    using namespace constants;

    std::mt19937_64 rng(noise.seed);
    std::uniform_real_distribution<double> cube(-1.0, 1.0);
    Noiser perturb{noise.level, &rng};

    Dataset ds;
    ds.n_data = n_points;
    ds.n_dim = 3;

    const DimVector dv_E2 = dv(2, 2, -6, -2);
    const DimVector dv_B2 = dv(2, 0, -4, -2);

    TensorField EE = make_tensor("E_iE_j", 3, n_points, dv_E2);
    TensorField BB = make_tensor("B_iB_j", 3, n_points, dv_B2);
    TensorField T = make_tensor("T_ij", 3, n_points, dv(1, -1, -2));
    ScalarField Ekk{"E_kk", std::vector<double>(n_points), dv_E2};
    ScalarField Bkk{"B_kk", std::vector<double>(n_points), dv_B2};

    for (int r = 0; r < n_points; ++r) {
        const double x = cube(rng), y = cube(rng), z = cube(rng);
        auto E = maxwell_E(x, y, z);
        auto B = maxwell_B(x, y, z);
        for (auto& e : E) e = perturb(e);
        for (auto& b : B) b = perturb(b);

        auto Tn = maxwell_stress(E, B);
        for (auto& t : Tn) t = perturb(t);

        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                EE.at(i, j)[r] = E[i] * E[j];
                BB.at(i, j)[r] = B[i] * B[j];
                T.at(i, j)[r] = Tn[i * 3 + j];
            }
        Ekk.values[r] = E[0] * E[0] + E[1] * E[1] + E[2] * E[2];
        Bkk.values[r] = B[0] * B[0] + B[1] * B[1] + B[2] * B[2];
    }

    ds.tensors.push_back(std::move(EE));
    ds.tensors.push_back(std::move(BB));
    ds.tensors.push_back(make_identity("delta", 3, n_points));
    ds.scalars.push_back(std::move(Ekk));
    ds.scalars.push_back(std::move(Bkk));
    ds.scalars.push_back({"eps0", std::vector<double>(n_points, eps0), dv(-1, -3, 4, 2)});
    ds.scalars.push_back({"mu0", std::vector<double>(n_points, mu0), dv(1, 1, -2, -2)});
    ds.scalars.push_back({"B0", std::vector<double>(n_points, maxwell_B0), dv(1, 0, -2, -1)});
    ds.target = std::move(T);
    return ds;
}

Dataset gen_reynolds_decay(int n_times) {
    if (n_times < 2) throw ArgumentError("gen_reynolds_decay: n_times must be >= 2");

    constexpr double C_eps2 = 1.92;
    constexpr double k0 = 4265.9;          // m^2/s^2
    constexpr double L_t = 0.1;            // turbulence length scale, m
    const double eps_init = std::pow(k0, 1.5) / L_t;
    constexpr double t_begin = 1e-8, t_end = 1e-6;

    // RK4 on dk/dt = -eps, deps/dt = -C eps^2 / k.
    auto rhs = [&](double k, double eps, double& dk, double& deps) {
        dk = -eps;
        deps = -C_eps2 * eps * eps / k;
    };
    auto step = [&](double& k, double& eps, double dt) {
        double k1, e1, k2, e2, k3, e3, k4, e4;
        rhs(k, eps, k1, e1);
        rhs(k + 0.5 * dt * k1, eps + 0.5 * dt * e1, k2, e2);
        rhs(k + 0.5 * dt * k2, eps + 0.5 * dt * e2, k3, e3);
        rhs(k + dt * k3, eps + dt * e3, k4, e4);
        k += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        eps += dt / 6.0 * (e1 + 2 * e2 + 2 * e3 + e4);
    };

    Dataset ds;
    ds.n_data = n_times;
    ds.n_dim = 3;

    TensorField R = make_tensor("R_ij", 3, n_times, dv(0, 2, -2));
    TensorField dRdt = make_tensor("dR_ij_dt", 3, n_times, dv(0, 2, -3));
    ScalarField ks{"k", std::vector<double>(n_times), dv(0, 2, -2)};
    ScalarField es{"eps", std::vector<double>(n_times), dv(0, 2, -3)};

    double k = k0, eps = eps_init, t = 0.0;
    const int substeps = 32;
    for (int i = 0; i < n_times; ++i) {
        const double ti = t_begin + (t_end - t_begin) * i / (n_times - 1);
        const double dt = (ti - t) / substeps;
        for (int s = 0; s < substeps; ++s) step(k, eps, dt);
        t = ti;

        ks.values[i] = k;
        es.values[i] = eps;
        for (int d = 0; d < 3; ++d) {
            R.at(d, d)[i] = 2.0 / 3.0 * k;
            dRdt.at(d, d)[i] = -2.0 / 3.0 * eps;
        }
    }

    ds.tensors.push_back(std::move(R));
    ds.tensors.push_back(make_identity("delta", 3, n_times));
    ds.scalars.push_back(std::move(ks));
    ds.scalars.push_back(std::move(es));
    ds.target = std::move(dRdt);
    return ds;
}

Dataset gen_newtonian_field(int n_points, bool compressible, const NoiseSpec& noise) {
    if (n_points < 1) throw ArgumentError("gen_newtonian_field: n_points must be >= 1");

    constexpr double U0 = 100.0;   // solenoidal velocity scale, m/s
    constexpr double A = 120.0;    // compressible strength, 1/s
    constexpr double mu = 2.117e-5;
    constexpr double p_base = 2e-2, p_amp = 1e-2;

    std::mt19937_64 rng(noise.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Noiser perturb{noise.level, &rng};

    Dataset ds;
    ds.n_data = n_points;
    ds.n_dim = 2;

    TensorField S = make_tensor("S_ij", 2, n_points, dv(0, 0, -1));
    TensorField sigma = make_tensor("sigma_ij", 2, n_points, dv(1, -1, -2));
    ScalarField Dkk{"D_kk", std::vector<double>(n_points), dv(0, 0, -1)};
    ScalarField pf{"p", std::vector<double>(n_points), dv(1, -1, -2)};

    for (int r = 0; r < n_points; ++r) {
        const double x = unit(rng), y = unit(rng);

        // Stream function psi = (U0/pi) sin(pi x) sin(2 pi y) plus, when
        // compressible, potential phi = (A/pi^2) cos(pi x) cos(pi y).
        const double sx = std::sin(kPi * x), cx = std::cos(kPi * x);
        const double s2y = std::sin(2 * kPi * y), c2y = std::cos(2 * kPi * y);
        const double sy = std::sin(kPi * y), cy = std::cos(kPi * y);

        double dudx = 2 * kPi * U0 * cx * c2y;
        double dudy = -4 * kPi * U0 * sx * s2y;
        double dvdx = kPi * U0 * sx * s2y;
        double dvdy = -2 * kPi * U0 * cx * c2y;
        double div = 0.0;
        if (compressible) {
            dudx += -A * cx * cy;
            dudy += A * sx * sy;
            dvdx += A * sx * sy;
            dvdy += -A * cx * cy;
            div = -2.0 * A * cx * cy;
        }

        double S11 = perturb(dudx);
        double S22 = perturb(dvdy);
        double S12 = perturb(0.5 * (dudy + dvdx));
        double dkk = compressible ? perturb(div) : 0.0;
        double p = perturb(p_base + p_amp * cx * sy);

        S.at(0, 0)[r] = S11;
        S.at(1, 1)[r] = S22;
        S.at(0, 1)[r] = S12;
        S.at(1, 0)[r] = S12;
        Dkk.values[r] = dkk;
        pf.values[r] = p;

        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double d = i == j ? 1.0 : 0.0;
                const double sij = i == j ? (i == 0 ? S11 : S22) : S12;
                sigma.at(i, j)[r] =
                    perturb(-2.0 * mu * sij + 2.0 / 3.0 * mu * dkk * d + p * d);
            }
    }

    ds.tensors.push_back(std::move(S));
    ds.tensors.push_back(make_identity("delta", 2, n_points));
    ds.scalars.push_back(std::move(Dkk));
    ds.scalars.push_back(std::move(pf));
    ds.scalars.push_back({"mu", std::vector<double>(n_points, mu), dv(1, -1, -1)});
    ds.target = std::move(sigma);
    return ds;
}

} // namespace site
