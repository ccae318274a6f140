#pragma once

#include <array>
#include <cstdint>

#include "site/data.hpp"

namespace site {

/// Relative Gaussian noise: value * (1 + level * N(0,1)). The seed also
/// drives any point sampling inside a generator.
struct NoiseSpec {
    double level = 0.0;
    std::uint64_t seed = 1;
};

namespace constants {
inline constexpr double eps0 = 8.8541878128e-12;   // vacuum permittivity, F/m
inline constexpr double mu0 = 1.25663706212e-6;    // vacuum permeability, H/m
inline constexpr double maxwell_E0 = 1e6;          // V/m
inline constexpr double maxwell_B0 = 1e-3;         // T
} // namespace constants

/// Sinusoidal test fields of the Maxwell stress benchmark.
std::array<double, 3> maxwell_E(double x, double y, double z);
std::array<double, 3> maxwell_B(double x, double y, double z);

/// T_ij = eps0 (E_i E_j - 1/2 E_k E_k d_ij) + 1/mu0 (B_i B_j - 1/2 B_k B_k d_ij).
std::array<double, 9> maxwell_stress(const std::array<double, 3>& E,
                                     const std::array<double, 3>& B);

/// Maxwell stress dataset: n_points uniform in [-1,1]^3; noise perturbs the
/// field components, the stress is computed from the noisy fields and then
/// perturbed again at the same level. Terminals: tensors {E_iE_j, B_iB_j,
/// delta}, scalars {E_kk, B_kk, eps0, mu0, B0}.
Dataset gen_maxwell(int n_points, const NoiseSpec& noise);

/// Isotropic-decay dataset for the degenerate Reynolds-stress transport
/// equation dR_ij/dt = -(2/3) eps d_ij, with distractors R_ij and k.
/// n_times instants evenly spaced in [1e-8 s, 1e-6 s]; the k-eps decay pair
/// is integrated with RK4 from k(0)=4265.9 m^2/s^2.
Dataset gen_reynolds_decay(int n_times);

/// Manufactured 2D Newtonian constitutive dataset:
/// sigma_ij = -2 mu S_ij + 2/3 mu D_kk d_ij + p d_ij, with a divergence-free
/// velocity field when compressible=false. Terminals: tensors {S_ij, delta},
/// scalars {D_kk, p, mu}.
Dataset gen_newtonian_field(int n_points, bool compressible, const NoiseSpec& noise);

} // namespace site
