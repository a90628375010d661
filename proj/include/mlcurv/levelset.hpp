#pragma once

#include "mlcurv/grid.hpp"
#include "mlcurv/surfaces.hpp"

namespace mlcurv {

// Signed distance at every active node. Exact for spheres and ellipsoids;
// Monge patches get Newton-refined projections inside the 3*sqrt(3)*h shell
// and vertex-cloud estimates beyond it. Throws when the projection fails to
// converge at a shell node.
NodalField evaluate_levelset(const NarrowBandGrid& grid, const SurfaceDistance& sd);

// phi + eps_rnd * U(-h, +h), independent per node; seeded.
NodalField add_uniform_noise(const NodalField& phi, double eps_rnd, Rng& rng);

// nu pseudo-time steps of the redistancing flow: Godunov upwind Hamiltonian
// with second-order ENO one-sided differences, TVD-RK2, d_tau = 0.45 h, and
// smoothed signum phi0 / sqrt(phi0^2 + h^2). Nodes missing an axis neighbor
// are frozen.
NodalField reinitialize(const NarrowBandGrid& grid, const NodalField& phi, int nu);

struct NormalsResult {
    NodalVectorField grad;
    NodalVectorField nhat;  // degenerate flag set where the gradient vanishes or neighbors are missing
};
NormalsResult gradient_and_normals(const NarrowBandGrid& grid, const NodalField& phi);

// status: 0 = stencil incomplete (no value), 1 = ok, 2 = denominator guarded.
struct CurvatureResult {
    NodalField mean;
    NodalField gauss;
    std::vector<uint8_t> status;
};

// Second-order central differences for both curvatures. eval_band limits the
// work to nodes with |phi| <= eval_band (pass a large value to cover the whole
// band).
CurvatureResult nodal_curvatures(const NarrowBandGrid& grid, const NodalField& phi, double eval_band = 1e300);

NodalField mean_curvature_nodal(const NarrowBandGrid& grid, const NodalField& phi);
NodalField gaussian_curvature_nodal(const NarrowBandGrid& grid, const NodalField& phi);

inline Vec3 project_to_interface(const Vec3& x, double phi_n, const Vec3& n_hat) { return x - phi_n * n_hat; }

}  // namespace mlcurv
