#pragma once

#include "mlcurv/levelset.hpp"

namespace mlcurv {

// Everything the samplers and the solver need from one surface instance:
// band grid, (perturbed, reinitialized) level-set values, normals, nodal
// curvatures near the interface, and the interface node list.
struct FieldPipeline {
    NarrowBandGrid grid;
    NodalField phi;
    NormalsResult normals;
    CurvatureResult curv;
    std::vector<int32_t> iface;
};

// noise_rng == nullptr skips the perturbation step.
FieldPipeline run_field_pipeline(const SurfaceDistance& sd, double h, double half_width, int nu, double eps_rnd,
                                 Rng* noise_rng, double curv_band_factor = 5.0);

// Trilinear interpolation of both curvature fields at p; false when any cell
// corner is missing, guarded, or outside the curvature evaluation band.
bool interp_curvatures_at(const NarrowBandGrid& grid, const CurvatureResult& curv, const Vec3& p, double& mean,
                          double& gauss);

// True when all 27 stencil normals are usable.
bool stencil_normals_ok(const Stencil27& st, const NodalVectorField& nhat);

}  // namespace mlcurv
