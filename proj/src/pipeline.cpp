#include "mlcurv/pipeline.hpp"

#include <cmath>

namespace mlcurv {

FieldPipeline run_field_pipeline(const SurfaceDistance& sd, double h, double half_width, int nu, double eps_rnd,
                                 Rng* noise_rng, double curv_band_factor) {
    FieldPipeline p;
    p.grid = build_band_grid(sd, h, half_width);
    p.phi = evaluate_levelset(p.grid, sd);
    if (noise_rng && eps_rnd > 0) p.phi = add_uniform_noise(p.phi, eps_rnd, *noise_rng);
    if (nu > 0) p.phi = reinitialize(p.grid, p.phi, nu);
    p.normals = gradient_and_normals(p.grid, p.phi);
    p.curv = nodal_curvatures(p.grid, p.phi, curv_band_factor * h);
    p.iface = interface_nodes(p.grid, p.phi);
    return p;
}

bool interp_curvatures_at(const NarrowBandGrid& g, const CurvatureResult& curv, const Vec3& p, double& mean,
                          double& gauss) {
    int c[3];
    double w[3];
    for (int k = 0; k < 3; ++k) {
        double t = (p[k] - g.origin[k]) / g.h;
        int i = int(std::floor(t));
        i = std::max(0, std::min(i, g.dims[k] - 2));
        c[k] = i;
        w[k] = t - i;
    }
    double am = 0, ag = 0;
    for (int b = 0; b < 8; ++b) {
        int bi = b & 1, bj = (b >> 1) & 1, bk = (b >> 2) & 1;
        int32_t n = g.at(c[0] + bi, c[1] + bj, c[2] + bk);
        if (n < 0 || curv.status[n] != 1) return false;
        double weight = (bi ? w[0] : 1 - w[0]) * (bj ? w[1] : 1 - w[1]) * (bk ? w[2] : 1 - w[2]);
        am += weight * curv.mean[n];
        ag += weight * curv.gauss[n];
    }
    mean = am;
    gauss = ag;
    return true;
}

bool stencil_normals_ok(const Stencil27& st, const NodalVectorField& nhat) {
    if (nhat.degenerate.empty()) return true;
    for (int32_t n : st)
        if (nhat.degenerate[n]) return false;
    return true;
}

}  // namespace mlcurv
