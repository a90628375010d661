#include "mlcurv/levelset.hpp"

#include <cmath>
#include <stdexcept>

namespace mlcurv {

NodalField evaluate_levelset(const NarrowBandGrid& grid, const SurfaceDistance& sd) {
    NodalField phi(grid);
    const double h = grid.h;
    const double shell = 3.0 * std::sqrt(3.0) * h + h;
    const double cap = (grid.box_hi[0] - grid.box_lo[0]) + (grid.box_hi[1] - grid.box_lo[1]) +
                       (grid.box_hi[2] - grid.box_lo[2]);
    const bool exact_everywhere = !sd.spec().is_monge();

    std::vector<int32_t> failed_at(worker_count() * 8, -1);
    parallel_chunks(grid.size(), size_t(worker_count()) * 8, [&](size_t chunk, size_t b, size_t e) {
        for (size_t n = b; n < e; ++n) {
            Vec3 x = grid.position(int32_t(n));
            double est = sd.estimate(x, cap);
            if (!exact_everywhere && std::fabs(est) <= shell) {
                NearestResult r = sd.nearest(x);
                if (!r.converged) {
                    failed_at[chunk] = int32_t(n);
                    return;
                }
                est = r.signed_dist;
            }
            phi[n] = est;
        }
    });
    for (int32_t f : failed_at)
        if (f >= 0)
            throw std::runtime_error("evaluate_levelset: projection failed to converge at node " + std::to_string(f));
    return phi;
}

NodalField add_uniform_noise(const NodalField& phi, double eps_rnd, Rng& rng) {
    if (eps_rnd < 0) throw std::invalid_argument("add_uniform_noise: eps_rnd must be nonnegative");
    const NarrowBandGrid& g = *phi.grid;
    NodalField out = phi;
    for (size_t n = 0; n < g.size(); ++n) out[n] += eps_rnd * rng.uniform(-g.h, g.h);
    return out;
}

static inline double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return std::fabs(a) < std::fabs(b) ? a : b;
}

NodalField reinitialize(const NarrowBandGrid& grid, const NodalField& phi0, int nu) {
    if (nu < 0) throw std::invalid_argument("reinitialize: nu must be nonnegative");
    const double h = grid.h;
    const double dtau = 0.45 * h;
    const size_t n = grid.size();

    std::vector<double> sgn(n);
    for (size_t i = 0; i < n; ++i) sgn[i] = phi0[i] / std::sqrt(phi0[i] * phi0[i] + h * h);

    // Per-axis neighbor indices out to +/-2; -1 marks a missing node.
    std::vector<int32_t> nb(n * 12);
    parallel_chunks(n, size_t(worker_count()) * 8, [&](size_t, size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            const auto& c = grid.nodes[i];
            const int off[12][3] = {{-2, 0, 0}, {-1, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, -2, 0}, {0, -1, 0},
                                    {0, 1, 0},  {0, 2, 0},  {0, 0, -2}, {0, 0, -1}, {0, 0, 1}, {0, 0, 2}};
            for (int t = 0; t < 12; ++t) nb[i * 12 + t] = grid.at(c[0] + off[t][0], c[1] + off[t][1], c[2] + off[t][2]);
        }
    });

    // Subcell anchor: where phi0 changes sign between a node and an axis
    // neighbor, the one-sided differences reference the crossing of phi0's
    // quadratic interpolant instead of the neighbor. This pins the interface
    // in place during redistancing. Crossing offsets are stored h-normalized
    // per node and direction (0 = no crossing); order: -x +x -y +y -z +z.
    std::vector<uint16_t> cross(n * 6, 0);
    parallel_chunks(n, size_t(worker_count()) * 8, [&](size_t, size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            const int32_t* t = &nb[i * 12];
            double fi = phi0[i];
            for (int a = 0; a < 3; ++a) {
                int32_t m2 = t[4 * a + 0], m1 = t[4 * a + 1], p1 = t[4 * a + 2], p2 = t[4 * a + 3];
                if (m1 < 0 || p1 < 0) continue;
                double fm = phi0[m1], fp = phi0[p1];
                double dc = fp - 2.0 * fi + fm;  // h^2-scaled second difference
                auto subcell = [&](double fa, double fb, double dother) {
                    // root of q(t) = fa (1-t) + fb t + (c/2) t (t-1) on [0, 1]
                    double c2 = minmod(dc, dother);
                    double tl = fa / (fa - fb);
                    if (std::fabs(c2) > 1e-10 * std::max(std::fabs(fa), std::fabs(fb))) {
                        double qa = 0.5 * c2, qb = (fb - fa) - 0.5 * c2, qc = fa;
                        double disc = qb * qb - 4.0 * qa * qc;
                        if (disc >= 0) {
                            double sq = std::sqrt(disc);
                            double r1 = (-qb + sq) / (2 * qa), r2 = (-qb - sq) / (2 * qa);
                            if (r1 >= 0.0 && r1 <= 1.0)
                                tl = r1;
                            else if (r2 >= 0.0 && r2 <= 1.0)
                                tl = r2;
                        }
                    }
                    return std::clamp(tl, 1.0 / 65535.0, 1.0);
                };
                if (fi * fm < 0.0) {
                    double dmm = m2 >= 0 ? fi - 2.0 * fm + phi0[m2] : dc;
                    cross[i * 6 + 2 * a] = uint16_t(std::lround(subcell(fi, fm, dmm) * 65535.0));
                }
                if (fi * fp < 0.0) {
                    double dpp = p2 >= 0 ? phi0[p2] - 2.0 * fp + fi : dc;
                    cross[i * 6 + 2 * a + 1] = uint16_t(std::lround(subcell(fi, fp, dpp) * 65535.0));
                }
            }
        }
    });

    // Nodes missing any +-1/+-2 axis neighbor are frozen; the Godunov upwind
    // structure keeps their stale values from propagating back toward the
    // interface, and the band margin keeps them outside every consumer.
    auto rhs = [&](const std::vector<double>& f, std::vector<double>& out) {
        parallel_chunks(n, size_t(worker_count()) * 8, [&](size_t, size_t b, size_t e) {
            for (size_t i = b; i < e; ++i) {
                const int32_t* t = &nb[i * 12];
                double fi = f[i];
                double grad2 = 0.0;
                bool frozen = false;
                double s = sgn[i];
                for (int a = 0; a < 3 && !frozen; ++a) {
                    int32_t m2 = t[4 * a + 0], m1 = t[4 * a + 1], p1 = t[4 * a + 2], p2 = t[4 * a + 3];
                    if (m1 < 0 || p1 < 0 || m2 < 0 || p2 < 0) {
                        frozen = true;
                        break;
                    }
                    double fm1 = f[m1], fp1 = f[p1];
                    double dc = (fp1 - 2.0 * fi + fm1) / (h * h);
                    double dmm = (fi - 2.0 * fm1 + f[m2]) / (h * h);
                    double dpp = (f[p2] - 2.0 * fp1 + fi) / (h * h);
                    double dminus, dplus;
                    uint16_t cm = cross[i * 6 + 2 * a], cp = cross[i * 6 + 2 * a + 1];
                    if (cm) {
                        double s = h * double(cm) / 65535.0;
                        dminus = fi / s + 0.5 * s * minmod(dmm, dc);
                    } else {
                        dminus = (fi - fm1) / h + 0.5 * h * minmod(dmm, dc);
                    }
                    if (cp) {
                        double s = h * double(cp) / 65535.0;
                        dplus = -fi / s - 0.5 * s * minmod(dc, dpp);
                    } else {
                        dplus = (fp1 - fi) / h - 0.5 * h * minmod(dc, dpp);
                    }
                    double am, ap;
                    if (s >= 0.0) {
                        am = std::max(dminus, 0.0);
                        ap = std::min(dplus, 0.0);
                    } else {
                        am = std::min(dminus, 0.0);
                        ap = std::max(dplus, 0.0);
                    }
                    grad2 += std::max(am * am, ap * ap);
                }
                out[i] = frozen ? 0.0 : -s * (std::sqrt(grad2) - 1.0);
            }
        });
    };

    std::vector<double> cur = phi0.v, k(n), stage(n);
    for (int it = 0; it < nu; ++it) {
        rhs(cur, k);
        for (size_t i = 0; i < n; ++i) stage[i] = cur[i] + dtau * k[i];
        rhs(stage, k);
        for (size_t i = 0; i < n; ++i) cur[i] = 0.5 * (cur[i] + stage[i] + dtau * k[i]);
    }

    NodalField out(grid);
    out.v = std::move(cur);
    return out;
}

NormalsResult gradient_and_normals(const NarrowBandGrid& grid, const NodalField& phi) {
    NormalsResult r;
    r.grad = NodalVectorField(grid);
    r.nhat = NodalVectorField(grid);
    r.nhat.degenerate.assign(grid.size(), 0);
    const double h = grid.h;
    parallel_chunks(grid.size(), size_t(worker_count()) * 8, [&](size_t, size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            const auto& c = grid.nodes[i];
            Vec3 g{0, 0, 0};
            bool ok = true;
            for (int a = 0; a < 3; ++a) {
                int d[3] = {0, 0, 0};
                d[a] = 1;
                int32_t p = grid.at(c[0] + d[0], c[1] + d[1], c[2] + d[2]);
                int32_t m = grid.at(c[0] - d[0], c[1] - d[1], c[2] - d[2]);
                if (p < 0 || m < 0) {
                    ok = false;
                    break;
                }
                g[a] = (phi[p] - phi[m]) / (2.0 * h);
            }
            double gn = ok ? norm(g) : 0.0;
            r.grad[i] = ok ? g : Vec3{0, 0, 0};
            if (!ok || gn < 1e-12) {
                r.nhat.degenerate[i] = 1;
                r.nhat[i] = {0, 0, 0};
            } else {
                r.nhat[i] = (1.0 / gn) * g;
            }
        }
    });
    return r;
}

CurvatureResult nodal_curvatures(const NarrowBandGrid& grid, const NodalField& phi, double eval_band) {
    CurvatureResult r;
    r.mean = NodalField(grid);
    r.gauss = NodalField(grid);
    r.status.assign(grid.size(), 0);
    const double h = grid.h;
    const double h2 = h * h;

    parallel_chunks(grid.size(), size_t(worker_count()) * 8, [&](size_t, size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            if (std::fabs(phi[i]) > eval_band) continue;
            const auto& c = grid.nodes[i];
            double f[3][3][3];
            bool ok = true;
            for (int di = -1; di <= 1 && ok; ++di)
                for (int dj = -1; dj <= 1 && ok; ++dj)
                    for (int dk = -1; dk <= 1; ++dk) {
                        int32_t m = grid.at(c[0] + di, c[1] + dj, c[2] + dk);
                        if (m < 0) {
                            ok = false;
                            break;
                        }
                        f[di + 1][dj + 1][dk + 1] = phi[m];
                    }
            if (!ok) continue;

            double fx = (f[2][1][1] - f[0][1][1]) / (2 * h);
            double fy = (f[1][2][1] - f[1][0][1]) / (2 * h);
            double fz = (f[1][1][2] - f[1][1][0]) / (2 * h);
            double fxx = (f[2][1][1] - 2 * f[1][1][1] + f[0][1][1]) / h2;
            double fyy = (f[1][2][1] - 2 * f[1][1][1] + f[1][0][1]) / h2;
            double fzz = (f[1][1][2] - 2 * f[1][1][1] + f[1][1][0]) / h2;
            double fxy = (f[2][2][1] - f[2][0][1] - f[0][2][1] + f[0][0][1]) / (4 * h2);
            double fxz = (f[2][1][2] - f[2][1][0] - f[0][1][2] + f[0][1][0]) / (4 * h2);
            double fyz = (f[1][2][2] - f[1][2][0] - f[1][0][2] + f[1][0][0]) / (4 * h2);

            double g2 = fx * fx + fy * fy + fz * fz;
            double g3 = g2 * std::sqrt(g2);
            if (g3 < 1e-12) {
                r.mean[i] = 0.0;
                r.gauss[i] = 0.0;
                r.status[i] = 2;
                continue;
            }
            r.mean[i] = (fx * fx * (fyy + fzz) + fy * fy * (fxx + fzz) + fz * fz * (fxx + fyy)) / (2.0 * g3) -
                        (fx * fy * fxy + fx * fz * fxz + fy * fz * fyz) / g3;
            // adjugate-of-Hessian quadratic form over |grad|^4
            r.gauss[i] = (2.0 * (fx * fy * (fxz * fyz - fxy * fzz) + fx * fz * (fxy * fyz - fxz * fyy) +
                                 fy * fz * (fxy * fxz - fyz * fxx)) +
                          fx * fx * (fyy * fzz - fyz * fyz) + fy * fy * (fxx * fzz - fxz * fxz) +
                          fz * fz * (fxx * fyy - fxy * fxy)) /
                         (g2 * g2);
            r.status[i] = 1;
        }
    });
    return r;
}

NodalField mean_curvature_nodal(const NarrowBandGrid& grid, const NodalField& phi) {
    return nodal_curvatures(grid, phi).mean;
}

NodalField gaussian_curvature_nodal(const NarrowBandGrid& grid, const NodalField& phi) {
    return nodal_curvatures(grid, phi).gauss;
}

}  // namespace mlcurv
