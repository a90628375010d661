#include "mlcurv/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mlcurv {

AffineFrame AffineFrame::make(const Vec3& shift, const Vec3& axis, double angle) {
    double n = norm(axis);
    if (!(n > 0.0)) throw std::invalid_argument("AffineFrame: zero rotation axis");
    AffineFrame f;
    f.shift = shift;
    f.axis = {axis[0] / n, axis[1] / n, axis[2] / n};
    f.angle = angle;
    f.rot = Mat3::rotation(f.axis, angle);
    return f;
}

bool SurfaceSpec::is_monge() const {
    return std::holds_alternative<SinusoidParams>(shape) || std::holds_alternative<HypParaboloidParams>(shape) ||
           std::holds_alternative<ParaboloidParams>(shape) || std::holds_alternative<GaussianParams>(shape);
}

const char* SurfaceSpec::kind_name() const {
    if (std::holds_alternative<SphereParams>(shape)) return "sphere";
    if (std::holds_alternative<SinusoidParams>(shape)) return "sinusoid";
    if (std::holds_alternative<HypParaboloidParams>(shape)) return "hyp_paraboloid";
    if (std::holds_alternative<ParaboloidParams>(shape)) return "paraboloid";
    if (std::holds_alternative<GaussianParams>(shape)) return "gaussian";
    return "ellipsoid";
}

static Box3 transformed_aabb(const AffineFrame& frame, const Box3& local, double pad) {
    Vec3 lo = {1e300, 1e300, 1e300}, hi = {-1e300, -1e300, -1e300};
    for (int i = 0; i < 8; ++i) {
        Vec3 c = {i & 1 ? local.hi[0] : local.lo[0], i & 2 ? local.hi[1] : local.lo[1],
                  i & 4 ? local.hi[2] : local.lo[2]};
        Vec3 w = frame.to_world_point(c);
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], w[k]);
            hi[k] = std::max(hi[k], w[k]);
        }
    }
    return Box3{lo, hi}.inflated(pad);
}

SurfaceSpec make_sphere(const Vec3& center, double radius, double box_pad) {
    if (!(radius > 0)) throw std::invalid_argument("sphere: radius must be positive");
    SurfaceSpec s;
    s.shape = SphereParams{radius};
    s.frame = AffineFrame::identity();
    s.frame.shift = center;
    double e = radius + box_pad;
    s.box = {center - Vec3{e, e, e}, center + Vec3{e, e, e}};
    return s;
}

SurfaceSpec make_sphere_in_box(const Vec3& center, double radius, const Box3& box) {
    SurfaceSpec s = make_sphere(center, radius, 0.0);
    s.box = box;
    return s;
}

SurfaceSpec make_sinusoid(double amplitude, double omega1, double omega2, const AffineFrame& frame, const Box3& box,
                          double param_radius) {
    SurfaceSpec s;
    s.shape = SinusoidParams{amplitude, omega1, omega2};
    s.frame = frame;
    s.box = box;
    s.param_radius = param_radius;
    return s;
}

SurfaceSpec make_hyp_paraboloid(double a, double b, const AffineFrame& frame, const Box3& box, double param_radius) {
    if (!(a > 0) || !(b > 0)) throw std::invalid_argument("hyp_paraboloid: shape parameters must be positive");
    SurfaceSpec s;
    s.shape = HypParaboloidParams{a, b};
    s.frame = frame;
    s.box = box;
    s.param_radius = param_radius;
    return s;
}

SurfaceSpec make_paraboloid(double a, double b, double height, const AffineFrame& frame, double band_pad) {
    if (!(a > 0) || !(b > 0) || !(height > 0)) throw std::invalid_argument("paraboloid: parameters must be positive");
    SurfaceSpec s;
    s.shape = ParaboloidParams{a, b, height};
    s.frame = frame;
    double umax = std::sqrt(height / a), vmax = std::sqrt(height / b);
    s.param_radius = std::hypot(umax, vmax) * 1.1 + 4 * band_pad;
    s.box = transformed_aabb(frame, Box3{{-umax, -vmax, 0}, {umax, vmax, height}}, band_pad);
    return s;
}

SurfaceSpec make_gaussian(double height, double sigma_u2, double sigma_v2, const AffineFrame& frame, double u_extent,
                          double v_extent, double band_pad) {
    if (!(height > 0) || sigma_u2 == 0 || sigma_v2 == 0) throw std::invalid_argument("gaussian: invalid parameters");
    SurfaceSpec s;
    s.shape = GaussianParams{height, sigma_u2, sigma_v2};
    s.frame = frame;
    s.param_radius = std::hypot(u_extent, v_extent) * 1.2 + 4 * band_pad;
    s.box = transformed_aabb(frame, Box3{{-u_extent, -v_extent, 0}, {u_extent, v_extent, height}}, band_pad);
    return s;
}

SurfaceSpec make_ellipsoid(double a, double b, double c, const AffineFrame& frame, double band_pad) {
    if (!(a > 0) || !(b > 0) || !(c > 0)) throw std::invalid_argument("ellipsoid: semi-axes must be positive");
    SurfaceSpec s;
    s.shape = EllipsoidParams{a, b, c};
    s.frame = frame;
    s.box = transformed_aabb(frame, Box3{{-a, -b, -c}, {a, b, c}}, band_pad);
    return s;
}

SurfaceSpec morph_spec(double r_sp, const Vec3& target_semi_axes, int step, const AffineFrame& frame,
                       double band_pad) {
    if (step < 0 || step > 51) throw std::invalid_argument("morph_spec: step outside [0, 51]");
    double t = double(step) / 51.0;
    Vec3 axes = {r_sp + t * (target_semi_axes[0] - r_sp), r_sp + t * (target_semi_axes[1] - r_sp),
                 r_sp + t * (target_semi_axes[2] - r_sp)};
    return make_ellipsoid(axes[0], axes[1], axes[2], frame, band_pad);
}

MongeJet monge_jet(const ShapeParams& shape, double u, double v) {
    MongeJet j{};
    if (const auto* p = std::get_if<SinusoidParams>(&shape)) {
        double su = std::sin(p->omega1 * u), cu = std::cos(p->omega1 * u);
        double sv = std::sin(p->omega2 * v), cv = std::cos(p->omega2 * v);
        j.q = p->amplitude * su * sv;
        j.qu = p->amplitude * p->omega1 * cu * sv;
        j.qv = p->amplitude * p->omega2 * su * cv;
        j.quu = -p->omega1 * p->omega1 * j.q;
        j.qvv = -p->omega2 * p->omega2 * j.q;
        j.quv = p->amplitude * p->omega1 * p->omega2 * cu * cv;
    } else if (const auto* p = std::get_if<HypParaboloidParams>(&shape)) {
        j.q = p->a * u * u - p->b * v * v;
        j.qu = 2 * p->a * u;
        j.qv = -2 * p->b * v;
        j.quu = 2 * p->a;
        j.qvv = -2 * p->b;
        j.quv = 0;
    } else if (const auto* p = std::get_if<ParaboloidParams>(&shape)) {
        j.q = p->a * u * u + p->b * v * v;
        j.qu = 2 * p->a * u;
        j.qv = 2 * p->b * v;
        j.quu = 2 * p->a;
        j.qvv = 2 * p->b;
        j.quv = 0;
    } else if (const auto* p = std::get_if<GaussianParams>(&shape)) {
        double e = std::exp(-0.5 * (u * u / p->sigma_u2 + v * v / p->sigma_v2));
        j.q = p->height * e;
        j.qu = -(u / p->sigma_u2) * j.q;
        j.qv = -(v / p->sigma_v2) * j.q;
        j.quu = (u * u / (p->sigma_u2 * p->sigma_u2) - 1.0 / p->sigma_u2) * j.q;
        j.qvv = (v * v / (p->sigma_v2 * p->sigma_v2) - 1.0 / p->sigma_v2) * j.q;
        j.quv = (u * v / (p->sigma_u2 * p->sigma_v2)) * j.q;
    } else {
        throw std::logic_error("monge_jet: shape is not a Monge patch");
    }
    return j;
}

void monge_curvatures(const MongeJet& j, double& mean, double& gauss) {
    double w2 = 1.0 + j.qu * j.qu + j.qv * j.qv;
    double w = std::sqrt(w2);
    mean = ((1.0 + j.qv * j.qv) * j.quu - 2.0 * j.qu * j.qv * j.quv + (1.0 + j.qu * j.qu) * j.qvv) / (2.0 * w2 * w);
    gauss = (j.quu * j.qvv - j.quv * j.quv) / (w2 * w2);
}

void ellipsoid_curvatures_at(const EllipsoidParams& e, const Vec3& p, double& mean, double& gauss) {
    double a2 = e.a * e.a, b2 = e.b * e.b, c2 = e.c * e.c;
    double m2 = p[0] * p[0] / (a2 * a2) + p[1] * p[1] / (b2 * b2) + p[2] * p[2] / (c2 * c2);
    double m3 = p[0] * p[0] / (a2 * a2 * a2) + p[1] * p[1] / (b2 * b2 * b2) + p[2] * p[2] / (c2 * c2 * c2);
    mean = (-m3 + m2 * (1.0 / a2 + 1.0 / b2 + 1.0 / c2)) / (2.0 * m2 * std::sqrt(m2));
    gauss = 1.0 / (a2 * b2 * c2 * m2 * m2);
}

void exact_curvatures(const SurfaceSpec& spec, double u, double v, double& mean, double& gauss) {
    if (const auto* p = std::get_if<SphereParams>(&spec.shape)) {
        mean = 1.0 / p->radius;
        gauss = 1.0 / (p->radius * p->radius);
    } else if (const auto* p = std::get_if<EllipsoidParams>(&spec.shape)) {
        Vec3 pt = {p->a * std::cos(v) * std::cos(u), p->b * std::cos(v) * std::sin(u), p->c * std::sin(v)};
        ellipsoid_curvatures_at(*p, pt, mean, gauss);
    } else {
        monge_curvatures(monge_jet(spec.shape, u, v), mean, gauss);
    }
}

NearestResult ellipsoid_nearest(const EllipsoidParams& e, const Vec3& y) {
    const double a[3] = {e.a, e.b, e.c};
    NearestResult r;

    double sgn[3], yy[3];
    bool zero[3];
    for (int i = 0; i < 3; ++i) {
        sgn[i] = y[i] < 0 ? -1.0 : 1.0;
        yy[i] = std::fabs(y[i]);
        zero[i] = yy[i] < 1e-14 * a[i];
    }

    double inside = y[0] * y[0] / (a[0] * a[0]) + y[1] * y[1] / (a[1] * a[1]) + y[2] * y[2] / (a[2] * a[2]) - 1.0;

    if (zero[0] && zero[1] && zero[2]) {
        int k = 0;
        for (int i = 1; i < 3; ++i)
            if (a[i] < a[k]) k = i;
        Vec3 foot = {0, 0, 0};
        foot[k] = a[k];
        r.foot_local = foot;
        r.signed_dist = -a[k];
        return r;
    }

    auto F = [&](double t) {
        double s = 0;
        for (int i = 0; i < 3; ++i) {
            if (zero[i]) continue;
            double d = a[i] * yy[i] / (a[i] * a[i] + t);
            s += d * d;
        }
        return s - 1.0;
    };

    // Unique root of the monotone-decreasing F on (t_lo, +inf).
    double t_lo = -1e300;
    for (int i = 0; i < 3; ++i)
        if (!zero[i]) t_lo = std::max(t_lo, -a[i] * a[i]);

    double lo, hi;
    if (inside >= 0.0) {  // on/outside: F(0) >= 0
        lo = 0.0;
        hi = std::max({a[0], a[1], a[2]}) * (norm(y) + std::max({a[0], a[1], a[2]}));
        while (F(hi) > 0) hi *= 2.0;
    } else {
        lo = t_lo;
        hi = 0.0;
    }
    for (int it = 0; it < 140; ++it) {
        double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        if (F(mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    double t = 0.5 * (lo + hi);

    Vec3 foot;
    for (int i = 0; i < 3; ++i) foot[i] = zero[i] ? 0.0 : sgn[i] * a[i] * a[i] * yy[i] / (a[i] * a[i] + t);
    r.foot_local = foot;
    double d = norm(y - foot);
    r.signed_dist = inside < 0 ? -d : d;
    r.u = std::atan2(foot[1] / e.b, foot[0] / e.a);
    r.v = std::asin(std::clamp(foot[2] / e.c, -1.0, 1.0));
    return r;
}

double gaussian_zero_curvature_param(const GaussianParams& g, int axis) {
    auto mean_at = [&](double t) {
        MongeJet j = monge_jet(ShapeParams{g}, axis == 0 ? t : 0.0, axis == 0 ? 0.0 : t);
        double m, k;
        monge_curvatures(j, m, k);
        return m;
    };
    double sigma = std::sqrt(axis == 0 ? g.sigma_u2 : g.sigma_v2);
    double lo = 1e-9 * sigma, hi = lo;
    double flo = mean_at(lo);
    bool bracketed = false;
    for (int i = 1; i <= 600; ++i) {
        hi = sigma * (6.0 * i / 600.0);
        double fhi = mean_at(hi);
        if (flo * fhi <= 0.0) {
            bracketed = true;
            break;
        }
        lo = hi;
        flo = fhi;
    }
    if (!bracketed) throw std::runtime_error("gaussian_zero_curvature_param: no sign change found");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mean_at(mid) * flo <= 0.0)
            hi = mid;
        else {
            lo = mid;
            flo = mean_at(lo);
        }
        if (hi - lo < 1e-13 * sigma) break;
    }
    return 0.5 * (lo + hi);
}

// --- SurfaceDistance ---------------------------------------------------------

SurfaceDistance::SurfaceDistance(const SurfaceSpec& spec, double h, double max_cap) : spec_(spec), h_(h) {
    mask_cap_ = max_cap > 0 ? max_cap : 9.5 * h;
    if (!spec_.is_monge()) return;

    if (!(spec_.param_radius > 0)) throw std::invalid_argument("SurfaceDistance: Monge patch without param_radius");
    double spacing = 0.5 * h;
    double R = spec_.param_radius;
    long n = long(std::ceil(R / spacing));
    verts_.reserve(size_t(M_PI * n * double(n)) + 16);
    for (long i = -n; i <= n; ++i) {
        double u = i * spacing;
        for (long jv = -n; jv <= n; ++jv) {
            double v = jv * spacing;
            if (u * u + v * v > R * R) continue;
            MongeJet j = monge_jet(spec_.shape, u, v);
            Vec3 w = spec_.frame.to_world_point({u, v, j.q});
            verts_.push_back(Vertex{w, float(u), float(v)});
        }
    }

    cell_size_ = 2.0 * h;
    Vec3 lo = {1e300, 1e300, 1e300}, hi = {-1e300, -1e300, -1e300};
    for (const auto& vt : verts_)
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], vt.pos[k]);
            hi[k] = std::max(hi[k], vt.pos[k]);
        }
    cell_lo_ = lo - Vec3{cell_size_, cell_size_, cell_size_};
    for (int k = 0; k < 3; ++k)
        cell_dims_[k] = int((hi[k] - cell_lo_[k]) / cell_size_) + 2;

    size_t ncells = size_t(cell_dims_[0]) * cell_dims_[1] * cell_dims_[2];
    cell_start_.assign(ncells + 1, 0);
    auto cell_of = [&](const Vec3& p) {
        int ci = std::clamp(int((p[0] - cell_lo_[0]) / cell_size_), 0, cell_dims_[0] - 1);
        int cj = std::clamp(int((p[1] - cell_lo_[1]) / cell_size_), 0, cell_dims_[1] - 1);
        int ck = std::clamp(int((p[2] - cell_lo_[2]) / cell_size_), 0, cell_dims_[2] - 1);
        return (size_t(ci) * cell_dims_[1] + cj) * cell_dims_[2] + ck;
    };
    for (const auto& vt : verts_) cell_start_[cell_of(vt.pos) + 1]++;
    for (size_t c = 0; c < ncells; ++c) cell_start_[c + 1] += cell_start_[c];
    cell_items_.resize(verts_.size());
    std::vector<uint32_t> cursor(cell_start_.begin(), cell_start_.end() - 1);
    for (uint32_t i = 0; i < verts_.size(); ++i) cell_items_[cursor[cell_of(verts_[i].pos)]++] = i;

    vbb_lo_ = lo;
    vbb_hi_ = hi;

    // exact Chebyshev distance transform over cells: two chamfer sweeps with
    // the 13 causal / anti-causal neighbors each
    const int nx = cell_dims_[0], ny = cell_dims_[1], nz = cell_dims_[2];
    cell_dist_.assign(ncells, 250);
    for (size_t c = 0; c < ncells; ++c)
        if (cell_start_[c + 1] > cell_start_[c]) cell_dist_[c] = 0;
    auto at = [&](int i, int j, int k) -> uint8_t& {
        return cell_dist_[(size_t(i) * ny + j) * nz + k];
    };
    auto relax = [&](int i, int j, int k, int di, int dj, int dk, uint8_t& cur) {
        int ii = i + di, jj = j + dj, kk = k + dk;
        if (ii < 0 || jj < 0 || kk < 0 || ii >= nx || jj >= ny || kk >= nz) return;
        uint8_t v = at(ii, jj, kk);
        if (v + 1 < cur) cur = uint8_t(v + 1);
    };
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            for (int k = 0; k < nz; ++k) {
                uint8_t cur = at(i, j, k);
                if (cur == 0) continue;
                for (int dj = -1; dj <= 1; ++dj)
                    for (int dk = -1; dk <= 1; ++dk) relax(i, j, k, -1, dj, dk, cur);
                for (int dk = -1; dk <= 1; ++dk) relax(i, j, k, 0, -1, dk, cur);
                relax(i, j, k, 0, 0, -1, cur);
                at(i, j, k) = cur;
            }
    for (int i = nx - 1; i >= 0; --i)
        for (int j = ny - 1; j >= 0; --j)
            for (int k = nz - 1; k >= 0; --k) {
                uint8_t cur = at(i, j, k);
                if (cur == 0) continue;
                for (int dj = -1; dj <= 1; ++dj)
                    for (int dk = -1; dk <= 1; ++dk) relax(i, j, k, 1, dj, dk, cur);
                for (int dk = -1; dk <= 1; ++dk) relax(i, j, k, 0, 1, dk, cur);
                relax(i, j, k, 0, 0, 1, cur);
                at(i, j, k) = cur;
            }
}

double SurfaceDistance::side_sign(const Vec3& xl) const {
    MongeJet j = monge_jet(spec_.shape, xl[0], xl[1]);
    return xl[2] > j.q ? -1.0 : 1.0;  // negative side lies above the graph
}

double SurfaceDistance::vertex_query(const Vec3& x, double cap, const Vertex** best_out) const {
    int ci = std::clamp(int((x[0] - cell_lo_[0]) / cell_size_), 0, cell_dims_[0] - 1);
    int cj = std::clamp(int((x[1] - cell_lo_[1]) / cell_size_), 0, cell_dims_[1] - 1);
    int ck = std::clamp(int((x[2] - cell_lo_[2]) / cell_size_), 0, cell_dims_[2] - 1);

    double best2 = std::numeric_limits<double>::max();
    const Vertex* best = nullptr;
    int max_ring = std::max({cell_dims_[0], cell_dims_[1], cell_dims_[2]});
    // rings below the Chebyshev cell distance are provably empty
    int start_ring = cell_dist_[(size_t(ci) * cell_dims_[1] + cj) * cell_dims_[2] + ck];
    for (int ring = start_ring; ring <= max_ring; ++ring) {
        double lb = std::max(0, ring - 1) * cell_size_;
        if (lb * lb > best2 || lb > cap) break;
        for (int di = -ring; di <= ring; ++di) {
            int i = ci + di;
            if (i < 0 || i >= cell_dims_[0]) continue;
            for (int dj = -ring; dj <= ring; ++dj) {
                int jj = cj + dj;
                if (jj < 0 || jj >= cell_dims_[1]) continue;
                bool face_ij = std::abs(di) == ring || std::abs(dj) == ring;
                int step = face_ij ? 1 : 2 * ring;
                for (int dk = -ring; dk <= ring; dk += step) {
                    int kk = ck + dk;
                    if (kk < 0 || kk >= cell_dims_[2]) continue;
                    size_t c = (size_t(i) * cell_dims_[1] + jj) * cell_dims_[2] + kk;
                    for (uint32_t t = cell_start_[c]; t < cell_start_[c + 1]; ++t) {
                        const Vertex& vt = verts_[cell_items_[t]];
                        Vec3 d = x - vt.pos;
                        double d2 = dot(d, d);
                        if (d2 < best2) {
                            best2 = d2;
                            best = &vt;
                        }
                    }
                    if (ring == 0) break;
                }
            }
        }
    }
    if (best_out) *best_out = best;
    return best ? std::sqrt(best2) : std::numeric_limits<double>::max();
}

double SurfaceDistance::estimate(const Vec3& x, double cap) const {
    if (const auto* p = std::get_if<SphereParams>(&spec_.shape)) {
        return norm(x - spec_.frame.shift) - p->radius;
    }
    if (const auto* p = std::get_if<EllipsoidParams>(&spec_.shape)) {
        return ellipsoid_nearest(*p, spec_.frame.to_local_point(x)).signed_dist;
    }
    double sentinel = 2.0 * cap + h_;
    double bb2 = 0;
    for (int k = 0; k < 3; ++k) {
        double d = std::max({vbb_lo_[k] - x[k], x[k] - vbb_hi_[k], 0.0});
        bb2 += d * d;
    }
    if (bb2 > cap * cap) return sentinel;
    {
        int ci = std::clamp(int((x[0] - cell_lo_[0]) / cell_size_), 0, cell_dims_[0] - 1);
        int cj = std::clamp(int((x[1] - cell_lo_[1]) / cell_size_), 0, cell_dims_[1] - 1);
        int ck = std::clamp(int((x[2] - cell_lo_[2]) / cell_size_), 0, cell_dims_[2] - 1);
        double lb = (double(cell_dist_[(size_t(ci) * cell_dims_[1] + cj) * cell_dims_[2] + ck]) - 1.0) * cell_size_;
        if (lb > cap) return sentinel;
    }
    const Vertex* best = nullptr;
    double d = vertex_query(x, cap, &best);
    if (!best || d > cap) return sentinel;
    return side_sign(spec_.frame.to_local_point(x)) * d;
}

NearestResult SurfaceDistance::monge_nearest(const Vec3& xl, double u0, double v0) const {
    auto dist2 = [&](double u, double v) {
        MongeJet j = monge_jet(spec_.shape, u, v);
        Vec3 d = {xl[0] - u, xl[1] - v, xl[2] - j.q};
        return 0.5 * dot(d, d);
    };
    double u = u0, v = v0;
    double f = dist2(u, v);
    NearestResult r;
    for (int it = 0; it < 100; ++it) {
        r.iters = it;
        MongeJet j = monge_jet(spec_.shape, u, v);
        Vec3 d = {xl[0] - u, xl[1] - v, xl[2] - j.q};
        double gu = -(d[0] + d[2] * j.qu);
        double gv = -(d[1] + d[2] * j.qv);
        double gn = std::hypot(gu, gv);
        if (gn < 1e-10) {
            r.u = u;
            r.v = v;
            r.foot_local = {u, v, j.q};
            r.converged = true;
            double dd = norm(xl - r.foot_local);
            r.signed_dist = side_sign(xl) * dd;
            r.foot_world = spec_.frame.to_world_point(r.foot_local);
            return r;
        }
        double huu = 1.0 + j.qu * j.qu - d[2] * j.quu;
        double huv = j.qu * j.qv - d[2] * j.quv;
        double hvv = 1.0 + j.qv * j.qv - d[2] * j.qvv;
        double det = huu * hvv - huv * huv;

        // accept a step when it lowers f or, once f-descent saturates at its
        // ulp, when it shrinks the gradient
        auto try_direction = [&](double su, double sv, int backtracks) {
            double t = 1.0;
            for (int k = 0; k < backtracks; ++k, t *= 0.5) {
                double uu = u + t * su, vv = v + t * sv;
                MongeJet jt = monge_jet(spec_.shape, uu, vv);
                Vec3 dt = {xl[0] - uu, xl[1] - vv, xl[2] - jt.q};
                double f_try = 0.5 * dot(dt, dt);
                double gn_try = std::hypot(-(dt[0] + dt[2] * jt.qu), -(dt[1] + dt[2] * jt.qv));
                if (f_try < f || gn_try < gn) {
                    u = uu;
                    v = vv;
                    f = f_try;
                    return true;
                }
            }
            return false;
        };

        bool advanced = false;
        if (det > 1e-300 && huu > 0)
            advanced = try_direction((-gu * hvv + gv * huv) / det, (gu * huv - gv * huu) / det, 4);
        if (!advanced) {
            // modified Newton: flip negative curvature to its magnitude so
            // focal-point (quartic-valley) nodes keep Newton-sized steps
            double tr = huu + hvv;
            double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
            double l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
            double c1, s1;  // eigenvector of l1
            if (std::fabs(huv) > 1e-300) {
                double vx = l1 - hvv, vy = huv;
                double vn = std::hypot(vx, vy);
                c1 = vx / vn;
                s1 = vy / vn;
            } else {
                c1 = huu >= hvv ? 1.0 : 0.0;
                s1 = huu >= hvv ? 0.0 : 1.0;
            }
            double floor_ev = 1e-8 * (std::fabs(l1) + std::fabs(l2) + 1.0);
            double m1 = std::max(std::fabs(l1), floor_ev), m2 = std::max(std::fabs(l2), floor_ev);
            double p1 = -(c1 * gu + s1 * gv) / m1;   // components in the eigenbasis
            double p2 = -(-s1 * gu + c1 * gv) / m2;
            advanced = try_direction(c1 * p1 - s1 * p2, s1 * p1 + c1 * p2, 30);
        }
        if (!advanced) {
            // Gauss-Newton: J^T J is always SPD and absorbs the patch stretch
            double auu = 1.0 + j.qu * j.qu, auv = j.qu * j.qv, avv = 1.0 + j.qv * j.qv;
            double adet = auu * avv - auv * auv;  // = 1 + qu^2 + qv^2 >= 1
            advanced = try_direction((-gu * avv + gv * auv) / adet, (gu * auv - gv * auu) / adet, 30);
        }
        if (!advanced) advanced = try_direction(-gu, -gv, 40);
        if (!advanced) break;  // stationary to machine precision
    }
    r.u = u;
    r.v = v;
    MongeJet j = monge_jet(spec_.shape, u, v);
    r.foot_local = {u, v, j.q};
    r.foot_world = spec_.frame.to_world_point(r.foot_local);
    r.signed_dist = side_sign(xl) * norm(xl - r.foot_local);
    r.converged = false;
    return r;
}

NearestResult SurfaceDistance::nearest(const Vec3& x) const {
    if (const auto* p = std::get_if<SphereParams>(&spec_.shape)) {
        NearestResult r;
        Vec3 d = x - spec_.frame.shift;
        double n = norm(d);
        if (n < 1e-300) d = {p->radius, 0, 0}, n = p->radius;
        r.foot_world = spec_.frame.shift + (p->radius / n) * d;
        r.foot_local = spec_.frame.to_local_point(r.foot_world);
        r.signed_dist = n - p->radius;
        return r;
    }
    if (const auto* p = std::get_if<EllipsoidParams>(&spec_.shape)) {
        NearestResult r = ellipsoid_nearest(*p, spec_.frame.to_local_point(x));
        r.foot_world = spec_.frame.to_world_point(r.foot_local);
        return r;
    }
    Vec3 xl = spec_.frame.to_local_point(x);
    const Vertex* best = nullptr;
    vertex_query(x, std::numeric_limits<double>::max(), &best);
    if (!best) throw std::runtime_error("SurfaceDistance::nearest: empty triangulation");
    return monge_nearest(xl, best->u, best->v);
}

}  // namespace mlcurv
