#pragma once

#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "mlcurv/util.hpp"

namespace mlcurv {

// Rigid-body frame: rotation about a unit axis followed by a shift.
struct AffineFrame {
    Vec3 shift{0, 0, 0};
    Vec3 axis{0, 0, 1};
    double angle = 0.0;
    Mat3 rot = Mat3::identity();

    static AffineFrame identity() { return {}; }
    static AffineFrame make(const Vec3& shift, const Vec3& axis, double angle);

    Vec3 to_world_point(const Vec3& p) const { return rot.apply(p) + shift; }
    Vec3 to_local_point(const Vec3& p) const { return rot.transposed().apply(p - shift); }
    Vec3 to_world_vector(const Vec3& v) const { return rot.apply(v); }
    Vec3 to_local_vector(const Vec3& v) const { return rot.transposed().apply(v); }
};

struct Box3 {
    Vec3 lo{0, 0, 0}, hi{0, 0, 0};
    Vec3 size() const { return hi - lo; }
    bool contains(const Vec3& p) const {
        return p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1] && p[2] >= lo[2] && p[2] <= hi[2];
    }
    Box3 inflated(double m) const { return {lo - Vec3{m, m, m}, hi + Vec3{m, m, m}}; }
};

struct SphereParams {
    double radius;
};
struct SinusoidParams {
    double amplitude, omega1, omega2;
};
struct HypParaboloidParams {
    double a, b;
};
struct ParaboloidParams {
    double a, b, height;
};
struct GaussianParams {
    double height, sigma_u2, sigma_v2;
};
struct EllipsoidParams {
    double a, b, c;
};

using ShapeParams =
    std::variant<SphereParams, SinusoidParams, HypParaboloidParams, ParaboloidParams, GaussianParams, EllipsoidParams>;

// Analytic surface plus its computational box. Monge patches carry the radius
// of the parameter-plane region that sampling and triangulation must cover.
struct SurfaceSpec {
    ShapeParams shape;
    AffineFrame frame;
    Box3 box;
    double param_radius = 0.0;

    bool is_monge() const;
    const char* kind_name() const;
};

SurfaceSpec make_sphere(const Vec3& center, double radius, double box_pad);
SurfaceSpec make_sphere_in_box(const Vec3& center, double radius, const Box3& box);
SurfaceSpec make_sinusoid(double amplitude, double omega1, double omega2, const AffineFrame& frame, const Box3& box,
                          double param_radius);
SurfaceSpec make_hyp_paraboloid(double a, double b, const AffineFrame& frame, const Box3& box, double param_radius);
SurfaceSpec make_paraboloid(double a, double b, double height, const AffineFrame& frame, double band_pad);
SurfaceSpec make_gaussian(double height, double sigma_u2, double sigma_v2, const AffineFrame& frame, double u_extent,
                          double v_extent, double band_pad);
SurfaceSpec make_ellipsoid(double a, double b, double c, const AffineFrame& frame, double band_pad);

// Linear semi-axis interpolation from a sphere toward a target ellipsoid over
// 51 steps; step 0 is the sphere, step 51 the target.
SurfaceSpec morph_spec(double r_sp, const Vec3& target_semi_axes, int step, const AffineFrame& frame, double band_pad);

// Value and derivatives of a Monge patch z = q(u, v).
struct MongeJet {
    double q, qu, qv, quu, quv, qvv;
};

MongeJet monge_jet(const ShapeParams& shape, double u, double v);

// Mean and Gaussian curvature of z = q(u, v) oriented so that the region above
// the graph is the negative level-set side.
void monge_curvatures(const MongeJet& j, double& mean, double& gauss);

// Exact curvatures at a parameter point; (u, v) is the Monge parameter pair,
// the (longitude, reduced latitude) pair for ellipsoids, and ignored for
// spheres.
void exact_curvatures(const SurfaceSpec& spec, double u, double v, double& mean, double& gauss);

// Curvatures of an axis-aligned ellipsoid at a surface point.
void ellipsoid_curvatures_at(const EllipsoidParams& e, const Vec3& p, double& mean, double& gauss);

struct NearestResult {
    double u = 0, v = 0;        // parameter of the foot point (Monge/ellipsoid)
    Vec3 foot_local{0, 0, 0};   // canonical-frame foot point
    Vec3 foot_world{0, 0, 0};
    double signed_dist = 0;
    bool converged = true;
    int iters = 0;
};

// Foot point of y on an axis-aligned ellipsoid via the Lagrange-multiplier
// root; robust for queries that do not sit deep inside near the evolute.
NearestResult ellipsoid_nearest(const EllipsoidParams& e, const Vec3& y_local);

// Gaussian-bump parameter where the mean curvature changes sign along an axis:
// kappa(u0, 0) = 0 (axis = 0) or kappa(0, v0) = 0 (axis = 1).
double gaussian_zero_curvature_param(const GaussianParams& g, int axis);

// Shortest-distance helper bound to one spec and one mesh size. Builds the
// parameter-lattice triangulation once (spacing <= h/2) and answers both rough
// far-field estimates and exact Newton-refined projections.
class SurfaceDistance {
public:
    // max_cap: largest `cap` the occupancy fast path must serve (band scans
    // use half_width + 2*sqrt(3)*h plus slack). Defaults to 9.5 h.
    SurfaceDistance(const SurfaceSpec& spec, double h, double max_cap = -1.0);

    const SurfaceSpec& spec() const { return spec_; }
    double h() const { return h_; }

    // Signed distance estimate. Returns +/-value when a surface sample lies
    // within `cap`, otherwise a value with |v| > cap.
    double estimate(const Vec3& x_world, double cap) const;

    // Exact signed distance and foot point (throws on Newton failure).
    NearestResult nearest(const Vec3& x_world) const;

    size_t vertex_count() const { return verts_.size(); }

private:
    struct Vertex {
        Vec3 pos;  // world frame
        float u, v;
    };

    double vertex_query(const Vec3& x, double cap, const Vertex** best) const;
    NearestResult monge_nearest(const Vec3& x_local, double u0, double v0) const;
    double side_sign(const Vec3& x_local) const;

    SurfaceSpec spec_;
    double h_;
    double mask_cap_ = 0;

    std::vector<Vertex> verts_;
    Vec3 vbb_lo_{0, 0, 0}, vbb_hi_{0, 0, 0};
    // uniform-cell index over the vertex cloud
    Vec3 cell_lo_{0, 0, 0};
    double cell_size_ = 0;
    std::array<int, 3> cell_dims_{0, 0, 0};
    std::vector<uint32_t> cell_start_;
    std::vector<uint32_t> cell_items_;
    // Chebyshev cell distance to the nearest occupied cell (saturated);
    // (d - 1) * cell_size_ lower-bounds the true vertex distance
    std::vector<uint8_t> cell_dist_;
};

}  // namespace mlcurv
