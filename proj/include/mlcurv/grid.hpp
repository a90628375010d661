#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mlcurv/surfaces.hpp"
#include "mlcurv/util.hpp"

namespace mlcurv {

// Narrow-band Cartesian grid with uniform spacing h. Active nodes are a
// lexicographically ordered subset of the lattice covering the computational
// box; a dense lattice->node table makes neighbor lookups O(1). Immutable
// after construction.
struct NarrowBandGrid {
    double h = 0;
    Vec3 origin{0, 0, 0};            // lattice node (0,0,0); origin + ijk*h is exact
    std::array<int, 3> dims{0, 0, 0};
    Vec3 box_lo{0, 0, 0}, box_hi{0, 0, 0};  // requested computational walls

    std::vector<std::array<int32_t, 3>> nodes;  // active nodes, lexicographic (i slowest)
    std::vector<int32_t> lattice;               // dims-sized table, -1 where inactive

    size_t size() const { return nodes.size(); }

    Vec3 position(int32_t n) const {
        const auto& c = nodes[n];
        return {origin[0] + c[0] * h, origin[1] + c[1] * h, origin[2] + c[2] * h};
    }

    int32_t at(int i, int j, int k) const {
        if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2]) return -1;
        return lattice[(size_t(i) * dims[1] + j) * dims[2] + k];
    }

    int32_t neighbor(int32_t n, int di, int dj, int dk) const {
        const auto& c = nodes[n];
        return at(c[0] + di, c[1] + dj, c[2] + dk);
    }

    double wall_distance(const Vec3& p) const {
        double d = 1e300;
        for (int k = 0; k < 3; ++k) d = std::min({d, p[k] - box_lo[k], box_hi[k] - p[k]});
        return d;
    }
};

struct NodalField {
    const NarrowBandGrid* grid = nullptr;
    std::vector<double> v;

    NodalField() = default;
    explicit NodalField(const NarrowBandGrid& g, double fill = 0.0) : grid(&g), v(g.size(), fill) {}
    double& operator[](size_t i) { return v[i]; }
    double operator[](size_t i) const { return v[i]; }
};

struct NodalVectorField {
    const NarrowBandGrid* grid = nullptr;
    std::vector<Vec3> v;
    std::vector<uint8_t> degenerate;  // set for normals with vanishing gradient

    NodalVectorField() = default;
    explicit NodalVectorField(const NarrowBandGrid& g) : grid(&g), v(g.size(), Vec3{0, 0, 0}) {}
    Vec3& operator[](size_t i) { return v[i]; }
    const Vec3& operator[](size_t i) const { return v[i]; }
};

// Band construction: keeps every lattice node of the box whose estimated
// |phi| <= half_width + 2*sqrt(3)*h. The margin leaves complete stencils (and
// valid central differences on their neighbors) for every interface node.
NarrowBandGrid build_band_grid(const SurfaceDistance& sd, double h, double half_width);

// Fully active uniform grid with `cells` cells per side over [lo, hi]^3.
NarrowBandGrid make_uniform_grid(const Vec3& lo, const Vec3& hi, int cells);

// 27 node indices of the (i,j,k) in {-1,0,1}^3 block, i slowest; entry 13 is
// the center. Throws on any missing neighbor.
using Stencil27 = std::array<int32_t, 27>;
Stencil27 stencil27(const NarrowBandGrid& grid, int32_t node);
std::optional<Stencil27> try_stencil27(const NarrowBandGrid& grid, int32_t node);

// Standard 8-corner trilinear blend; exact for fields multilinear in the
// coordinates. Throws naming the first missing corner.
double trilinear_interpolate(const NarrowBandGrid& grid, const NodalField& field, const Vec3& p);
bool can_interpolate(const NarrowBandGrid& grid, const Vec3& p);

// Nodes whose phi changes sign (or vanishes) against at least one of the six
// axis neighbors, in lexicographic node order.
std::vector<int32_t> interface_nodes(const NarrowBandGrid& grid, const NodalField& phi);

}  // namespace mlcurv
