#include "mlcurv/grid.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mlcurv {

NarrowBandGrid build_band_grid(const SurfaceDistance& sd, double h, double half_width) {
    if (!(h > 0)) throw std::invalid_argument("build_band_grid: h must be positive");
    const Box3& box = sd.spec().box;

    NarrowBandGrid g;
    g.h = h;
    g.box_lo = box.lo;
    g.box_hi = box.hi;

    // snap the origin to the lattice of h-multiples so node coordinates never drift
    int64_t base[3], top[3];
    for (int k = 0; k < 3; ++k) {
        base[k] = int64_t(std::floor(box.lo[k] / h + 1e-9));
        top[k] = int64_t(std::ceil(box.hi[k] / h - 1e-9));
        g.origin[k] = double(base[k]) * h;
        g.dims[k] = int(top[k] - base[k]) + 1;
        if (g.dims[k] < 4) throw std::invalid_argument("build_band_grid: box must span at least 4 nodes per axis");
    }

    const double threshold = half_width + 2.0 * std::sqrt(3.0) * h;
    const double cap = threshold + h;

    size_t total = size_t(g.dims[0]) * g.dims[1] * g.dims[2];
    std::vector<uint8_t> keep(total, 0);
    parallel_chunks(size_t(g.dims[0]), size_t(g.dims[0]), [&](size_t, size_t ib, size_t ie) {
        for (size_t i = ib; i < ie; ++i) {
            double x = g.origin[0] + double(i) * h;
            for (int j = 0; j < g.dims[1]; ++j) {
                double y = g.origin[1] + double(j) * h;
                size_t row = (i * g.dims[1] + j) * g.dims[2];
                for (int k = 0; k < g.dims[2]; ++k) {
                    double z = g.origin[2] + double(k) * h;
                    double est = sd.estimate({x, y, z}, cap);
                    keep[row + k] = std::fabs(est) <= threshold ? 1 : 0;
                }
            }
        }
    });

    g.lattice.assign(total, -1);
    size_t count = 0;
    for (size_t t = 0; t < total; ++t) count += keep[t];
    if (count == 0) throw std::runtime_error("build_band_grid: empty active set (surface outside box)");
    g.nodes.reserve(count);
    for (int i = 0; i < g.dims[0]; ++i)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int k = 0; k < g.dims[2]; ++k) {
                size_t t = (size_t(i) * g.dims[1] + j) * g.dims[2] + k;
                if (!keep[t]) continue;
                g.lattice[t] = int32_t(g.nodes.size());
                g.nodes.push_back({i, j, k});
            }
    return g;
}

NarrowBandGrid make_uniform_grid(const Vec3& lo, const Vec3& hi, int cells) {
    if (cells < 3) throw std::invalid_argument("make_uniform_grid: need at least 3 cells");
    NarrowBandGrid g;
    g.h = (hi[0] - lo[0]) / cells;
    g.origin = lo;
    g.dims = {cells + 1, cells + 1, cells + 1};
    g.box_lo = lo;
    g.box_hi = hi;
    size_t total = size_t(g.dims[0]) * g.dims[1] * g.dims[2];
    g.lattice.resize(total);
    g.nodes.reserve(total);
    for (int i = 0; i <= cells; ++i)
        for (int j = 0; j <= cells; ++j)
            for (int k = 0; k <= cells; ++k) {
                size_t t = (size_t(i) * g.dims[1] + j) * g.dims[2] + k;
                g.lattice[t] = int32_t(g.nodes.size());
                g.nodes.push_back({i, j, k});
            }
    return g;
}

std::optional<Stencil27> try_stencil27(const NarrowBandGrid& grid, int32_t node) {
    Stencil27 s;
    const auto& c = grid.nodes[node];
    int idx = 0;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
            for (int dk = -1; dk <= 1; ++dk) {
                int32_t n = grid.at(c[0] + di, c[1] + dj, c[2] + dk);
                if (n < 0) return std::nullopt;
                s[idx++] = n;
            }
    return s;
}

Stencil27 stencil27(const NarrowBandGrid& grid, int32_t node) {
    auto s = try_stencil27(grid, node);
    if (!s) throw std::runtime_error("stencil27: incomplete stencil at node " + std::to_string(node));
    return *s;
}

static void locate_cell(const NarrowBandGrid& g, const Vec3& p, int c[3], double w[3]) {
    for (int k = 0; k < 3; ++k) {
        double t = (p[k] - g.origin[k]) / g.h;
        int i = int(std::floor(t));
        i = std::max(0, std::min(i, g.dims[k] - 2));
        c[k] = i;
        w[k] = t - i;
    }
}

bool can_interpolate(const NarrowBandGrid& g, const Vec3& p) {
    int c[3];
    double w[3];
    locate_cell(g, p, c, w);
    for (int b = 0; b < 8; ++b)
        if (g.at(c[0] + (b & 1), c[1] + ((b >> 1) & 1), c[2] + ((b >> 2) & 1)) < 0) return false;
    return true;
}

double trilinear_interpolate(const NarrowBandGrid& g, const NodalField& f, const Vec3& p) {
    int c[3];
    double w[3];
    locate_cell(g, p, c, w);
    double acc = 0.0;
    for (int b = 0; b < 8; ++b) {
        int bi = b & 1, bj = (b >> 1) & 1, bk = (b >> 2) & 1;
        int32_t n = g.at(c[0] + bi, c[1] + bj, c[2] + bk);
        if (n < 0) {
            char msg[128];
            std::snprintf(msg, sizeof msg, "trilinear_interpolate: missing corner (%d,%d,%d)", c[0] + bi, c[1] + bj,
                          c[2] + bk);
            throw std::runtime_error(msg);
        }
        double weight = (bi ? w[0] : 1 - w[0]) * (bj ? w[1] : 1 - w[1]) * (bk ? w[2] : 1 - w[2]);
        acc += weight * f[n];
    }
    return acc;
}

std::vector<int32_t> interface_nodes(const NarrowBandGrid& g, const NodalField& phi) {
    std::vector<int32_t> out;
    const int off[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
    for (int32_t n = 0; n < int32_t(g.size()); ++n) {
        double pn = phi[n];
        for (const auto& d : off) {
            int32_t m = g.neighbor(n, d[0], d[1], d[2]);
            if (m >= 0 && pn * phi[m] <= 0.0) {
                out.push_back(n);
                break;
            }
        }
    }
    return out;
}

}  // namespace mlcurv
