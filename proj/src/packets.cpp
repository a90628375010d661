#include "mlcurv/packets.hpp"

#include <stdexcept>

namespace mlcurv {

static inline std::array<int, 3> offset_of(int n) { return {n / 9 - 1, (n / 3) % 3 - 1, n % 3 - 1}; }
static inline int index_of(const std::array<int, 3>& o) { return (o[0] + 1) * 9 + (o[1] + 1) * 3 + (o[2] + 1); }

int SignedPerm::det() const {
    int inv = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (perm[i] > perm[j]) ++inv;
    int parity = (inv % 2 == 0) ? 1 : -1;
    return parity * sign[0] * sign[1] * sign[2];
}

SignedPerm compose(const SignedPerm& a, const SignedPerm& b) {
    SignedPerm c;
    for (int i = 0; i < 3; ++i) {
        c.perm[i] = b.perm[a.perm[i]];
        c.sign[i] = a.sign[i] * b.sign[a.perm[i]];
    }
    return c;
}

SignedPerm reorienting_perm(const Vec3& v) {
    std::array<int, 3> flips{};
    int nflip = 0;
    for (int i = 0; i < 3; ++i) flips[i] = v[i] < 0.0 ? 1 : 0, nflip += flips[i];

    SignedPerm d;
    for (int i = 0; i < 3; ++i) d.sign[i] = flips[i] ? -1 : 1;
    if (nflip % 2 == 0) return d;

    int i1, i2;
    if (nflip == 3) {
        i1 = 0;
        i2 = 1;
    } else {
        i1 = i2 = -1;
        for (int i = 0; i < 3; ++i) {
            if (flips[i] && i1 < 0) i1 = i;
            if (!flips[i] && i2 < 0) i2 = i;
        }
    }
    SignedPerm s;
    std::swap(s.perm[i1], s.perm[i2]);
    return compose(s, d);
}

DataPacket transform_packet(const DataPacket& p, const SignedPerm& t) {
    DataPacket out;
    out.hk = p.hk;
    out.h2kg = p.h2kg;
    for (int n = 0; n < 27; ++n) {
        int m = index_of(t.apply(offset_of(n)));
        out.phi[m] = p.phi[n];
        out.normal[m] = t.apply(p.normal[n]);
    }
    return out;
}

DataPacket collect_features(const NarrowBandGrid& grid, const Stencil27& stencil, const NodalField& phi,
                            const NodalVectorField& normals) {
    (void)grid;
    DataPacket p;
    for (int n = 0; n < 27; ++n) {
        int32_t node = stencil[n];
        if (!normals.degenerate.empty() && normals.degenerate[node])
            throw std::runtime_error("collect_features: degenerate normal in stencil");
        p.phi[n] = phi[node];
        p.normal[n] = normals[node];
    }
    return p;
}

DataPacket negative_normalize(const DataPacket& p) {
    if (!(p.hk > 0)) return p;
    DataPacket out = p;
    out.hk = -p.hk;
    for (int n = 0; n < 27; ++n) {
        out.phi[n] = -p.phi[n];
        out.normal[n] = -p.normal[n];
    }
    return out;
}

DataPacket reorient_standard(const DataPacket& p) {
    const Vec3& c = p.normal[kPacketCenter];
    if (c[0] == 0 && c[1] == 0 && c[2] == 0)
        throw std::runtime_error("reorient_standard: zero center normal");
    return transform_packet(p, reorienting_perm(c));
}

std::array<DataPacket, 6> generate_std_packets(const DataPacket& p0) {
    const SignedPerm diag = SignedPerm::swap_xy();
    const SignedPerm zref = SignedPerm::reflect_z();

    DataPacket p1 = reorient_standard(p0);
    DataPacket p2 = transform_packet(p1, diag);

    std::array<DataPacket, 6> out{p1, p2, DataPacket{}, DataPacket{}, DataPacket{}, DataPacket{}};
    int slot = 2;
    for (const DataPacket* q : {&p1, &p2}) {
        DataPacket qz = transform_packet(*q, zref);
        DataPacket q1 = reorient_standard(qz);
        out[slot++] = q1;
        out[slot++] = transform_packet(q1, diag);
    }
    return out;
}

std::array<double, kFeatureCount> flatten(const DataPacket& p) {
    std::array<double, kFeatureCount> f{};
    for (int n = 0; n < 27; ++n) f[n] = p.phi[n];
    for (int n = 0; n < 27; ++n)
        for (int c = 0; c < 3; ++c) f[27 + 3 * n + c] = p.normal[n][c];
    f[108] = p.hk;
    f[109] = p.h2kg;
    return f;
}

std::array<float, kFeatureCount> flatten_f32(const DataPacket& p) {
    auto d = flatten(p);
    std::array<float, kFeatureCount> f{};
    for (int i = 0; i < kFeatureCount; ++i) f[i] = float(d[i]);
    return f;
}

DataPacket unflatten(const float* row) {
    DataPacket p;
    for (int n = 0; n < 27; ++n) p.phi[n] = row[n];
    for (int n = 0; n < 27; ++n)
        for (int c = 0; c < 3; ++c) p.normal[n][c] = row[27 + 3 * n + c];
    p.hk = row[108];
    p.h2kg = row[109];
    return p;
}

}  // namespace mlcurv
