#pragma once

#include "mlcurv/grid.hpp"
#include "mlcurv/util.hpp"

namespace mlcurv {

enum class SampleClass : uint8_t { NonSaddle = 0, Saddle = 1 };

// 110-feature stencil record: 27 level-set values and 27 unit normals in
// lexicographic (i,j,k) order (i slowest, center at 13), plus the
// dimensionless curvatures interpolated at the node's interface projection.
struct DataPacket {
    std::array<double, 27> phi{};
    std::array<Vec3, 27> normal{};
    double hk = 0;
    double h2kg = 0;
};

constexpr int kPacketCenter = 13;
constexpr int kFeatureCount = 110;

// Signed axis permutation; the only lattice transforms this module ever
// applies. (P v)[a] = sign[a] * v[perm[a]].
struct SignedPerm {
    std::array<int, 3> perm{0, 1, 2};
    std::array<int, 3> sign{1, 1, 1};

    static SignedPerm identity() { return {}; }
    static SignedPerm swap_xy() { return {{1, 0, 2}, {1, 1, 1}}; }
    static SignedPerm reflect_z() { return {{0, 1, 2}, {1, 1, -1}}; }

    Vec3 apply(const Vec3& v) const {
        return {sign[0] * v[perm[0]], sign[1] * v[perm[1]], sign[2] * v[perm[2]]};
    }
    std::array<int, 3> apply(const std::array<int, 3>& o) const {
        return {sign[0] * o[perm[0]], sign[1] * o[perm[1]], sign[2] * o[perm[2]]};
    }
    int det() const;
};

SignedPerm compose(const SignedPerm& a, const SignedPerm& b);  // acts as a after b

// det(+1) signed permutation taking v to the all-nonnegative octant:
// component-wise sign flips, and when the flip count is odd a compensating
// swap of the lowest flipped axis with the lowest unflipped one (axes 0 and 1
// when all three flip). Zero components count as nonnegative.
SignedPerm reorienting_perm(const Vec3& v);

DataPacket transform_packet(const DataPacket& p, const SignedPerm& t);

// Fill a packet's stencil features from nodal fields; hk/h2kg are left to the
// caller. Throws if any stencil normal is flagged degenerate.
DataPacket collect_features(const NarrowBandGrid& grid, const Stencil27& stencil, const NodalField& phi,
                            const NodalVectorField& normals);

// Sign flip of (phi, normals, hk) when hk > 0; h2kg is untouched.
DataPacket negative_normalize(const DataPacket& p);

// Rotate the packet so the center normal has all components nonnegative.
DataPacket reorient_standard(const DataPacket& p);

// The six standard forms: reorientation, diagonal-plane reflection, and for
// each of those a z-plane reflection + reorientation and its diagonal
// reflection. Center normals realize the six permutations of the reoriented
// components.
std::array<DataPacket, 6> generate_std_packets(const DataPacket& p0);

std::array<double, kFeatureCount> flatten(const DataPacket& p);
std::array<float, kFeatureCount> flatten_f32(const DataPacket& p);
DataPacket unflatten(const float* row);

}  // namespace mlcurv
