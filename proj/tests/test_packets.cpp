#include <doctest.h>

#include <cmath>
#include <cstring>
#include <map>
#include <set>

#include "mlcurv/packets.hpp"

using namespace mlcurv;

namespace {

bool packets_equal(const DataPacket& a, const DataPacket& b) {
    return std::memcmp(&a, &b, sizeof(DataPacket)) == 0;
}

DataPacket random_packet(Rng& rng, bool distinct_center = true) {
    DataPacket p;
    for (int n = 0; n < 27; ++n) {
        p.phi[n] = rng.uniform(-1, 1);
        p.normal[n] = rng.unit_axis();
    }
    if (distinct_center) {
        // center normal with distinct, nonzero |components|
        Vec3 c;
        do {
            c = rng.unit_axis();
        } while (std::fabs(std::fabs(c[0]) - std::fabs(c[1])) < 1e-3 ||
                 std::fabs(std::fabs(c[1]) - std::fabs(c[2])) < 1e-3 ||
                 std::fabs(std::fabs(c[0]) - std::fabs(c[2])) < 1e-3 || std::fabs(c[0]) < 1e-3 ||
                 std::fabs(c[1]) < 1e-3 || std::fabs(c[2]) < 1e-3);
        p.normal[kPacketCenter] = c;
    }
    p.hk = rng.uniform(-0.5, 0.5);
    p.h2kg = rng.uniform(-0.1, 0.1);
    return p;
}

std::multiset<long> phi_multiset(const DataPacket& p) {
    std::multiset<long> s;
    for (double v : p.phi) s.insert(std::lround(v * 1e12));
    return s;
}

}  // namespace

TEST_CASE("plane stencil collects into the fixed layout") {
    NarrowBandGrid g = make_uniform_grid({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}, 8);
    double h = g.h;
    NodalField phi(g);
    NodalVectorField nrm(g);
    nrm.degenerate.assign(g.size(), 0);
    for (size_t n = 0; n < g.size(); ++n) {
        phi[n] = g.position(int32_t(n))[2];
        nrm[n] = {0, 0, 1};
    }
    int32_t node = g.at(4, 4, 4);
    auto st = stencil27(g, node);
    DataPacket p = collect_features(g, st, phi, nrm);
    for (int n = 0; n < 27; ++n) {
        CHECK(p.normal[n][2] == 1.0);
        bool is_layer = std::fabs(p.phi[n]) < 1e-15 || std::fabs(std::fabs(p.phi[n]) - h) < 1e-15;
        CHECK(is_layer);
    }
    CHECK(p.phi[kPacketCenter] == phi[node]);

    auto flat = flatten(p);
    CHECK(flat.size() == 110);
    CHECK(flat[13] == p.phi[13]);
    CHECK(flat[108] == p.hk);
    CHECK(flat[109] == p.h2kg);

    // degenerate normal in the stencil is a failure
    nrm.degenerate[st[3]] = 1;
    CHECK_THROWS(collect_features(g, st, phi, nrm));
}

TEST_CASE("negative normalization flips sign exactly once") {
    Rng rng(3);
    DataPacket p = random_packet(rng);
    p.hk = -0.1;
    CHECK(packets_equal(negative_normalize(p), p));

    p.hk = 0.1;
    DataPacket q = negative_normalize(p);
    CHECK(q.hk == -0.1);
    CHECK(q.h2kg == p.h2kg);
    for (int n = 0; n < 27; ++n) {
        CHECK(q.phi[n] == -p.phi[n]);
        CHECK(q.normal[n][0] == -p.normal[n][0]);
    }
    CHECK(packets_equal(negative_normalize(q), q));
}

TEST_CASE("reorientation makes the center normal nonnegative with det +1") {
    Rng rng(17);
    for (int t = 0; t < 500; ++t) {
        DataPacket p = random_packet(rng, false);
        if (norm(p.normal[kPacketCenter]) < 1e-12) continue;
        SignedPerm perm = reorienting_perm(p.normal[kPacketCenter]);
        CHECK(perm.det() == 1);
        DataPacket q = reorient_standard(p);
        for (int c = 0; c < 3; ++c) CHECK(q.normal[kPacketCenter][c] >= 0.0);
        // multiset of |components| preserved
        std::multiset<long> a, b;
        for (int c = 0; c < 3; ++c) {
            a.insert(std::lround(std::fabs(p.normal[kPacketCenter][c]) * 1e12));
            b.insert(std::lround(std::fabs(q.normal[kPacketCenter][c]) * 1e12));
        }
        CHECK(a == b);
    }
}

TEST_CASE("already-nonnegative center normals are fixed points") {
    Rng rng(29);
    DataPacket p = random_packet(rng, false);
    p.normal[kPacketCenter] = {0.5, 0.25, 0.75};
    DataPacket q = reorient_standard(p);
    CHECK(packets_equal(q, p));

    p.normal[kPacketCenter] = {0, 0, 1};  // plane packet
    CHECK(packets_equal(reorient_standard(p), p));
}

TEST_CASE("all-negative center normal reorients to the nonnegative octant") {
    Rng rng(31);
    DataPacket p = random_packet(rng, false);
    p.normal[kPacketCenter] = {-0.3, -0.5, -0.8124038404635961};
    DataPacket q = reorient_standard(p);
    std::multiset<long> a{std::lround(0.3e12), std::lround(0.5e12), std::lround(0.8124038404635961 * 1e12)};
    std::multiset<long> b;
    for (int c = 0; c < 3; ++c) {
        CHECK(q.normal[kPacketCenter][c] >= 0);
        b.insert(std::lround(q.normal[kPacketCenter][c] * 1e12));
    }
    CHECK(a == b);
}

TEST_CASE("six standard forms realize the six center-normal permutations") {
    Rng rng(41);
    for (int t = 0; t < 50; ++t) {
        DataPacket p = random_packet(rng);
        auto forms = generate_std_packets(p);

        std::multiset<long> want;
        {
            auto c = reorient_standard(p).normal[kPacketCenter];
            std::array<double, 3> v = {c[0], c[1], c[2]};
            std::sort(v.begin(), v.end());
            std::array<int, 3> idx = {0, 1, 2};
            do {
                long key = 0;
                for (int i = 0; i < 3; ++i) key = key * 1000003 + std::lround(v[idx[i]] * 1e9);
                want.insert(key);
            } while (std::next_permutation(idx.begin(), idx.end()));
        }
        std::multiset<long> got;
        for (const auto& q : forms) {
            long key = 0;
            for (int i = 0; i < 3; ++i) key = key * 1000003 + std::lround(q.normal[kPacketCenter][i] * 1e9);
            got.insert(key);
        }
        CHECK(got == want);
        CHECK(got.size() == 6);

        for (const auto& q : forms) {
            // bit-identical curvature features, nonnegative center normals
            CHECK(q.hk == p.hk);
            CHECK(q.h2kg == p.h2kg);
            for (int c = 0; c < 3; ++c) CHECK(q.normal[kPacketCenter][c] >= 0);
            // idempotent under reorientation
            CHECK(packets_equal(reorient_standard(q), q));
            // phi multiset preserved
            CHECK(phi_multiset(q) == phi_multiset(p));
        }
    }
}

TEST_CASE("fully symmetric stencil collapses the six forms") {
    // sphere through the stencil center offset along (1,1,1): phi and normals
    // symmetric under coordinate permutations
    DataPacket p;
    double h = 1.0 / 32.0, d = 0.31;
    Vec3 c0 = {-d / std::sqrt(3.0), -d / std::sqrt(3.0), -d / std::sqrt(3.0)};
    int idx = 0;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
            for (int k = -1; k <= 1; ++k) {
                Vec3 x = {i * h, j * h, k * h};
                p.phi[idx] = norm(x - c0) - d;
                p.normal[idx] = normalized(x - c0);
                ++idx;
            }
    p.hk = -0.05;
    p.h2kg = 1e-3;
    auto forms = generate_std_packets(p);
    for (const auto& q : forms) {
        for (int n = 0; n < 27; ++n) CHECK(q.phi[n] == doctest::Approx(forms[0].phi[n]).epsilon(1e-15));
    }
}

TEST_CASE("lattice transforms are isometries") {
    std::vector<SignedPerm> gens = {SignedPerm::swap_xy(), SignedPerm::reflect_z(),
                                    reorienting_perm({-0.2, 0.5, 0.7}), reorienting_perm({-0.1, -0.2, -0.3})};
    auto offset = [](int n) { return std::array<int, 3>{n / 9 - 1, (n / 3) % 3 - 1, n % 3 - 1}; };
    for (const auto& t : gens) {
        for (int a = 0; a < 27; ++a)
            for (int b = 0; b < 27; ++b) {
                auto oa = t.apply(offset(a)), ob = t.apply(offset(b));
                int d0 = 0, d1 = 0;
                for (int c = 0; c < 3; ++c) {
                    int ua = offset(a)[c] - offset(b)[c];
                    int va = oa[c] - ob[c];
                    d0 += ua * ua;
                    d1 += va * va;
                }
                CHECK(d0 == d1);
            }
    }
}

TEST_CASE("standardization is invariant under quarter-turn pre-rotations") {
    Rng rng(53);
    // the 24 det(+1) signed permutations
    std::vector<SignedPerm> rots;
    int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (auto& pm : perms)
        for (int sx = -1; sx <= 1; sx += 2)
            for (int sy = -1; sy <= 1; sy += 2)
                for (int sz = -1; sz <= 1; sz += 2) {
                    SignedPerm t{{pm[0], pm[1], pm[2]}, {sx, sy, sz}};
                    if (t.det() == 1) rots.push_back(t);
                }
    REQUIRE(rots.size() == 24);

    auto form_key = [](const DataPacket& q) {
        std::string s(reinterpret_cast<const char*>(&q), sizeof(DataPacket));
        return s;
    };
    for (int t = 0; t < 10; ++t) {
        DataPacket p = random_packet(rng);
        auto base = generate_std_packets(p);
        std::multiset<std::string> want;
        for (const auto& q : base) want.insert(form_key(q));
        for (const auto& rot : rots) {
            DataPacket pr = transform_packet(p, rot);
            auto forms = generate_std_packets(pr);
            std::multiset<std::string> got;
            for (const auto& q : forms) got.insert(form_key(q));
            CHECK(got == want);
        }
    }
}
