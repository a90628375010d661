#include "mlcurv/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mlcurv/pipeline.hpp"

namespace mlcurv {

double ease(double t, double a_e, double A_e, double b_e, double B_e) {
    if (!(a_e < b_e) || !(A_e < B_e)) throw std::invalid_argument("ease: invalid bounds");
    if (t < a_e) return A_e;
    if (t > b_e) return B_e;
    return A_e + 0.5 * (B_e - A_e) * (1.0 + std::sin(M_PI * (t - a_e) / (b_e - a_e) - M_PI / 2.0));
}

std::vector<double> rand_linspace(double lo, double hi, int n, Rng& rng, double jitter) {
    if (n < 1) throw std::invalid_argument("rand_linspace: n must be >= 1");
    double w = (hi - lo) / n;
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = lo + (i + 0.5 + jitter * (rng.uniform01() - 0.5)) * w;
    return out;
}

BalanceInfo histogram_subsample(std::vector<LearningTuple>& tuples, int max_bins, Rng& rng) {
    BalanceInfo info;
    if (tuples.empty() || max_bins < 1) return info;

    double lo = 1e300, hi = -1e300;
    for (const auto& t : tuples) {
        double k = std::fabs(double(t.target));
        lo = std::min(lo, k);
        hi = std::max(hi, k);
    }
    int bins = hi - lo > 0 ? max_bins : 1;
    auto bin_of = [&](double k) {
        if (bins == 1) return 0;
        int b = int((k - lo) / (hi - lo) * bins);
        return std::min(b, bins - 1);
    };

    std::vector<std::vector<uint32_t>> members(bins);
    for (uint32_t i = 0; i < tuples.size(); ++i) members[bin_of(std::fabs(double(tuples[i].target)))].push_back(i);

    std::vector<size_t> nonempty;
    for (const auto& m : members)
        if (!m.empty()) nonempty.push_back(m.size());
    std::sort(nonempty.begin(), nonempty.end());
    double median = nonempty.size() % 2 ? double(nonempty[nonempty.size() / 2])
                                        : 0.5 * (nonempty[nonempty.size() / 2 - 1] + nonempty[nonempty.size() / 2]);
    // floored at one survivor per bin: literal caps below 1 would empty any
    // sparsely populated histogram outright
    double cap = std::max(1.0, std::min(median / 3.0, 1.5 * double(nonempty.front())));
    size_t keep_max = size_t(std::floor(cap));

    std::vector<uint8_t> keep(tuples.size(), 1);
    for (auto& m : members) {
        if (m.size() <= keep_max) continue;
        rng.shuffle(m);
        for (size_t t = keep_max; t < m.size(); ++t) keep[m[t]] = 0;
    }
    std::vector<LearningTuple> out;
    out.reserve(tuples.size());
    for (uint32_t i = 0; i < tuples.size(); ++i)
        if (keep[i]) out.push_back(tuples[i]);
    tuples.swap(out);

    info.valid = true;
    info.lo = lo;
    info.hi = hi;
    info.bins = bins;
    info.cap = cap;
    return info;
}

static double round_to_h(double x, double h) { return std::floor(x / h + 0.5) * h; }

// --- shared sampling helpers ---------------------------------------------------

namespace {

struct CandidateNode {
    int32_t node;
    Vec3 x;
    double hk, h2kg;     // interpolated at the interface projection
    double hk_star;      // h * exact mean curvature at the foot point
    Stencil27 stencil;
};

// Runs the per-node eligibility chain shared by every sampler: inside the
// sampling sphere, away from the walls, complete stencil, clean normals,
// valid curvature interpolation, and a converged exact projection.
template <typename Filter>
void collect_candidates(const FieldPipeline& f, const SurfaceDistance& sd, double h, const Vec3& sphere_center,
                        double r_sam, uint64_t node_seed, const Filter& filter,
                        std::vector<LearningTuple>& out_ns, std::vector<LearningTuple>* out_sd) {
    const auto& g = f.grid;
    const size_t n_iface = f.iface.size();
    const size_t chunks = 16;

    struct ChunkOut {
        std::vector<LearningTuple> ns, sd;
    };
    std::vector<ChunkOut> parts(chunks);

    parallel_chunks(n_iface, chunks, [&](size_t chunk, size_t b, size_t e) {
        auto& part = parts[chunk];
        for (size_t t = b; t < e; ++t) {
            int32_t node = f.iface[t];
            Vec3 x = g.position(node);
            if (norm(x - sphere_center) > r_sam) continue;
            if (g.wall_distance(x) < 4.0 * h) continue;
            auto st = try_stencil27(g, node);
            if (!st) continue;
            if (f.normals.nhat.degenerate[node]) continue;
            if (!stencil_normals_ok(*st, f.normals.nhat)) continue;

            Vec3 xg = project_to_interface(x, f.phi[node], f.normals.nhat[node]);
            double km, kg;
            if (!interp_curvatures_at(g, f.curv, xg, km, kg)) continue;

            NearestResult nr = sd.nearest(x);
            if (!nr.converged) continue;
            double mean_star, gauss_star;
            exact_curvatures(sd.spec(), nr.u, nr.v, mean_star, gauss_star);

            CandidateNode c{node, x, h * km, h * h * kg, h * mean_star, *st};
            const auto& cnode = g.nodes[node];
            uint64_t key = (uint64_t(uint32_t(cnode[0])) << 42) ^ (uint64_t(uint32_t(cnode[1])) << 21) ^
                           uint64_t(uint32_t(cnode[2]));
            Rng nrng(hash_mix(node_seed, key));

            bool is_ns;
            double target;
            if (!filter(c, nrng, is_ns, target)) continue;

            DataPacket p = collect_features(g, c.stencil, f.phi, f.normals.nhat);
            p.hk = c.hk;
            p.h2kg = c.h2kg;
            if (is_ns) p = negative_normalize(p);
            auto forms = generate_std_packets(p);
            for (const auto& q : forms) {
                LearningTuple lt;
                lt.features = flatten_f32(q);
                lt.target = float(target);
                (is_ns ? part.ns : part.sd).push_back(lt);
            }
        }
    });

    for (auto& part : parts) {
        out_ns.insert(out_ns.end(), part.ns.begin(), part.ns.end());
        if (out_sd) out_sd->insert(out_sd->end(), part.sd.begin(), part.sd.end());
    }
}

Vec3 gram_schmidt_axis(Rng& rng, std::array<Vec3, 3>& basis) {
    // filled on first call: three orthonormalized standard-normal draws
    for (int k = 0; k < 3; ++k) {
        Vec3 v = {rng.normal(), rng.normal(), rng.normal()};
        for (int pidx = 0; pidx < k; ++pidx) v = v - dot(v, basis[pidx]) * basis[pidx];
        basis[k] = normalized(v);
    }
    return basis[0];
}

}  // namespace

// --- spherical data (Alg. 3 analog) -------------------------------------------

Dataset generate_spherical_dataset(int eta, const SphereGenParams& p, uint64_t seed) {
    if (!(p.hk_min > 0) || !(p.hk_min < p.hk_max) || !(p.hk_max <= 2.0 / 3.0 + 1e-12))
        throw std::invalid_argument("generate_spherical_dataset: curvature bounds out of range");
    const double h = std::pow(2.0, -eta);
    const double k_min = p.hk_min / h, k_max = p.hk_max / h;

    Dataset ds;
    ds.cls = SampleClass::NonSaddle;
    ds.eta = eta;
    ds.h = h;
    ds.seed = seed;
    ds.provenance = "spheres";

    Rng rng(seed);
    std::vector<double> tgt_k = rand_linspace(k_max, k_min, p.n_spheres, rng);

    for (int si = 0; si < p.n_spheres; ++si) {
        double k_star = tgt_k[si];
        double r = 1.0 / k_star;
        if (r < 1.5 * h * (1.0 - 1e-12)) continue;  // unresolvable at this mesh size
        Rng sub = rng.fork(uint64_t(si) + 1);

        Vec3 center = sub.uniform_box(-h / 2, h / 2);
        double theta = sub.uniform(0, 2 * M_PI);
        double phi_ang = std::acos(2.0 * sub.uniform01() - 1.0);
        Vec3 p_on = {center[0] + r * std::cos(theta) * std::sin(phi_ang),
                     center[1] + r * std::sin(theta) * std::sin(phi_ang), center[2] + r * std::cos(phi_ang)};
        Vec3 bc = {round_to_h(p_on[0], h), round_to_h(p_on[1], h), round_to_h(p_on[2], h)};
        Box3 box{bc - Vec3{16 * h, 16 * h, 16 * h}, bc + Vec3{16 * h, 16 * h, 16 * h}};

        SurfaceSpec spec = make_sphere_in_box(center, r, box);
        SurfaceDistance sd(spec, h);
        FieldPipeline f = run_field_pipeline(sd, h, 3 * h, p.nu, p.eps_rnd, &sub);

        std::vector<LearningTuple> pool;
        double target = -(h / r);
        for (int32_t node : f.iface) {
            auto st = try_stencil27(f.grid, node);
            if (!st) continue;
            if (f.normals.nhat.degenerate[node] || !stencil_normals_ok(*st, f.normals.nhat)) continue;
            Vec3 x = f.grid.position(node);
            Vec3 xg = project_to_interface(x, f.phi[node], f.normals.nhat[node]);
            double km, kg;
            if (!interp_curvatures_at(f.grid, f.curv, xg, km, kg)) continue;
            double h2kg = h * h * kg;
            if (h2kg < p.h2kg_min_ns) continue;

            DataPacket pk = collect_features(f.grid, *st, f.phi, f.normals.nhat);
            pk.hk = h * km;
            pk.h2kg = h2kg;
            pk = negative_normalize(pk);
            for (const auto& q : generate_std_packets(pk)) {
                LearningTuple lt;
                lt.features = flatten_f32(q);
                lt.target = float(target);
                pool.push_back(lt);
            }
        }
        std::vector<uint32_t> order(pool.size());
        for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
        sub.shuffle(order);
        size_t take = std::min(size_t(p.samples_per_sphere), pool.size());
        for (size_t t = 0; t < take; ++t) ds.tuples.push_back(pool[order[t]]);
    }
    return ds;
}

// --- sinusoidal data (Algs. 4/5 analog) ----------------------------------------

std::pair<Dataset, Dataset> generate_sinusoidal_datasets(int eta, const SinusoidGenParams& p, uint64_t seed) {
    const double h = std::pow(2.0, -eta);
    const double k_min = p.hk_min / h, k_max = p.hk_max / h;
    const double a_min = 5.0 / k_max, a_max = 1.0 / (2.0 * k_min);
    const double hk_max_low = 0.5 * p.hk_max, hk_max_up = p.hk_max;

    Dataset ns, sdset;
    ns.cls = SampleClass::NonSaddle;
    sdset.cls = SampleClass::Saddle;
    for (Dataset* d : {&ns, &sdset}) {
        d->eta = eta;
        d->h = h;
        d->seed = seed;
        d->provenance = "sinusoids";
    }

    Rng rng(seed);
    std::vector<double> hk_crest = rand_linspace(hk_max_low, hk_max_up, p.nhk, rng);
    std::vector<double> amps = rand_linspace(a_min, a_max, p.na, rng);

    for (int ai = 0; ai < p.na; ++ai) {
        double amp = amps[ai];
        std::vector<LearningTuple> buf_ns, buf_sd;

        for (int s = 0; s < p.nhk; ++s) {
            double ks = hk_crest[s] / h;
            double w1 = std::sqrt(ks / amp);
            for (int t = s; t < p.nhk; ++t) {
                double kt = hk_crest[t] / h;
                double w2sq = 2.0 * kt / amp - w1 * w1;
                if (!(w2sq > 0)) continue;  // imaginary second frequency
                double w2 = std::sqrt(w2sq);

                uint64_t combo = (uint64_t(ai) * 64 + s) * 64 + t;
                Rng crng = rng.fork(combo + 0x100);
                std::array<Vec3, 3> basis;
                gram_schmidt_axis(crng, basis);

                for (int ei = 0; ei < 3; ++ei) {
                    std::vector<double> angles = rand_linspace(-M_PI / 2, M_PI / 2, p.nt, crng);
                    for (int ti = 0; ti + 1 < p.nt; ++ti) {
                        Vec3 shift = crng.uniform_box(-h / 2, h / 2);
                        double r_sam =
                            6 * h + std::min(1.5 * a_max, std::max(amp, 2.0 * 2.0 * M_PI * std::max(1 / w1, 1 / w2)));
                        Box3 box{shift - Vec3{r_sam, r_sam, r_sam}, shift + Vec3{r_sam, r_sam, r_sam}};
                        AffineFrame frame = AffineFrame::make(shift, basis[ei], angles[ti]);
                        SurfaceSpec spec = make_sinusoid(amp, w1, w2, frame, box, r_sam + 20 * h);
                        SurfaceDistance sd(spec, h);
                        FieldPipeline f = run_field_pipeline(sd, h, 3 * h, p.nu, p.eps_rnd, &crng);

                        uint64_t node_seed = hash_mix(seed, (combo * 64 + uint64_t(ei)) * 64 + uint64_t(ti) + 7);
                        auto filter = [&](const CandidateNode& c, Rng& nrng, bool& is_ns, double& target) {
                            if (c.h2kg >= p.h2kg_min_ns) {
                                double a_hk = std::fabs(c.hk_star);
                                if (a_hk < p.hk_min) return false;
                                double pr = a_hk <= hk_max_low
                                                ? ease(a_hk, p.hk_min, p.min_hk_pr, hk_max_low, p.max_hk_low_pr)
                                                : ease(a_hk, hk_max_low, p.max_hk_low_pr, hk_max_up, p.max_hk_up_pr);
                                if (nrng.uniform01() > pr) return false;
                                is_ns = true;
                                target = -a_hk;
                            } else {
                                double a_kg = std::fabs(c.h2kg);
                                if (a_kg < p.ih2kg_min) return false;
                                double pr = ease(a_kg, p.ih2kg_min, p.min_ih2kg_pr, p.ih2kg_max_low, p.max_ih2kg_pr);
                                if (nrng.uniform01() > pr) return false;
                                is_ns = false;
                                target = c.hk_star;
                            }
                            return true;
                        };
                        collect_candidates(f, sd, h, shift, r_sam, node_seed, filter, buf_ns, &buf_sd);
                    }
                }
            }
        }
        Rng brng = rng.fork(0xb000 + uint64_t(ai));
        histogram_subsample(buf_ns, p.ns_bins, brng);
        histogram_subsample(buf_sd, p.sd_bins, brng);
        ns.tuples.insert(ns.tuples.end(), buf_ns.begin(), buf_ns.end());
        sdset.tuples.insert(sdset.tuples.end(), buf_sd.begin(), buf_sd.end());
    }

    Rng frng = rng.fork(0xf17a1);
    ns.balance = histogram_subsample(ns.tuples, p.ns_bins, frng);
    sdset.balance = histogram_subsample(sdset.tuples, p.sd_bins, frng);
    return {std::move(ns), std::move(sdset)};
}

// --- hyperbolic-paraboloidal data (Algs. 6/7 analog) --------------------------

Dataset generate_hyp_paraboloidal_dataset(int eta, const HypParaboloidGenParams& p, uint64_t seed) {
    const double h = std::pow(2.0, -eta);
    const double hk_max_low = p.hk_max / 5.0;

    Dataset ds;
    ds.cls = SampleClass::Saddle;
    ds.eta = eta;
    ds.h = h;
    ds.seed = seed;
    ds.provenance = "hyp_paraboloids";

    Rng rng(seed);
    std::vector<double> hk_attain_arr = rand_linspace(hk_max_low, p.hk_max, p.nhk, rng);

    for (int j = 0; j < p.nhk; ++j) {
        double hk_attain = hk_attain_arr[j];
        double scale = p.nhk > 1 ? 1.0 + 2.0 * double(j) / double(p.nhk - 1) : 1.0;
        int nr = int(std::lround(p.nr * scale));
        std::vector<double> ratios = rand_linspace(1.0, p.r_max, nr, rng);

        for (int ri = 0; ri < nr; ++ri) {
            double ratio = ratios[ri];
            bool b_over_a = rng.uniform01() < 0.5;

            double kj = hk_attain / h;
            double a, b, uj = 0, vj = 0;
            if (b_over_a) {
                // steepest curvature is negative, at (+-u_j, 0)
                if (ratio < 3.0) {
                    a = 0.5 * kj * std::pow(3.0 / ratio, 1.5);
                    uj = std::sqrt(3.0 / ratio - 1.0) / (2.0 * a);
                    if (2.0 * uj < 1.5 * h) continue;  // critical points unresolvable
                } else {
                    a = kj / (ratio - 1.0);
                }
                b = ratio * a;
            } else {
                // mirrored: positive extremum on the v-axis
                if (ratio < 3.0) {
                    b = 0.5 * kj * std::pow(3.0 / ratio, 1.5);
                    vj = std::sqrt(3.0 / ratio - 1.0) / (2.0 * b);
                    if (2.0 * vj < 1.5 * h) continue;
                } else {
                    b = kj / (ratio - 1.0);
                }
                a = ratio * b;
            }

            std::vector<LearningTuple> buf;
            double r_sam = std::max(uj, vj) + 16 * h;
            int nt = int(std::lround(p.nt * scale));

            for (int l = 0; l < nt; ++l) {
                Rng crng = rng.fork(((uint64_t(j) * 4096 + ri) * 4096 + l) + 0x7000000);
                double theta = 2 * M_PI * crng.uniform01();
                Vec3 axis = crng.unit_axis();
                Vec3 shift = crng.uniform_box(-h / 2, h / 2);
                AffineFrame frame = AffineFrame::make(shift, axis, theta);

                double q_u = a * r_sam * r_sam, q_v = -b * r_sam * r_sam;
                double z0 = std::max(-32.0 * h, std::min(q_u, q_v)) - 4 * h;
                double z1 = std::min(32.0 * h, std::max(q_u, q_v)) + 4 * h;
                // world AABB of the affine-transformed cylinder, then its cube hull
                Vec3 lo, hi;
                for (int axi = 0; axi < 3; ++axi) {
                    double rxy = r_sam * std::hypot(frame.rot.m[3 * axi + 0], frame.rot.m[3 * axi + 1]);
                    double za = frame.rot.m[3 * axi + 2] * z0, zb = frame.rot.m[3 * axi + 2] * z1;
                    lo[axi] = shift[axi] + std::min(za, zb) - rxy;
                    hi[axi] = shift[axi] + std::max(za, zb) + rxy;
                }
                double side = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
                Vec3 c = 0.5 * (lo + hi);
                Box3 box{c - Vec3{side / 2, side / 2, side / 2}, c + Vec3{side / 2, side / 2, side / 2}};

                SurfaceSpec spec = make_hyp_paraboloid(a, b, frame, box, r_sam + 20 * h);
                SurfaceDistance sd(spec, h);
                FieldPipeline f = run_field_pipeline(sd, h, 3 * h, p.nu, p.eps_rnd, &crng);

                uint64_t node_seed = hash_mix(seed, ((uint64_t(j) * 4096 + ri) * 4096 + l) + 0x9e0000);
                auto filter = [&](const CandidateNode& cand, Rng& nrng, bool& is_ns, double& target) {
                    if (cand.h2kg >= p.h2kg_min_ns) return false;  // numerically non-saddle
                    double pr1 = ease(std::fabs(cand.h2kg), std::fabs(p.h2kg_min_ns), p.min_ih2kg_pr, p.ih2kg_max_low,
                                      p.max_ih2kg_pr);
                    if (nrng.uniform01() > pr1) return false;
                    double pr2 = ease(std::fabs(cand.hk), 0.0, p.hk0_pr, 0.5 * hk_attain, 1.0);
                    if (nrng.uniform01() > pr2) return false;
                    double pr3 = ease(std::fabs(cand.hk_star - cand.hk), 0.0, p.hk_no_err_pr, p.hk_err_low, 1.0);
                    if (nrng.uniform01() > pr3) return false;
                    is_ns = false;
                    target = cand.hk_star;
                    return true;
                };
                std::vector<LearningTuple> unused_ns;
                collect_candidates(f, sd, h, shift, r_sam, node_seed, filter, unused_ns, &buf);
            }
            Rng brng = rng.fork(0xba1a + uint64_t(j) * 4096 + ri);
            histogram_subsample(buf, p.bins, brng);
            ds.tuples.insert(ds.tuples.end(), buf.begin(), buf.end());
        }
    }
    Rng frng = rng.fork(0xf17a2);
    ds.balance = histogram_subsample(ds.tuples, p.bins, frng);
    return ds;
}

// --- merge / split -------------------------------------------------------------

Dataset merge_balanced(const std::vector<Dataset>& sources, const std::vector<double>& fractions, uint64_t seed,
                       int bins) {
    if (sources.empty() || sources.size() != fractions.size())
        throw std::invalid_argument("merge_balanced: sources/fractions mismatch");
    Dataset out;
    out.cls = sources[0].cls;
    out.eta = sources[0].eta;
    out.h = sources[0].h;
    out.seed = seed;
    Rng rng(seed);
    for (size_t s = 0; s < sources.size(); ++s) {
        const Dataset& src = sources[s];
        if (src.cls != out.cls) throw std::invalid_argument("merge_balanced: class mismatch");
        if (src.eta != out.eta) throw std::invalid_argument("merge_balanced: eta mismatch");
        size_t take = size_t(std::lround(fractions[s] * double(src.tuples.size())));
        take = std::min(take, src.tuples.size());
        std::vector<uint32_t> order(src.tuples.size());
        for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        order.resize(take);
        std::sort(order.begin(), order.end());
        for (uint32_t i : order) out.tuples.push_back(src.tuples[i]);
        out.provenance += (s ? "+" : "") + src.provenance;
    }
    out.balance = histogram_subsample(out.tuples, bins, rng);
    return out;
}

SplitResult stratified_split(const Dataset& ds, uint64_t seed) {
    if (ds.tuples.empty()) throw std::invalid_argument("stratified_split: empty dataset");
    const int kBuckets = 100, kFolds = 20, kMinBucket = 20;

    double lo = 1e300, hi = -1e300;
    for (const auto& t : ds.tuples) {
        double k = std::fabs(double(t.target));
        lo = std::min(lo, k);
        hi = std::max(hi, k);
    }
    std::vector<int> label(ds.tuples.size());
    for (size_t i = 0; i < ds.tuples.size(); ++i) {
        double k = std::fabs(double(ds.tuples[i].target));
        int b = hi > lo ? std::min(int((k - lo) / (hi - lo) * kBuckets), kBuckets - 1) : 0;
        label[i] = b;
    }

    // merge undersized buckets into their upper neighbor (last one goes down)
    std::vector<std::vector<uint32_t>> buckets(kBuckets);
    for (uint32_t i = 0; i < ds.tuples.size(); ++i) buckets[label[i]].push_back(i);
    std::vector<std::vector<uint32_t>> merged;
    std::vector<uint32_t> pending;
    for (int b = 0; b < kBuckets; ++b) {
        pending.insert(pending.end(), buckets[b].begin(), buckets[b].end());
        if (pending.size() >= size_t(kMinBucket)) {
            merged.push_back(std::move(pending));
            pending.clear();
        }
    }
    if (!pending.empty()) {
        if (!merged.empty())
            merged.back().insert(merged.back().end(), pending.begin(), pending.end());
        else
            merged.push_back(std::move(pending));
    }

    Rng rng(seed);
    std::vector<std::vector<uint32_t>> folds(kFolds);
    for (size_t b = 0; b < merged.size(); ++b) {
        auto& m = merged[b];
        rng.shuffle(m);
        // rotate the dealing offset so remainder samples spread over all folds
        for (size_t i = 0; i < m.size(); ++i) folds[(i + b) % kFolds].push_back(m[i]);
    }

    auto subset = [&](int f0, int f1) {
        Dataset out;
        out.cls = ds.cls;
        out.eta = ds.eta;
        out.h = ds.h;
        out.seed = seed;
        out.provenance = ds.provenance;
        out.balance = ds.balance;
        std::vector<uint32_t> idx;
        for (int f = f0; f < f1; ++f) idx.insert(idx.end(), folds[f].begin(), folds[f].end());
        std::sort(idx.begin(), idx.end());
        for (uint32_t i : idx) out.tuples.push_back(ds.tuples[i]);
        return out;
    };
    SplitResult r;
    r.train = subset(0, 14);
    r.test = subset(14, 17);
    r.validation = subset(17, 20);
    return r;
}

// --- binary + csv io -----------------------------------------------------------

void verify_dataset_balance(const Dataset& ds) {
    if (!ds.balance.valid) return;
    const auto& b = ds.balance;
    std::vector<size_t> counts(size_t(b.bins), 0);
    for (const auto& t : ds.tuples) {
        double k = std::fabs(double(t.target));
        int bin = b.bins > 1 && b.hi > b.lo ? std::min(int((k - b.lo) / (b.hi - b.lo) * b.bins), b.bins - 1) : 0;
        if (bin < 0) bin = 0;
        counts[bin]++;
    }
    size_t cap = size_t(std::max(0.0, std::floor(b.cap)));
    for (size_t c : counts)
        if (c > cap) throw ArtifactError("write_dataset: balancing post-condition violated");
}

void write_dataset(const Dataset& ds, const std::string& path) {
    verify_dataset_balance(ds);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
    const char magic[4] = {'C', '3', 'D', 'S'};
    uint32_t version = 1;
    uint8_t cls = uint8_t(ds.cls);
    uint32_t eta = uint32_t(ds.eta);
    uint64_t count = ds.tuples.size();
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&cls), 1);
    out.write(reinterpret_cast<const char*>(&eta), 4);
    out.write(reinterpret_cast<const char*>(&ds.h), 8);
    out.write(reinterpret_cast<const char*>(&count), 8);
    for (const auto& t : ds.tuples) {
        out.write(reinterpret_cast<const char*>(t.features.data()), sizeof(float) * kFeatureCount);
        out.write(reinterpret_cast<const char*>(&t.target), sizeof(float));
    }
    if (!out) throw std::runtime_error("write_dataset: write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
    char magic[4];
    uint32_t version;
    uint8_t cls;
    uint32_t eta;
    Dataset ds;
    uint64_t count;
    in.read(magic, 4);
    if (std::memcmp(magic, "C3DS", 4) != 0) throw ArtifactError("read_dataset: bad magic in " + path);
    in.read(reinterpret_cast<char*>(&version), 4);
    if (version != 1) throw ArtifactError("read_dataset: unsupported version");
    in.read(reinterpret_cast<char*>(&cls), 1);
    in.read(reinterpret_cast<char*>(&eta), 4);
    in.read(reinterpret_cast<char*>(&ds.h), 8);
    in.read(reinterpret_cast<char*>(&count), 8);
    ds.cls = SampleClass(cls);
    ds.eta = int(eta);
    ds.tuples.resize(count);
    for (auto& t : ds.tuples) {
        in.read(reinterpret_cast<char*>(t.features.data()), sizeof(float) * kFeatureCount);
        in.read(reinterpret_cast<char*>(&t.target), sizeof(float));
    }
    if (!in) throw std::runtime_error("read_dataset: truncated file " + path);
    return ds;
}

void export_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_dataset_csv: cannot open " + path);
    for (int c = 0; c < kFeatureCount; ++c) out << "f" << c << ",";
    out << "target\n";
    for (const auto& t : ds.tuples) {
        for (int c = 0; c < kFeatureCount; ++c) out << format_double(t.features[c]) << ",";
        out << format_double(t.target) << "\n";
    }
}

}  // namespace mlcurv
