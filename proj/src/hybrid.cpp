#include "mlcurv/hybrid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mlcurv {

InferenceBundle load_bundle(const std::string& model_path, const std::string& stats_path) {
    InferenceBundle b;
    b.model = load_model(model_path);
    b.stats = load_stats(stats_path);
    std::string fp = sha256_file(stats_path);
    if (!b.model.stats_fingerprint.empty() && b.model.stats_fingerprint != fp)
        throw ArtifactError("load_bundle: stats fingerprint mismatch for " + model_path);
    if (b.model.net.m_in != b.stats.m_iota)
        throw ArtifactError("load_bundle: model/stats dimension mismatch for " + model_path);
    return b;
}

HybridModels load_hybrid_models(const std::string& ns_model, const std::string& ns_stats, const std::string& sd_model,
                                const std::string& sd_stats) {
    HybridModels m;
    m.ns = load_bundle(ns_model, ns_stats);
    m.sd = load_bundle(sd_model, sd_stats);
    return m;
}

double blend_non_saddle(double hk_f_mean, double hk_packet, double hk_baseline, const SolverParams& params) {
    double hk_f = hk_f_mean;
    double a = std::fabs(hk_packet);
    if (a <= params.hk_min_up) {
        double lambda = (params.hk_min_up - a) / (params.hk_min_up - params.hk_min_low);
        hk_f = (1.0 - lambda) * hk_f + lambda * hk_packet;
    }
    double s = hk_baseline >= 0 ? 1.0 : -1.0;
    return s * std::fabs(hk_f);
}

NodeOutcome ml_curvature(const FieldPipeline& f, int32_t node, const HybridModels* models, double h,
                         const SolverParams& params) {
    NodeOutcome out{};
    const NarrowBandGrid& g = f.grid;

    auto st = try_stencil27(g, node);
    double hk = 0, h2kg = 0;
    bool interp_ok = false;
    if (st && !f.normals.nhat.degenerate[node] && stencil_normals_ok(*st, f.normals.nhat)) {
        Vec3 x = g.position(node);
        Vec3 xg = project_to_interface(x, f.phi[node], f.normals.nhat[node]);
        double km, kg;
        if (interp_curvatures_at(g, f.curv, xg, km, kg)) {
            hk = h * km;
            h2kg = h * h * kg;
            interp_ok = true;
        }
    }
    if (!interp_ok) {
        // interpolation point left the band (or the stencil is incomplete):
        // fall back to the nodal value
        out.fell_back = true;
        out.cls = SampleClass::NonSaddle;
        out.hk_star = f.curv.status.size() > size_t(node) && f.curv.status[node] != 0 ? h * f.curv.mean[node] : 0.0;
        return out;
    }

    bool non_saddle = h2kg >= params.h2kg_min_ns;
    out.cls = non_saddle ? SampleClass::NonSaddle : SampleClass::Saddle;
    out.hk_star = hk;
    if (non_saddle && std::fabs(hk) < params.hk_min_low) {
        out.early_return = true;  // flat region: the baseline is already good
        return out;
    }
    if (!models) return out;

    const InferenceBundle& bundle = non_saddle ? models->ns : models->sd;

    DataPacket p = collect_features(g, *st, f.phi, f.normals.nhat);
    p.hk = hk;
    p.h2kg = h2kg;
    if (non_saddle) p = negative_normalize(p);

    auto forms = generate_std_packets(p);
    double acc = 0.0;  // f64 accumulation keeps the six-form mean order-independent
    for (const auto& q : forms) {
        std::vector<float> r = apply_stats(bundle.stats, q, h);
        acc += double(forward_correction(bundle.model, r.data()));
    }
    // the skip connection is non-adaptable: add it at full precision
    double hk_f = p.hk + acc / 6.0;

    out.hk_star = non_saddle ? blend_non_saddle(hk_f, p.hk, hk, params) : hk_f;
    return out;
}

std::vector<NodeRecord> solve_interface(const FieldPipeline& f, const HybridModels* models, double h,
                                        const SolverParams& params,
                                        const std::function<double(int32_t, const Vec3&)>& exact_of) {
    std::vector<NodeRecord> out(f.iface.size());
    parallel_chunks(f.iface.size(), size_t(worker_count()) * 4, [&](size_t, size_t b, size_t e) {
        for (size_t t = b; t < e; ++t) {
            int32_t node = f.iface[t];
            Vec3 x = f.grid.position(node);

            NodeRecord rec{};
            rec.node = node;
            rec.x = x;

            NodeOutcome base = ml_curvature(f, node, nullptr, h, params);
            NodeOutcome hyb = models ? ml_curvature(f, node, models, h, params) : base;
            rec.cls = hyb.cls;
            rec.hk_base = base.hk_star;
            rec.hk_hybrid = hyb.hk_star;
            rec.early_return = hyb.early_return;
            rec.fell_back = hyb.fell_back;
            rec.hk_exact = exact_of ? exact_of(node, x) : std::numeric_limits<double>::quiet_NaN();
            out[t] = rec;
        }
    });
    return out;
}

}  // namespace mlcurv
