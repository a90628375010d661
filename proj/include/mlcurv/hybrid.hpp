#pragma once

#include <functional>
#include <optional>

#include "mlcurv/neuralnet.hpp"
#include "mlcurv/pipeline.hpp"
#include "mlcurv/preprocess.hpp"

namespace mlcurv {

struct SolverParams {
    double hk_min_low = 0.004;   // below this the baseline is returned untouched
    double hk_min_up = 0.007;    // blending window upper bound
    double h2kg_min_ns = -7e-6;  // non-saddle / saddle decision boundary
};

// One class's inference bundle; the fingerprint guard refuses mismatched
// model/stats pairs.
struct InferenceBundle {
    MlpModel model;
    PreprocessStats stats;
};

InferenceBundle load_bundle(const std::string& model_path, const std::string& stats_path);

struct HybridModels {
    InferenceBundle ns, sd;
};

HybridModels load_hybrid_models(const std::string& ns_model, const std::string& ns_stats, const std::string& sd_model,
                                const std::string& sd_stats);

// Pure blending step for non-saddle outputs near zero; exposed for tests.
// hk_packet is the negative-normalized baseline (-|hk|).
double blend_non_saddle(double hk_f_mean, double hk_packet, double hk_baseline, const SolverParams& params);

struct NodeOutcome {
    double hk_star;                  // hybrid output
    SampleClass cls;
    bool early_return = false;       // flat non-saddle shortcut taken
    bool fell_back = false;          // stencil/interpolation fallback to nodal value
};

// Alg. 2 analog for one interface node using precomputed fields.
NodeOutcome ml_curvature(const FieldPipeline& f, int32_t node, const HybridModels* models, double h,
                         const SolverParams& params);

struct NodeRecord {
    int32_t node;
    Vec3 x;
    SampleClass cls;
    double hk_base;      // interpolated baseline
    double hk_hybrid;    // solver output
    double hk_exact;     // target when available, else NaN
    bool early_return;
    bool fell_back;
};

// Batch driver over all interface nodes in deterministic (lexicographic)
// order. exact_of, when given, supplies the reference target per node.
std::vector<NodeRecord> solve_interface(const FieldPipeline& f, const HybridModels* models, double h,
                                        const SolverParams& params,
                                        const std::function<double(int32_t, const Vec3&)>& exact_of = nullptr);

}  // namespace mlcurv
