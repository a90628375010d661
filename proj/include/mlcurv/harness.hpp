#pragma once

#include <string>

#include "mlcurv/hybrid.hpp"

namespace mlcurv {

struct Aggregates {
    size_t n = 0;
    double mae_hk = 0, maxae_hk = 0, rmse_hk = 0;
    double mae_k = 0, maxae_k = 0, rmse_k = 0;
    double l2_rel = 0, linf_rel = 0;
};

// Paired statistics over records with a finite reference target; use_hybrid
// selects which estimate is scored.
Aggregates metrics(const std::vector<NodeRecord>& records, double h, bool use_hybrid);

struct ErrorReport {
    std::string name;
    int eta = 0;
    double h = 0;
    uint64_t seed = 0;
    std::vector<NodeRecord> records;
    Aggregates hybrid, baseline;
    double improvement_mae = 0, improvement_maxae = 0, improvement_rmse = 0;
    double wall_seconds = 0;
};

ErrorReport build_report(const std::string& name, int eta, double h, uint64_t seed, std::vector<NodeRecord> records,
                         double wall_seconds);

enum class GeometryCase { Ellipsoid, Paraboloid, Gaussian, Morph };
GeometryCase geometry_case_from_name(const std::string& name);

// Section-5-style stationary-geometry experiments: random affine transform,
// exact distances, noise, nu = 10 redistancing, paired hybrid/baseline
// statistics. Morph returns one report per step (0..51).
std::vector<ErrorReport> run_geometry_test(GeometryCase which, int eta, const HybridModels* models, uint64_t seed);

struct ConvergenceRow {
    double resolution = 0;  // R/h ratio (case 1) or cells per side (case 2)
    Aggregates baseline, hybrid;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    // orders between successive rows: log2(e_prev / e_cur)
    std::vector<double> base_l2_order, base_linf_order, hyb_l2_order, hyb_linf_order;
    std::vector<double> base_mae_order, hyb_mae_order;
};

// Randomly shifted spheres of radius R = 2/64 at R/h in `ratios`; relative
// L2/Linf aggregated over all trials' interface nodes.
ConvergenceTable run_convergence_case1(const std::vector<int>& ratios, int trials, const HybridModels* models,
                                       uint64_t seed);

// Non-signed-distance sphere field on uniform grids over [-1, 1]^3,
// reinitialized with nu = 80; kappa-space MAE/MaxAE.
ConvergenceTable run_convergence_case2(const std::vector<int>& cells, const HybridModels* models);

// Scatter-fit summary of (exact, hybrid) pairs.
struct FitLine {
    double slope = 0, intercept = 0, rho = 0;
    size_t n = 0;
};
FitLine correlation_fit(const std::vector<NodeRecord>& records);

// formats: any subset of {"csv", "jsonl", "plotdata"}.
void emit_report(const ErrorReport& report, const std::string& dir, const std::vector<std::string>& formats);

}  // namespace mlcurv
