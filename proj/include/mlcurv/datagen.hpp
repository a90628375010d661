#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mlcurv/packets.hpp"

namespace mlcurv {

// One standard-formed packet row plus its regression target (h * exact mean
// curvature, negated for non-saddle samples).
struct LearningTuple {
    std::array<float, kFeatureCount> features;
    float target;
};

// Bin-capping record of the last balancing pass; the dataset writer re-checks
// it before emitting anything.
struct BalanceInfo {
    bool valid = false;
    double lo = 0, hi = 0;
    int bins = 0;
    double cap = 0;
};

struct Dataset {
    SampleClass cls = SampleClass::NonSaddle;
    int eta = 0;
    double h = 0;
    uint64_t seed = 0;
    std::string provenance;
    std::vector<LearningTuple> tuples;
    BalanceInfo balance;
};

// Smooth sine blend from (a_e, A_e) to (b_e, B_e), clamped outside the
// support. Requires a_e < b_e and A_e < B_e.
double ease(double t, double a_e, double A_e, double b_e, double B_e);

// Jittered lattice: n bin centers over [lo, hi], each perturbed uniformly
// within its own bin; strictly monotone. jitter = 0 reproduces the centers.
std::vector<double> rand_linspace(double lo, double hi, int n, Rng& rng, double jitter = 1.0);

// Equal-width histogram capping: random drops until every bin count is at
// most min(median/3, 1.5*min) of the pre-drop nonempty-bin statistics.
BalanceInfo histogram_subsample(std::vector<LearningTuple>& tuples, int max_bins, Rng& rng);

struct SphereGenParams {
    double hk_min = 0.004, hk_max = 2.0 / 3.0;
    int n_spheres = 5000, samples_per_sphere = 4;
    int nu = 10;
    double eps_rnd = 1e-4;
    double h2kg_min_ns = -7e-6;

    static SphereGenParams desk() { return {}; }
    static SphereGenParams full_scale() {
        SphereGenParams p;
        p.n_spheres = 200000;
        p.samples_per_sphere = 10;
        return p;
    }
};

struct SinusoidGenParams {
    double hk_min = 0.004, hk_max = 2.0 / 3.0;
    double min_hk_pr = 0.0025, max_hk_low_pr = 0.2, max_hk_up_pr = 0.6;
    double ih2kg_min = 0.0, min_ih2kg_pr = 0.0025, ih2kg_max_low = 0.05, max_ih2kg_pr = 0.075;
    int na = 4, nt = 3, nhk = 3;
    int nu = 10;
    double eps_rnd = 1e-4;
    double h2kg_min_ns = -7e-6;
    int ns_bins = 100, sd_bins = 50;

    static SinusoidGenParams desk() { return {}; }
    static SinusoidGenParams full_scale() {
        SinusoidGenParams p;
        p.na = 13;
        p.nt = 10;
        p.nhk = 7;
        return p;
    }
};

struct HypParaboloidGenParams {
    double hk_max = 2.0 / 3.0;
    double r_max = 6.0;
    int nr = 4, nt = 6, nhk = 25;
    double min_ih2kg_pr = 0.01, ih2kg_max_low = 0.05, max_ih2kg_pr = 1.0;
    double hk0_pr = 0.0025, hk_no_err_pr = 0.005, hk_err_low = 0.1;
    int nu = 10;
    double eps_rnd = 1e-4;
    double h2kg_min_ns = -7e-6;
    int bins = 50;

    static HypParaboloidGenParams desk() { return {}; }
    static HypParaboloidGenParams full_scale() {
        HypParaboloidGenParams p;
        p.nr = 12;
        p.nt = 30;
        p.nhk = 150;
        return p;
    }
};

Dataset generate_spherical_dataset(int eta, const SphereGenParams& p, uint64_t seed);
std::pair<Dataset, Dataset> generate_sinusoidal_datasets(int eta, const SinusoidGenParams& p, uint64_t seed);
Dataset generate_hyp_paraboloidal_dataset(int eta, const HypParaboloidGenParams& p, uint64_t seed);

// Concatenation of per-source random fractions followed by |target| histogram
// balancing (100 bins). Sources must share class and eta.
Dataset merge_balanced(const std::vector<Dataset>& sources, const std::vector<double>& fractions, uint64_t seed,
                       int bins = 100);

struct SplitResult {
    Dataset train, test, validation;
};

// 20 stratified folds on a 100-bucket |target| label, grouped 14/3/3; buckets
// below 20 members are merged into their upper neighbor.
SplitResult stratified_split(const Dataset& ds, uint64_t seed);

// Bin-rule post-condition against the dataset's recorded balancing pass;
// throws ArtifactError on violation. The writer runs this before emitting.
void verify_dataset_balance(const Dataset& ds);

void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);
void export_dataset_csv(const Dataset& ds, const std::string& path);

}  // namespace mlcurv
