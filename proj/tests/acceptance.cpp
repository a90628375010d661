// Acceptance suite: one pass/fail line per criterion. Returns the number of
// failed criteria. `--only N` restricts the run; `--workdir DIR` relocates the
// artifacts produced by the end-to-end criterion.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>

#include "mlcurv/datagen.hpp"
#include "mlcurv/harness.hpp"
#include "mlcurv/hybrid.hpp"

#ifndef MLCURV_CLI_PATH
#define MLCURV_CLI_PATH "mlcurv"
#endif

using namespace mlcurv;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_workdir = "acceptance_work";
std::vector<std::string> g_notes;

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void note(const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    g_notes.push_back(buf);
}

bool check(bool ok, const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    g_notes.push_back(std::string(ok ? "ok: " : "VIOLATION: ") + buf);
    return ok;
}

// ---------------------------------------------------------------- criterion 1

bool criterion_symmetry() {
    auto t0 = Clock::now();
    Rng rng(20240501);
    bool ok = true;
    for (int t = 0; t < 10000 && ok; ++t) {
        DataPacket p;
        for (int n = 0; n < 27; ++n) {
            p.phi[n] = rng.uniform(-1, 1);
            p.normal[n] = rng.unit_axis();
        }
        if (norm(p.normal[kPacketCenter]) < 1e-6) continue;
        p.hk = rng.uniform(-0.7, 0.7);
        p.h2kg = rng.uniform(-0.1, 0.1);
        auto forms = generate_std_packets(p);
        for (const auto& q : forms) {
            ok = ok && q.hk == p.hk && q.h2kg == p.h2kg;
            for (int c = 0; c < 3; ++c) ok = ok && q.normal[kPacketCenter][c] >= 0.0;
            DataPacket r = reorient_standard(q);
            ok = ok && std::memcmp(&r, &q, sizeof(DataPacket)) == 0;
        }
    }
    double secs = elapsed(t0);
    bool in_time = check(secs < 60.0, "10000 stencils in %.1fs (< 60s)", secs);
    check(ok, "six forms: bit-identical curvatures, nonnegative center normals, idempotent reorientation");
    return ok && in_time;
}

// ---------------------------------------------------------------- criterion 2

bool criterion_baseline_numerics() {
    auto t0 = Clock::now();
    const double R = 2.0 / 64.0;
    const Vec3 center = {0.0011, -0.0007, 0.0005};

    // clean signed distances: interpolated curvature converges at order >= 1.8
    std::vector<double> errs;
    for (int eta : {8, 9, 10}) {
        double h = std::pow(2.0, -eta);
        SurfaceSpec spec = make_sphere(center, R, 9 * h);
        SurfaceDistance sd(spec, h);
        FieldPipeline f = run_field_pipeline(sd, h, 3 * h, 0, 0.0, nullptr);
        double sum = 0;
        size_t cnt = 0;
        for (int32_t node : f.iface) {
            if (f.normals.nhat.degenerate[node]) continue;
            Vec3 x = f.grid.position(node);
            Vec3 xg = project_to_interface(x, f.phi[node], f.normals.nhat[node]);
            double km, kg;
            if (!interp_curvatures_at(f.grid, f.curv, xg, km, kg)) continue;
            sum += std::fabs(km - 1.0 / R);
            ++cnt;
        }
        errs.push_back(sum / double(cnt));
    }
    double order = 0.5 * (std::log2(errs[0] / errs[1]) + std::log2(errs[1] / errs[2]));
    bool ok = check(order >= 1.8, "clean-field interpolated curvature order %.2f (>= 1.8)", order);

    // noisy + redistanced protocol against the reported relative errors
    ConvergenceTable t = run_convergence_case1({2, 4, 8}, 100, nullptr, 20240502);
    const double anchors[3] = {3.807297e-2, 1.569252e-2, 5.192317e-3};
    for (int i = 0; i < 3; ++i) {
        double got = t.rows[i].baseline.l2_rel;
        bool within = got > anchors[i] / 2 && got < anchors[i] * 2;
        ok = check(within, "noisy baseline rel-L2 at R/h=%d: %.4e (reference %.4e, factor-2 window)",
                   int(t.rows[i].resolution), got, anchors[i]) && ok;
    }
    double secs = elapsed(t0);
    ok = check(secs < 600.0, "runtime %.0fs (< 600s)", secs) && ok;
    return ok;
}

// ---------------------------------------------------------------- criterion 3

bool criterion_reinitialization() {
    bool ok = true;
    {
        double h = std::pow(2.0, -6);
        SurfaceSpec spec = make_sphere({0.002, -0.001, 0.0015}, 0.25, 9 * h);
        SurfaceDistance sd(spec, h);
        Rng rng(20240503);
        FieldPipeline f = run_field_pipeline(sd, h, 3 * h, 10, 1e-4, &rng);
        size_t total = 0, bad = 0;
        for (int32_t n = 0; n < int32_t(f.grid.size()); ++n) {
            if (std::fabs(f.phi[n]) > 3 * h || f.normals.nhat.degenerate[n]) continue;
            ++total;
            double gn = norm(f.normals.grad[n]);
            if (gn < 0.95 || gn > 1.05) ++bad;
        }
        double frac = 1.0 - double(bad) / double(total);
        ok = check(frac >= 0.99, "perturbed sphere, nu=10: %.2f%% of %zu band nodes in [0.95, 1.05]", 100 * frac,
                   total) && ok;
    }
    {
        // the 19^3 and 38^3 grids put the sphere's center kink inside the
        // band; reported for reference, the gate runs at 76^3
        for (int cells : {19, 38, 76}) {
            NarrowBandGrid g = make_uniform_grid({-1, -1, -1}, {1, 1, 1}, cells);
            NodalField phi(g);
            for (size_t n = 0; n < g.size(); ++n) {
                Vec3 x = g.position(int32_t(n));
                phi[n] = dot(x, x) - 0.2222 * 0.2222;
            }
            NodalField out = reinitialize(g, phi, 80);
            auto nr = gradient_and_normals(g, out);
            size_t total = 0, bad = 0;
            for (size_t n = 0; n < g.size(); ++n) {
                if (std::fabs(out[n]) > 3 * g.h || nr.nhat.degenerate[n]) continue;
                ++total;
                double gn = norm(nr.grad[n]);
                if (gn < 0.9 || gn > 1.1) ++bad;
            }
            if (cells == 76)
                ok = check(bad == 0, "non-SDF sphere, nu=80 at 76^3: all %zu band nodes in [0.9, 1.1]", total) && ok;
            else
                note("reference %d^3: %zu/%zu outliers (skeleton within the band)", cells, bad, total);
        }
    }
    return ok;
}

// ----------------------------------------------------- criteria 4 and 6 data

Dataset small_real_dataset() {
    SphereGenParams p;
    p.n_spheres = 300;
    p.samples_per_sphere = 8;
    return generate_spherical_dataset(6, p, 20240504);
}

// ---------------------------------------------------------------- criterion 4

bool criterion_preprocessing(const Dataset& ds) {
    const double h = ds.h;
    std::vector<std::array<float, kFeatureCount>> rows;
    for (const auto& t : ds.tuples) rows.push_back(t.features);
    PreprocessStats stats = fit_stats(rows, h, 72, "ns");

    size_t n = rows.size();
    std::vector<std::vector<float>> R(n);
    for (size_t i = 0; i < n; ++i) R[i] = apply_stats(stats, rows[i].data(), h);

    double worst_mean = 0, worst_var = 0, worst_cov = 0;
    for (int a = 0; a < 72; ++a) {
        double mean = 0;
        for (size_t i = 0; i < n; ++i) mean += R[i][a];
        mean /= double(n);
        worst_mean = std::max(worst_mean, std::fabs(mean));
    }
    for (int a = 0; a < 72; ++a)
        for (int b = a; b < 72; ++b) {
            double cov = 0;
            for (size_t i = 0; i < n; ++i) cov += double(R[i][a]) * double(R[i][b]);
            cov /= double(n - 1);
            if (a == b)
                worst_var = std::max(worst_var, std::fabs(cov - 1.0));
            else
                worst_cov = std::max(worst_cov, std::fabs(cov));
        }
    bool ok = check(worst_mean < 1e-8, "whitened means: worst |mean| = %.2e (< 1e-8)", worst_mean);
    ok = check(worst_var < 1e-6, "whitened variances: worst |var - 1| = %.2e (< 1e-6)", worst_var) && ok;
    ok = check(worst_cov < 1e-6, "whitened cross-covariances: worst = %.2e (< 1e-6)", worst_cov) && ok;

    // mesh-size invariance of the level-set block
    bool inv = true;
    for (size_t i = 0; i < std::min<size_t>(n, 64); ++i) {
        std::array<float, kFeatureCount> scaled = rows[i];
        for (int c = 0; c < 27; ++c) scaled[c] = rows[i][c] * 2.0f;
        inv = inv && apply_stats(stats, scaled.data(), 2 * h) == R[i];
    }
    ok = check(inv, "h-normalization invariance: doubled phi at doubled h reproduces features bitwise") && ok;
    return ok;
}

// ---------------------------------------------------------------- criterion 5

bool criterion_gradient_check() {
    auto t0 = Clock::now();
    double rel = gradient_check(4, 3, 8, 20240505, 1e-5);
    double secs = elapsed(t0);
    bool ok = check(rel < 1e-4, "max relative gradient deviation %.2e (< 1e-4)", rel);
    ok = check(secs < 10.0, "runtime %.1fs (< 10s)", secs) && ok;
    return ok;
}

// ---------------------------------------------------------------- criterion 6

bool criterion_training_sanity(const Dataset& ds) {
    // overfit a 1000-tuple subset: train MAE below 1e-4 within 1000 epochs
    Rng rng(20240506);
    std::vector<uint32_t> order(ds.tuples.size());
    for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<std::array<float, kFeatureCount>> rows;
    for (size_t i = 0; i < 1000; ++i) rows.push_back(ds.tuples[order[i]].features);
    PreprocessStats stats = fit_stats(rows, ds.h, 72, "ns");
    SampleMatrix m;
    m.dim = 72;
    for (size_t i = 0; i < 1000; ++i) {
        auto r = apply_stats(stats, rows[i].data(), ds.h);
        m.push(r.data(), rows[i][108], ds.tuples[order[i]].target);
    }
    MlpModel model = init_model(72, 140, 0.0, 20240507, "ns");
    TrainConfig cfg;
    cfg.seed = 20240508;
    cfg.max_epochs = 1000;
    // capacity-rich overfit: no early stop, slower anneal, deeper floor
    cfg.lr0 = 1e-3;
    cfg.plateau_patience = 40;
    cfg.lr_floor = 1e-6;
    cfg.stop_patience = 1 << 20;
    TrainHistory hist = train(model, m, m, cfg);
    bool ok = check(hist.best_val_mae < 1e-4, "overfit 1000 tuples: training MAE %.2e after %d epochs (< 1e-4)",
                    hist.best_val_mae, hist.epochs);

    // schedule rules fire exactly per their definitions
    TrainConfig sc;
    LrController c(sc);
    c.feed(1.0);
    bool rules = true;
    for (int i = 0; i < 14; ++i) rules = rules && c.feed(1.0).lr == sc.lr0;
    rules = rules && c.feed(1.0).lr == sc.lr0 / 2;  // epoch 15 of stagnation halves
    LrController c2(sc);
    c2.feed(0.5);
    for (int i = 0; i < 49; ++i) rules = rules && !c2.feed(0.5).stop;
    rules = rules && c2.feed(0.5).stop;  // epoch 50 of stagnation stops
    LrController c3(sc);
    c3.feed(0.5);
    for (int i = 0; i < 400; ++i) c3.feed(0.5);
    rules = rules && c3.lr == sc.lr_floor;
    ok = check(rules, "plateau halving at 15, early stop at 50, floor respected") && ok;
    return ok;
}

// ---------------------------------------------------------------- criterion 7

struct E2EArtifacts {
    std::vector<Dataset> emitted;
    bool ran = false;
    bool passed = false;
};
E2EArtifacts g_e2e;

bool criterion_end_to_end() {
    auto t0 = Clock::now();
    const int eta = 6;
    const uint64_t seed = 20240510;
    fs::create_directories(g_workdir);
    g_e2e.ran = true;

    Dataset spheres = generate_spherical_dataset(eta, SphereGenParams::desk(), seed + 1);
    note("spheres: %zu tuples (%.0fs)", spheres.tuples.size(), elapsed(t0));
    auto [sin_ns, sin_sd] = generate_sinusoidal_datasets(eta, SinusoidGenParams::desk(), seed + 2);
    note("sinusoids: ns %zu, sd %zu tuples (%.0fs cumulative)", sin_ns.tuples.size(), sin_sd.tuples.size(),
         elapsed(t0));
    Dataset hyp = generate_hyp_paraboloidal_dataset(eta, HypParaboloidGenParams::desk(), seed + 3);
    note("hyp paraboloids: %zu tuples (%.0fs cumulative)", hyp.tuples.size(), elapsed(t0));

    Dataset d_ns = merge_balanced({spheres, sin_ns}, {0.67, 0.60}, seed + 4);
    Dataset d_sd = merge_balanced({sin_sd, hyp}, {1.0, 1.0}, seed + 5);
    note("merged: ns %zu, sd %zu tuples", d_ns.tuples.size(), d_sd.tuples.size());
    for (const Dataset* d : {&spheres, &sin_ns, &sin_sd, &hyp, &d_ns, &d_sd}) g_e2e.emitted.push_back(*d);

    SplitResult s_ns = stratified_split(d_ns, seed + 6);
    SplitResult s_sd = stratified_split(d_sd, seed + 7);

    auto fit_and_train = [&](const SplitResult& s, int m_iota, double l2, const std::string& cls,
                             uint64_t tseed) {
        std::vector<std::array<float, kFeatureCount>> rows;
        for (const auto& t : s.train.tuples) rows.push_back(t.features);
        PreprocessStats stats = fit_stats(rows, s.train.h, m_iota, cls);
        std::string stats_path = g_workdir + "/stats_" + cls + ".json";
        save_stats(stats, stats_path);

        auto matrix = [&](const Dataset& ds) {
            SampleMatrix m;
            m.dim = m_iota;
            m.x.resize(ds.tuples.size() * size_t(m_iota));
            m.hk.resize(ds.tuples.size());
            m.y.resize(ds.tuples.size());
            parallel_chunks(ds.tuples.size(), 16, [&](size_t, size_t b, size_t e) {
                for (size_t i = b; i < e; ++i) {
                    auto r = apply_stats(stats, ds.tuples[i].features.data(), ds.h);
                    std::copy(r.begin(), r.end(), m.x.begin() + i * size_t(m_iota));
                    m.hk[i] = ds.tuples[i].features[108];
                    m.y[i] = ds.tuples[i].target;
                }
            });
            return m;
        };
        SampleMatrix train_m = matrix(s.train), val_m = matrix(s.validation);
        MlpModel model = init_model(m_iota, 140, l2, tseed, cls);
        model.stats_fingerprint = sha256_file(stats_path);
        TrainConfig tc;
        tc.seed = tseed + 1;
        TrainHistory hist = train(model, train_m, val_m, tc);
        note("trained %s on %zu tuples: %d epochs, val MAE %.3e", cls.c_str(), s.train.tuples.size(), hist.epochs,
             hist.best_val_mae);
        save_model(model, g_workdir + "/model_" + cls + ".json");
        return model;
    };

    HybridModels models;
    models.ns.model = fit_and_train(s_ns, 72, 2e-6, "ns", seed + 8);
    models.ns.stats = load_stats(g_workdir + "/stats_ns.json");
    models.sd.model = fit_and_train(s_sd, 80, 5e-6, "sd", seed + 9);
    models.sd.stats = load_stats(g_workdir + "/stats_sd.json");

    auto reports = run_geometry_test(GeometryCase::Ellipsoid, eta, &models, seed + 10);
    const ErrorReport& rep = reports[0];
    emit_report(rep, g_workdir, {"csv", "jsonl", "plotdata"});
    double secs = elapsed(t0);

    note("ellipsoid baseline mae_hk=%.4e maxae_hk=%.4e", rep.baseline.mae_hk, rep.baseline.maxae_hk);
    note("ellipsoid hybrid   mae_hk=%.4e maxae_hk=%.4e", rep.hybrid.mae_hk, rep.hybrid.maxae_hk);
    note("MaxAE improvement factor %.2f (recorded, not gated)", rep.improvement_maxae);
    {
        size_t n_early = 0, n_neural = 0, n_sd = 0;
        double e_early = 0, e_nb = 0, e_nh = 0;
        for (const auto& r : rep.records) {
            if (!std::isfinite(r.hk_exact)) continue;
            if (r.cls == SampleClass::Saddle)
                ++n_sd;
            else if (r.early_return) {
                ++n_early;
                e_early += std::fabs(r.hk_hybrid - r.hk_exact);
            } else {
                ++n_neural;
                e_nb += std::fabs(r.hk_base - r.hk_exact);
                e_nh += std::fabs(r.hk_hybrid - r.hk_exact);
            }
        }
        note("populations: early %zu (mae %.2e), neural ns %zu (baseline %.3e -> hybrid %.3e), saddle %zu", n_early,
             e_early / std::max<size_t>(n_early, 1), n_neural, e_nb / std::max<size_t>(n_neural, 1),
             e_nh / std::max<size_t>(n_neural, 1), n_sd);
    }
    bool ok = check(rep.improvement_mae >= 2.0, "ellipsoid MAE improvement factor %.2f (>= 2)",
                    rep.improvement_mae);
    ok = check(secs < 4 * 3600.0, "end-to-end runtime %.0fs (< 4h)", secs) && ok;
    g_e2e.passed = ok;
    return ok;
}

// ---------------------------------------------------------------- criterion 8

bool criterion_hybrid_blend() {
    SolverParams params;
    bool ok = true;

    // exact endpoints of the blending window
    for (double sign : {1.0, -1.0}) {
        double hk = sign * params.hk_min_low;
        ok = ok && blend_non_saddle(0.37, -std::fabs(hk), hk, params) == hk;
        double hk_up = sign * params.hk_min_up;
        ok = ok && blend_non_saddle(-0.0912, -std::fabs(hk_up), hk_up, params) == sign * 0.0912;
    }
    ok = check(ok, "lambda endpoints: pure baseline at 0.004, pure neural at 0.007, bit-exact");

    // population sweep on a gaussian surface with random models
    int eta = 5;
    double h = std::pow(2.0, -eta);
    GaussianParams g{1.0, 1.302083e-1, 1.446759e-2};
    double u0 = gaussian_zero_curvature_param(g, 0);
    double v0 = gaussian_zero_curvature_param(g, 1);
    SurfaceSpec spec = make_gaussian(g.height, g.sigma_u2, g.sigma_v2, AffineFrame::identity(),
                                     u0 + std::sqrt(g.sigma_u2) + 6 * h, v0 + std::sqrt(g.sigma_v2) + 6 * h, 9 * h);
    SurfaceDistance sd(spec, h);
    Rng rng(20240511);
    FieldPipeline f = run_field_pipeline(sd, h, 3 * h, 10, 1e-4, &rng);

    HybridModels models;
    {
        std::vector<std::array<float, kFeatureCount>> rows(200);
        Rng rrng(9);
        for (auto& r : rows)
            for (auto& v : r) v = float(rrng.normal());
        models.ns.stats = fit_stats(rows, h, 12, "ns");
        models.sd.stats = fit_stats(rows, h, 12, "sd");
        models.ns.model = init_model(12, 10, 0, 7, "ns");
        models.sd.model = init_model(12, 10, 0, 8, "sd");
    }
    auto recs = solve_interface(f, &models, h, params);
    size_t early = 0, signed_ok = 0, ns_count = 0;
    bool early_exact = true, signs = true;
    for (const auto& r : recs) {
        if (r.fell_back) continue;
        if (r.cls != SampleClass::NonSaddle) continue;
        ++ns_count;
        if (std::fabs(r.hk_base) < params.hk_min_low) {
            ++early;
            early_exact = early_exact && r.hk_hybrid == r.hk_base && r.early_return;
        }
        if (r.hk_hybrid * r.hk_base >= 0) ++signed_ok;
        signs = signs && r.hk_hybrid * r.hk_base >= 0;
    }
    ok = check(early > 0 && early_exact, "early return below 0.004 is bit-exact on %zu flat nodes", early) && ok;
    ok = check(signs, "sign preserved on all %zu non-saddle nodes", ns_count) && ok;
    return ok;
}

// ---------------------------------------------------------------- criterion 9

bool criterion_subsampling_postcondition() {
    bool ok = true;
    std::vector<const Dataset*> to_check;
    Dataset a, b, m;
    if (g_e2e.ran && !g_e2e.emitted.empty()) {
        for (const auto& d : g_e2e.emitted) to_check.push_back(&d);
        note("checking %zu datasets emitted by the end-to-end run", to_check.size());
    } else {
        SinusoidGenParams p;
        p.hk_min = 0.05;
        p.na = 1;
        p.nt = 2;
        p.nhk = 1;
        p.nu = 2;
        auto pair = generate_sinusoidal_datasets(4, p, 20240512);
        a = pair.first;
        b = pair.second;
        m = merge_balanced({a}, {1.0}, 20240513);
        to_check = {&a, &b, &m};
    }
    for (const Dataset* d : to_check) {
        ok = ok && d->balance.valid;
        try {
            verify_dataset_balance(*d);
        } catch (const std::exception& e) {
            ok = check(false, "balance violated: %s", e.what());
        }
    }
    ok = check(ok, "bin-rule cap holds in every emitted dataset");

    // the writer refuses a dataset whose recorded cap is violated
    Dataset bad = to_check.empty() ? Dataset{} : *to_check.front();
    if (bad.tuples.size() > 1) {
        bad.balance.valid = true;
        bad.balance.bins = 1;
        bad.balance.lo = 0;
        bad.balance.hi = 1;
        bad.balance.cap = 1.0;
        bool threw = false;
        try {
            write_dataset(bad, g_workdir + "/tampered.c3ds");
        } catch (const ArtifactError&) {
            threw = true;
        }
        ok = check(threw, "writer rejects a tampered balance record") && ok;
    }
    return ok;
}

// --------------------------------------------------------------- criterion 10

bool criterion_determinism() {
    std::string dir = g_workdir + "/replay";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto cli = [&](const std::string& args) {
        std::string cmd = std::string(MLCURV_CLI_PATH) + " " + args + " >/dev/null 2>&1";
        int rc = std::system(cmd.c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    bool ok = true;
    ok = cli("--out " + dir + "/p --seed 11 gen-spheres --eta 6 --nsph 30 --nsam 3 --nu 3") == 0 && ok;
    ok = cli("--out " + dir + "/p --seed 12 split --input " + dir + "/p/spheres_ns.c3ds --out-prefix d") == 0 && ok;
    ok = cli("--out " + dir + "/p --seed 13 fit-preprocess --train " + dir + "/p/d.train.c3ds --m-iota 16 --out-name s.json") == 0 && ok;
    ok = cli("--out " + dir + "/p --seed 14 train --train " + dir + "/p/d.train.c3ds --val " + dir +
             "/p/d.validation.c3ds --stats " + dir + "/p/s.json --class ns --n-h 16 --max-epochs 5 --out-name m.json") == 0 &&
         ok;
    ok = check(ok, "pipeline ran: gen-spheres, split, fit-preprocess, train");

    // replaying each stage's manifest must reproduce its artifacts bitwise
    for (const char* mf : {"gen-spheres", "split", "fit-preprocess", "train"}) {
        std::string rd = dir + "/r_" + mf;
        int rc = cli("--out " + rd + " replay --manifest " + dir + "/p/" + mf + ".manifest.json");
        ok = check(rc == 0, "replay of %s manifest is byte-identical", mf) && ok;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    int only = -1;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
        if (std::strcmp(argv[i], "--workdir") == 0 && i + 1 < argc) g_workdir = argv[++i];
    }

    Dataset small;
    auto need_small = [&]() {
        if (small.tuples.empty()) small = small_real_dataset();
        return std::cref(small);
    };

    struct Criterion {
        int id;
        const char* name;
        std::function<bool()> fn;
    };
    std::vector<Criterion> criteria = {
        {1, "symmetry suite over randomized stencils", [] { return criterion_symmetry(); }},
        {2, "baseline numerics: convergence and reported relative errors", [] { return criterion_baseline_numerics(); }},
        {3, "reinitialization gradient quality", [] { return criterion_reinitialization(); }},
        {4, "preprocessing whitening and h-normalization", [&] { return criterion_preprocessing(need_small()); }},
        {5, "backpropagation gradient check", [] { return criterion_gradient_check(); }},
        {6, "training sanity: overfit and schedule rules", [&] { return criterion_training_sanity(need_small()); }},
        {7, "desk-scale end-to-end with ellipsoid improvement", [] { return criterion_end_to_end(); }},
        {8, "hybrid solver blending rules", [] { return criterion_hybrid_blend(); }},
        {9, "bin-rule post-condition on emitted datasets", [] { return criterion_subsampling_postcondition(); }},
        {10, "pipeline determinism via manifest replay", [] { return criterion_determinism(); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (only > 0 && c.id != only) continue;
        g_notes.clear();
        bool ok = false;
        std::string error;
        auto t0 = Clock::now();
        try {
            ok = c.fn();
        } catch (const std::exception& e) {
            error = e.what();
        }
        if (!ok) ++failures;
        std::printf("[%s] %2d. %s (%.0fs)\n", ok ? "PASS" : "FAIL", c.id, c.name, elapsed(t0));
        for (const auto& n : g_notes) std::printf("        %s\n", n.c_str());
        if (!error.empty()) std::printf("        exception: %s\n", error.c_str());
        std::fflush(stdout);
    }
    std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL", failures);
    return failures;
}
