#include "mlcurv/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace mlcurv {

using nlohmann::json;

Aggregates metrics(const std::vector<NodeRecord>& records, double h, bool use_hybrid) {
    Aggregates a;
    double sum = 0, sq = 0, relsq = 0;
    for (const auto& r : records) {
        if (!std::isfinite(r.hk_exact)) continue;
        double est = use_hybrid ? r.hk_hybrid : r.hk_base;
        double e = std::fabs(est - r.hk_exact);
        sum += e;
        sq += e * e;
        a.maxae_hk = std::max(a.maxae_hk, e);
        double rel = r.hk_exact != 0 ? e / std::fabs(r.hk_exact) : 0.0;
        relsq += rel * rel;
        a.linf_rel = std::max(a.linf_rel, rel);
        ++a.n;
    }
    if (a.n == 0) throw std::runtime_error("metrics: no records with reference targets");
    a.mae_hk = sum / double(a.n);
    a.rmse_hk = std::sqrt(sq / double(a.n));
    a.l2_rel = std::sqrt(relsq / double(a.n));
    a.mae_k = a.mae_hk / h;
    a.maxae_k = a.maxae_hk / h;
    a.rmse_k = a.rmse_hk / h;
    return a;
}

ErrorReport build_report(const std::string& name, int eta, double h, uint64_t seed, std::vector<NodeRecord> records,
                         double wall_seconds) {
    ErrorReport rep;
    rep.name = name;
    rep.eta = eta;
    rep.h = h;
    rep.seed = seed;
    rep.records = std::move(records);
    rep.baseline = metrics(rep.records, h, false);
    rep.hybrid = metrics(rep.records, h, true);
    rep.improvement_mae = rep.hybrid.mae_hk > 0 ? rep.baseline.mae_hk / rep.hybrid.mae_hk : 0.0;
    rep.improvement_maxae = rep.hybrid.maxae_hk > 0 ? rep.baseline.maxae_hk / rep.hybrid.maxae_hk : 0.0;
    rep.improvement_rmse = rep.hybrid.rmse_hk > 0 ? rep.baseline.rmse_hk / rep.hybrid.rmse_hk : 0.0;
    rep.wall_seconds = wall_seconds;
    return rep;
}

GeometryCase geometry_case_from_name(const std::string& name) {
    if (name == "ellipsoid") return GeometryCase::Ellipsoid;
    if (name == "paraboloid") return GeometryCase::Paraboloid;
    if (name == "gaussian") return GeometryCase::Gaussian;
    if (name == "morph") return GeometryCase::Morph;
    throw std::invalid_argument("unknown geometry case: " + name);
}

namespace {

double exact_hk_at(const SurfaceDistance& sd, const Vec3& x, double h) {
    NearestResult nr = sd.nearest(x);
    if (!nr.converged) return std::numeric_limits<double>::quiet_NaN();
    double mean, gauss;
    if (const auto* e = std::get_if<EllipsoidParams>(&sd.spec().shape)) {
        ellipsoid_curvatures_at(*e, nr.foot_local, mean, gauss);
    } else {
        exact_curvatures(sd.spec(), nr.u, nr.v, mean, gauss);
    }
    return h * mean;
}

ErrorReport run_one_geometry(const std::string& name, const SurfaceSpec& spec, int eta, double h,
                             const HybridModels* models, Rng& rng, uint64_t seed,
                             const std::function<bool(const Vec3&)>& mask = nullptr) {
    auto t0 = std::chrono::steady_clock::now();
    SurfaceDistance sd(spec, h);
    FieldPipeline f = run_field_pipeline(sd, h, 3 * h, 10, 1e-4, &rng);
    SolverParams params;
    auto records = solve_interface(f, models, h, params, [&](int32_t, const Vec3& x) {
        if (mask && !mask(x)) return std::numeric_limits<double>::quiet_NaN();
        return exact_hk_at(sd, x, h);
    });
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return build_report(name, eta, h, seed, std::move(records), secs);
}

}  // namespace

std::vector<ErrorReport> run_geometry_test(GeometryCase which, int eta, const HybridModels* models, uint64_t seed) {
    const double h = std::pow(2.0, -eta);
    Rng rng(seed);
    double angle = rng.uniform(0, 2 * M_PI);
    Vec3 axis = rng.unit_axis();
    Vec3 shift = rng.uniform_box(-h / 2, h / 2);
    AffineFrame frame = AffineFrame::make(shift, axis, angle);
    const double pad = 9 * h;

    std::vector<ErrorReport> out;
    switch (which) {
        case GeometryCase::Ellipsoid: {
            SurfaceSpec spec = make_ellipsoid(1.65, 0.75, 0.2, frame, pad);
            out.push_back(run_one_geometry("ellipsoid", spec, eta, h, models, rng, seed));
            break;
        }
        case GeometryCase::Paraboloid: {
            SurfaceSpec spec = make_paraboloid(25.6, 12.8, 0.5, frame, pad);
            out.push_back(run_one_geometry("paraboloid", spec, eta, h, models, rng, seed));
            break;
        }
        case GeometryCase::Gaussian: {
            GaussianParams g{1.0, 1.302083e-1, 1.446759e-2};
            double u0 = gaussian_zero_curvature_param(g, 0);
            double v0 = gaussian_zero_curvature_param(g, 1);
            double u_lim = u0 + std::sqrt(g.sigma_u2);
            double v_lim = v0 + std::sqrt(g.sigma_v2);
            SurfaceSpec spec = make_gaussian(g.height, g.sigma_u2, g.sigma_v2, frame, u_lim + 6 * h, v_lim + 6 * h,
                                             pad);
            auto mask = [frame, u_lim, v_lim](const Vec3& x) {
                Vec3 xl = frame.to_local_point(x);
                double a = xl[0] / u_lim, b = xl[1] / v_lim;
                return a * a + b * b <= 1.0;
            };
            out.push_back(run_one_geometry("gaussian", spec, eta, h, models, rng, seed, mask));
            break;
        }
        case GeometryCase::Morph: {
            for (int s = 0; s <= 51; ++s) {
                SurfaceSpec spec = morph_spec(0.06, {1.45, 0.51, 0.17}, s, frame, pad);
                Rng srng = rng.fork(uint64_t(s) + 1);
                out.push_back(
                    run_one_geometry("morph_step" + std::to_string(s), spec, eta, h, models, srng, seed));
            }
            break;
        }
    }
    return out;
}

ConvergenceTable run_convergence_case1(const std::vector<int>& ratios, int trials, const HybridModels* models,
                                       uint64_t seed) {
    const double R = 2.0 / 64.0;
    ConvergenceTable table;
    Rng root(seed);
    SolverParams params;

    for (size_t ri = 0; ri < ratios.size(); ++ri) {
        int ratio = ratios[ri];
        int eta = 5;
        for (int t = ratio; t > 1; t >>= 1) ++eta;
        double h = std::pow(2.0, -eta);

        std::vector<NodeRecord> all;
        for (int trial = 0; trial < trials; ++trial) {
            Rng trng = root.fork(uint64_t(ri) * 100000 + trial + 1);
            Vec3 center = trng.uniform_box(-h / 2, h / 2);
            SurfaceSpec spec = make_sphere(center, R, 9 * h);
            SurfaceDistance sd(spec, h);
            FieldPipeline f = run_field_pipeline(sd, h, 3 * h, 10, 1e-4, &trng);
            auto recs = solve_interface(f, models, h, params, [&](int32_t, const Vec3&) { return h / R; });
            all.insert(all.end(), recs.begin(), recs.end());
        }
        ConvergenceRow row;
        row.resolution = ratio;
        row.baseline = metrics(all, h, false);
        row.hybrid = models ? metrics(all, h, true) : row.baseline;
        table.rows.push_back(row);
    }
    for (size_t i = 1; i < table.rows.size(); ++i) {
        auto ord = [](double prev, double cur) { return std::log2(prev / cur); };
        table.base_l2_order.push_back(ord(table.rows[i - 1].baseline.l2_rel, table.rows[i].baseline.l2_rel));
        table.base_linf_order.push_back(ord(table.rows[i - 1].baseline.linf_rel, table.rows[i].baseline.linf_rel));
        table.hyb_l2_order.push_back(ord(table.rows[i - 1].hybrid.l2_rel, table.rows[i].hybrid.l2_rel));
        table.hyb_linf_order.push_back(ord(table.rows[i - 1].hybrid.linf_rel, table.rows[i].hybrid.linf_rel));
    }
    return table;
}

ConvergenceTable run_convergence_case2(const std::vector<int>& cells, const HybridModels* models) {
    const double R = 0.2222;
    ConvergenceTable table;
    SolverParams params;

    for (int n : cells) {
        FieldPipeline f;
        f.grid = make_uniform_grid({-1, -1, -1}, {1, 1, 1}, n);
        double h = f.grid.h;
        f.phi = NodalField(f.grid);
        for (size_t i = 0; i < f.grid.size(); ++i) {
            Vec3 x = f.grid.position(int32_t(i));
            f.phi[i] = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - R * R;
        }
        f.phi = reinitialize(f.grid, f.phi, 80);
        f.normals = gradient_and_normals(f.grid, f.phi);
        f.curv = nodal_curvatures(f.grid, f.phi, 5 * h);
        f.iface = interface_nodes(f.grid, f.phi);

        auto recs = solve_interface(f, models, h, params, [&](int32_t, const Vec3&) { return h / R; });
        ConvergenceRow row;
        row.resolution = n;
        row.baseline = metrics(recs, h, false);
        row.hybrid = models ? metrics(recs, h, true) : row.baseline;
        table.rows.push_back(row);
    }
    for (size_t i = 1; i < table.rows.size(); ++i) {
        auto ord = [](double prev, double cur) { return std::log2(prev / cur); };
        table.base_mae_order.push_back(ord(table.rows[i - 1].baseline.mae_k, table.rows[i].baseline.mae_k));
        table.hyb_mae_order.push_back(ord(table.rows[i - 1].hybrid.mae_k, table.rows[i].hybrid.mae_k));
    }
    return table;
}

FitLine correlation_fit(const std::vector<NodeRecord>& records) {
    FitLine fit;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (const auto& r : records) {
        if (!std::isfinite(r.hk_exact)) continue;
        double x = r.hk_exact, y = r.hk_hybrid;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
        ++fit.n;
    }
    if (fit.n < 2) return fit;
    double n = double(fit.n);
    double cov = sxy - sx * sy / n;
    double vx = sxx - sx * sx / n;
    double vy = syy - sy * sy / n;
    fit.slope = vx > 0 ? cov / vx : 0.0;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.rho = (vx > 0 && vy > 0) ? cov / std::sqrt(vx * vy) : (vx == 0 && vy == 0 ? 1.0 : 0.0);
    return fit;
}

void emit_report(const ErrorReport& rep, const std::string& dir, const std::vector<std::string>& formats) {
    std::filesystem::create_directories(dir);
    auto want = [&](const char* f) {
        for (const auto& s : formats)
            if (s == f) return true;
        return false;
    };

    if (want("csv")) {
        std::ofstream out(dir + "/" + rep.name + "_summary.csv");
        if (!out) throw std::runtime_error("emit_report: cannot write csv");
        out << "method,n,mae_hk,mae_k,maxae_hk,maxae_k,rmse_hk,rmse_k,l2_rel,linf_rel,"
               "improvement_mae,improvement_maxae,improvement_rmse,wall_seconds\n";
        auto row = [&](const char* m, const Aggregates& a, bool imp) {
            out << m << "," << a.n << "," << format_double(a.mae_hk) << "," << format_double(a.mae_k) << ","
                << format_double(a.maxae_hk) << "," << format_double(a.maxae_k) << "," << format_double(a.rmse_hk)
                << "," << format_double(a.rmse_k) << "," << format_double(a.l2_rel) << ","
                << format_double(a.linf_rel) << ",";
            if (imp)
                out << format_double(rep.improvement_mae) << "," << format_double(rep.improvement_maxae) << ","
                    << format_double(rep.improvement_rmse);
            else
                out << ",,";
            out << "," << format_double(rep.wall_seconds) << "\n";
        };
        row("hybrid", rep.hybrid, true);
        row("baseline", rep.baseline, false);
    }

    if (want("jsonl")) {
        std::ofstream out(dir + "/" + rep.name + "_records.jsonl");
        if (!out) throw std::runtime_error("emit_report: cannot write jsonl");
        for (const auto& r : rep.records) {
            json j;
            j["node"] = r.node;
            j["x"] = {format_double(r.x[0]), format_double(r.x[1]), format_double(r.x[2])};
            j["class"] = r.cls == SampleClass::NonSaddle ? "ns" : "sd";
            j["hk_base"] = format_double(r.hk_base);
            j["hk_hybrid"] = format_double(r.hk_hybrid);
            j["hk_exact"] = std::isfinite(r.hk_exact) ? format_double(r.hk_exact) : "nan";
            j["early_return"] = r.early_return;
            j["fell_back"] = r.fell_back;
            out << j.dump() << "\n";
        }
    }

    if (want("plotdata")) {
        FitLine fit = correlation_fit(rep.records);
        std::ofstream out(dir + "/" + rep.name + "_plotdata.csv");
        if (!out) throw std::runtime_error("emit_report: cannot write plotdata");
        out << "# slope=" << format_double(fit.slope) << "\n";
        out << "# intercept=" << format_double(fit.intercept) << "\n";
        out << "# rho=" << format_double(fit.rho) << "\n";
        out << "hk_exact,hk_hybrid\n";
        for (const auto& r : rep.records) {
            if (!std::isfinite(r.hk_exact)) continue;
            out << format_double(r.hk_exact) << "," << format_double(r.hk_hybrid) << "\n";
        }
    }
}

}  // namespace mlcurv
