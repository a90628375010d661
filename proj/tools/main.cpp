// Command-line driver: data generation, preprocessing, training, and the
// evaluation harness, with manifests that make every run replayable.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlcurv/datagen.hpp"
#include "mlcurv/harness.hpp"
#include "mlcurv/hybrid.hpp"

using namespace mlcurv;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct StageLog {
    std::string path;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void stage(const std::string& name) {
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        t0 = std::chrono::steady_clock::now();
        if (path.empty()) return;
        std::ofstream out(path, std::ios::app);
        out << json{{"stage", name}, {"seconds", secs}}.dump() << "\n";
    }
};

struct RunContext {
    std::string outdir;
    StageLog log;
    json inputs = json::object();
    json outputs = json::object();

    std::string out_path(const std::string& name) const { return outdir + "/" + name; }
    void note_input(const std::string& path) { inputs[path] = sha256_file(path); }
    void note_output(const std::string& path) { outputs[path] = sha256_file(path); }
};

void write_manifest(const RunContext& ctx, const std::string& subcommand, const json& cfg) {
    json m;
    m["tool"] = "mlcurv";
    m["version"] = kToolVersion;
    m["subcommand"] = subcommand;
    m["config"] = cfg;
    m["inputs"] = ctx.inputs;
    m["outputs"] = ctx.outputs;
    write_text_file(ctx.out_path(subcommand + ".manifest.json"), m.dump(1));
    write_text_file(ctx.out_path("run_config.json"), json{{"subcommand", subcommand}, {"config", cfg}}.dump(1));
}

SphereGenParams sphere_params(const json& c) {
    SphereGenParams p = c.value("profile", "desk") == std::string("full") ? SphereGenParams::full_scale()
                                                                           : SphereGenParams::desk();
    p.hk_min = c.value("hk_min", p.hk_min);
    p.hk_max = c.value("hk_max", p.hk_max);
    p.n_spheres = c.value("n_spheres", p.n_spheres);
    p.samples_per_sphere = c.value("samples_per_sphere", p.samples_per_sphere);
    p.nu = c.value("nu", p.nu);
    p.eps_rnd = c.value("eps_rnd", p.eps_rnd);
    return p;
}

SinusoidGenParams sinusoid_params(const json& c) {
    SinusoidGenParams p = c.value("profile", "desk") == std::string("full") ? SinusoidGenParams::full_scale()
                                                                             : SinusoidGenParams::desk();
    p.hk_min = c.value("hk_min", p.hk_min);
    p.hk_max = c.value("hk_max", p.hk_max);
    p.na = c.value("na", p.na);
    p.nt = c.value("nt", p.nt);
    p.nhk = c.value("nhk", p.nhk);
    p.nu = c.value("nu", p.nu);
    p.eps_rnd = c.value("eps_rnd", p.eps_rnd);
    return p;
}

HypParaboloidGenParams hyp_params(const json& c) {
    HypParaboloidGenParams p = c.value("profile", "desk") == std::string("full")
                                   ? HypParaboloidGenParams::full_scale()
                                   : HypParaboloidGenParams::desk();
    p.nr = c.value("nr", p.nr);
    p.nt = c.value("nt", p.nt);
    p.nhk = c.value("nhk", p.nhk);
    p.r_max = c.value("r_max", p.r_max);
    p.nu = c.value("nu", p.nu);
    p.eps_rnd = c.value("eps_rnd", p.eps_rnd);
    return p;
}

void emit_dataset(RunContext& ctx, const Dataset& ds, const std::string& name, bool csv) {
    std::string path = ctx.out_path(name);
    write_dataset(ds, path);
    ctx.note_output(path);
    if (csv) {
        export_dataset_csv(ds, path + ".csv");
        ctx.note_output(path + ".csv");
    }
}

// --- subcommand bodies (shared by the CLI and replay) -------------------------

void run_gen_spheres(const json& cfg, RunContext& ctx) {
    Dataset ds = generate_spherical_dataset(cfg.at("eta"), sphere_params(cfg), cfg.at("seed"));
    ctx.log.stage("generate");
    emit_dataset(ctx, ds, cfg.value("out_name", "spheres_ns.c3ds"), cfg.value("csv", false));
    ctx.log.stage("write");
}

void run_gen_sinusoids(const json& cfg, RunContext& ctx) {
    auto [ns, sd] = generate_sinusoidal_datasets(cfg.at("eta"), sinusoid_params(cfg), cfg.at("seed"));
    ctx.log.stage("generate");
    emit_dataset(ctx, ns, cfg.value("out_ns", "sinusoids_ns.c3ds"), cfg.value("csv", false));
    emit_dataset(ctx, sd, cfg.value("out_sd", "sinusoids_sd.c3ds"), cfg.value("csv", false));
    ctx.log.stage("write");
}

void run_gen_hyppar(const json& cfg, RunContext& ctx) {
    Dataset ds = generate_hyp_paraboloidal_dataset(cfg.at("eta"), hyp_params(cfg), cfg.at("seed"));
    ctx.log.stage("generate");
    emit_dataset(ctx, ds, cfg.value("out_name", "hyppar_sd.c3ds"), cfg.value("csv", false));
    ctx.log.stage("write");
}

void run_merge(const json& cfg, RunContext& ctx) {
    std::vector<Dataset> sources;
    for (const auto& p : cfg.at("inputs")) {
        sources.push_back(read_dataset(p.get<std::string>()));
        ctx.note_input(p.get<std::string>());
    }
    std::vector<double> fractions = cfg.at("fractions").get<std::vector<double>>();
    std::string cls = cfg.at("class").get<std::string>();
    SampleClass want = cls == "sd" ? SampleClass::Saddle : SampleClass::NonSaddle;
    for (const auto& s : sources)
        if (s.cls != want) throw ArtifactError("merge: input class does not match --class " + cls);
    Dataset merged = merge_balanced(sources, fractions, cfg.at("seed"));
    ctx.log.stage("merge");
    emit_dataset(ctx, merged, cfg.value("out_name", "merged.c3ds"), cfg.value("csv", false));
}

void run_split(const json& cfg, RunContext& ctx) {
    std::string in = cfg.at("input");
    Dataset ds = read_dataset(in);
    ctx.note_input(in);
    SplitResult s = stratified_split(ds, cfg.at("seed"));
    ctx.log.stage("split");
    std::string prefix = cfg.value("out_prefix", "dataset");
    emit_dataset(ctx, s.train, prefix + ".train.c3ds", false);
    emit_dataset(ctx, s.test, prefix + ".test.c3ds", false);
    emit_dataset(ctx, s.validation, prefix + ".validation.c3ds", false);
}

void run_fit_preprocess(const json& cfg, RunContext& ctx) {
    std::string in = cfg.at("train");
    Dataset ds = read_dataset(in);
    ctx.note_input(in);
    std::vector<std::array<float, kFeatureCount>> rows;
    rows.reserve(ds.tuples.size());
    for (const auto& t : ds.tuples) rows.push_back(t.features);
    PreprocessStats stats = fit_stats(rows, ds.h, cfg.at("m_iota"), ds.cls == SampleClass::Saddle ? "sd" : "ns");
    ctx.log.stage("fit");
    std::string out = ctx.out_path(cfg.value("out_name", "stats.json"));
    save_stats(stats, out);
    ctx.note_output(out);
}

SampleMatrix preprocessed_matrix(const Dataset& ds, const PreprocessStats& stats) {
    SampleMatrix m;
    m.dim = stats.m_iota;
    m.x.resize(ds.tuples.size() * size_t(stats.m_iota));
    m.hk.resize(ds.tuples.size());
    m.y.resize(ds.tuples.size());
    parallel_chunks(ds.tuples.size(), size_t(worker_count()) * 4, [&](size_t, size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            auto r = apply_stats(stats, ds.tuples[i].features.data(), ds.h);
            std::copy(r.begin(), r.end(), m.x.begin() + i * size_t(stats.m_iota));
            m.hk[i] = ds.tuples[i].features[108];
            m.y[i] = ds.tuples[i].target;
        }
    });
    return m;
}

void run_train(const json& cfg, RunContext& ctx) {
    std::string train_path = cfg.at("train"), val_path = cfg.at("val"), stats_path = cfg.at("stats");
    Dataset train_ds = read_dataset(train_path);
    Dataset val_ds = read_dataset(val_path);
    PreprocessStats stats = load_stats(stats_path);
    ctx.note_input(train_path);
    ctx.note_input(val_path);
    ctx.note_input(stats_path);

    std::string cls = cfg.at("class");
    if (stats.class_tag != cls) throw ArtifactError("train: stats artifact was fitted for class " + stats.class_tag);

    SampleMatrix train_m = preprocessed_matrix(train_ds, stats);
    SampleMatrix val_m = preprocessed_matrix(val_ds, stats);
    ctx.log.stage("preprocess");

    double l2 = cfg.value("l2", cls == "sd" ? 5e-6 : 2e-6);
    MlpModel model =
        init_model(stats.m_iota, cfg.value("n_h", 140), l2, cfg.at("seed"), cls, !cfg.value("eq16_literal", false));
    model.stats_fingerprint = sha256_file(stats_path);

    TrainConfig tc;
    tc.seed = cfg.at("seed");
    tc.batch = cfg.value("batch", tc.batch);
    tc.max_epochs = cfg.value("max_epochs", tc.max_epochs);
    tc.lr0 = cfg.value("lr0", tc.lr0);
    tc.lr_floor = cfg.value("lr_floor", tc.lr_floor);
    TrainHistory hist = train(model, train_m, val_m, tc);
    ctx.log.stage("train");

    std::string out = ctx.out_path(cfg.value("out_name", "model.json"));
    save_model(model, out);
    ctx.note_output(out);

    json hj;
    hj["epochs"] = hist.epochs;
    hj["best_epoch"] = hist.best_epoch;
    hj["best_val_mae"] = format_double(hist.best_val_mae);
    json curves = json::array();
    for (size_t e = 0; e < hist.val_mae.size(); ++e)
        curves.push_back(json{{"epoch", e},
                              {"train_rmse", format_double(hist.train_rmse[e])},
                              {"val_mae", format_double(hist.val_mae[e])},
                              {"lr", format_double(hist.lr[e])}});
    hj["curve"] = curves;
    std::string hist_path = out + ".history.json";
    write_text_file(hist_path, hj.dump(1));
    ctx.note_output(hist_path);
    std::fprintf(stderr, "trained %s: epochs=%d best_val_mae=%.6g\n", cls.c_str(), hist.epochs, hist.best_val_mae);
}

std::unique_ptr<HybridModels> maybe_models(const json& cfg, RunContext& ctx) {
    if (!cfg.contains("ns_model") || cfg.at("ns_model").get<std::string>().empty()) return nullptr;
    auto m = std::make_unique<HybridModels>();
    *m = load_hybrid_models(cfg.at("ns_model"), cfg.at("ns_stats"), cfg.at("sd_model"), cfg.at("sd_stats"));
    for (const char* k : {"ns_model", "ns_stats", "sd_model", "sd_stats"}) ctx.note_input(cfg.at(k));
    return m;
}

void run_eval_geometry(const json& cfg, RunContext& ctx) {
    auto models = maybe_models(cfg, ctx);
    GeometryCase which = geometry_case_from_name(cfg.at("shape"));
    auto reports = run_geometry_test(which, cfg.at("eta"), models.get(), cfg.at("seed"));
    ctx.log.stage("evaluate");
    std::vector<std::string> formats = cfg.value("formats", std::vector<std::string>{"csv", "jsonl", "plotdata"});
    for (const auto& rep : reports) {
        emit_report(rep, ctx.outdir, formats);
        for (const auto& f : formats) {
            std::string suffix = f == std::string("csv")     ? "_summary.csv"
                                 : f == std::string("jsonl") ? "_records.jsonl"
                                                             : "_plotdata.csv";
            ctx.note_output(ctx.out_path(rep.name + suffix));
        }
        std::fprintf(stderr, "%s: baseline mae_hk=%.6g hybrid mae_hk=%.6g improvement=%.3g\n", rep.name.c_str(),
                     rep.baseline.mae_hk, rep.hybrid.mae_hk, rep.improvement_mae);
    }
    ctx.log.stage("emit");
}

json convergence_json(const ConvergenceTable& t, bool case1) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        json j;
        j["resolution"] = r.resolution;
        if (case1) {
            j["baseline_l2_rel"] = format_double(r.baseline.l2_rel);
            j["baseline_linf_rel"] = format_double(r.baseline.linf_rel);
            j["hybrid_l2_rel"] = format_double(r.hybrid.l2_rel);
            j["hybrid_linf_rel"] = format_double(r.hybrid.linf_rel);
        } else {
            j["baseline_mae_k"] = format_double(r.baseline.mae_k);
            j["baseline_maxae_k"] = format_double(r.baseline.maxae_k);
            j["hybrid_mae_k"] = format_double(r.hybrid.mae_k);
            j["hybrid_maxae_k"] = format_double(r.hybrid.maxae_k);
        }
        rows.push_back(j);
    }
    json out;
    out["rows"] = rows;
    auto dump_orders = [](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) a.push_back(format_double(x));
        return a;
    };
    if (case1) {
        out["baseline_l2_order"] = dump_orders(t.base_l2_order);
        out["hybrid_l2_order"] = dump_orders(t.hyb_l2_order);
        out["baseline_linf_order"] = dump_orders(t.base_linf_order);
        out["hybrid_linf_order"] = dump_orders(t.hyb_linf_order);
    } else {
        out["baseline_mae_order"] = dump_orders(t.base_mae_order);
        out["hybrid_mae_order"] = dump_orders(t.hyb_mae_order);
    }
    return out;
}

void run_convergence1_cmd(const json& cfg, RunContext& ctx) {
    auto models = maybe_models(cfg, ctx);
    ConvergenceTable t =
        run_convergence_case1(cfg.at("ratios").get<std::vector<int>>(), cfg.at("trials"), models.get(),
                              cfg.at("seed"));
    ctx.log.stage("evaluate");
    std::string out = ctx.out_path("convergence1.json");
    write_text_file(out, convergence_json(t, true).dump(1));
    ctx.note_output(out);
}

void run_convergence2_cmd(const json& cfg, RunContext& ctx) {
    auto models = maybe_models(cfg, ctx);
    ConvergenceTable t = run_convergence_case2(cfg.at("cells").get<std::vector<int>>(), models.get());
    ctx.log.stage("evaluate");
    std::string out = ctx.out_path("convergence2.json");
    write_text_file(out, convergence_json(t, false).dump(1));
    ctx.note_output(out);
}

void run_infer(const json& cfg, RunContext& ctx) {
    auto models = maybe_models(cfg, ctx);
    if (!models) throw std::invalid_argument("infer: --ns-model/--sd-model artifacts are required");
    std::string out = ctx.out_path(cfg.value("out_name", "inference.csv"));

    if (cfg.contains("dataset")) {
        std::string in = cfg.at("dataset");
        Dataset ds = read_dataset(in);
        ctx.note_input(in);
        const InferenceBundle& bundle = ds.cls == SampleClass::Saddle ? models->sd : models->ns;
        std::ofstream o(out);
        o << "hk,target,hk_corrected\n";
        for (const auto& t : ds.tuples) {
            auto r = apply_stats(bundle.stats, t.features.data(), ds.h);
            double corrected = double(t.features[108]) + double(forward_correction(bundle.model, r.data()));
            o << format_double(t.features[108]) << "," << format_double(t.target) << "," << format_double(corrected)
              << "\n";
        }
    } else {
        int eta = cfg.at("eta");
        double h = std::pow(2.0, -eta);
        double radius = cfg.value("radius", 0.25);
        SurfaceSpec spec = make_sphere({0, 0, 0}, radius, 9 * h);
        SurfaceDistance sd(spec, h);
        Rng rng(cfg.at("seed").get<uint64_t>());
        FieldPipeline f = run_field_pipeline(sd, h, 3 * h, cfg.value("nu", 10), cfg.value("eps_rnd", 1e-4), &rng);
        SolverParams params;
        auto recs = solve_interface(f, models.get(), h, params, [&](int32_t, const Vec3&) { return h / radius; });
        std::ofstream o(out);
        o << "x,y,z,class,hk_base,hk_hybrid,hk_exact\n";
        for (const auto& r : recs)
            o << format_double(r.x[0]) << "," << format_double(r.x[1]) << "," << format_double(r.x[2]) << ","
              << (r.cls == SampleClass::Saddle ? "sd" : "ns") << "," << format_double(r.hk_base) << ","
              << format_double(r.hk_hybrid) << "," << format_double(r.hk_exact) << "\n";
    }
    ctx.note_output(out);
    ctx.log.stage("infer");
}

using Runner = void (*)(const json&, RunContext&);

Runner runner_for(const std::string& name) {
    if (name == "gen-spheres") return run_gen_spheres;
    if (name == "gen-sinusoids") return run_gen_sinusoids;
    if (name == "gen-hyppar") return run_gen_hyppar;
    if (name == "merge") return run_merge;
    if (name == "split") return run_split;
    if (name == "fit-preprocess") return run_fit_preprocess;
    if (name == "train") return run_train;
    if (name == "eval-geometry") return run_eval_geometry;
    if (name == "convergence1") return run_convergence1_cmd;
    if (name == "convergence2") return run_convergence2_cmd;
    if (name == "infer") return run_infer;
    throw std::invalid_argument("unknown subcommand: " + name);
}

void dispatch(const std::string& name, const json& cfg, const std::string& outdir, const std::string& log_path) {
    RunContext ctx;
    ctx.outdir = outdir;
    ctx.log.path = log_path;
    fs::create_directories(outdir);
    if (cfg.contains("workers")) set_worker_count(cfg.at("workers"));
    runner_for(name)(cfg, ctx);
    write_manifest(ctx, name, cfg);
}

void run_replay(const std::string& manifest_path, const std::string& outdir, const std::string& log_path) {
    json m = json::parse(read_text_file(manifest_path));
    std::string name = m.at("subcommand");
    dispatch(name, m.at("config"), outdir, log_path);
    for (auto it = m.at("outputs").begin(); it != m.at("outputs").end(); ++it) {
        std::string base = fs::path(it.key()).filename().string();
        std::string now = outdir + "/" + base;
        if (!fs::exists(now) || sha256_file(now) != it.value().get<std::string>())
            throw ArtifactError("replay: artifact " + base + " differs from the manifest");
    }
    std::fprintf(stderr, "replay of %s reproduced %zu artifact(s) byte-identically\n", name.c_str(),
                 m.at("outputs").size());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"machine-learning-corrected mean curvature for 3D level sets"};
    app.set_config("--config", "", "read option defaults from a TOML-style file");

    std::string outdir = ".";
    std::string log_path;
    uint64_t seed = 1;
    int workers = 0;
    std::string profile = "desk";
    app.add_option("--out", outdir, "output directory")->capture_default_str();
    app.add_option("--log", log_path, "JSONL stage-timing log");
    app.add_option("--seed", seed, "global seed")->capture_default_str();
    app.add_option("--workers", workers, "worker threads (0 = hardware)");
    app.add_option("--profile", profile, "parameter profile: desk | full")->capture_default_str();

    json cfg;
    std::string sub;

    int eta = 6;
    bool csv = false;

    {
        auto* c = app.add_subcommand("gen-spheres", "spherical-interface training data");
        c->add_option("--eta", eta, "refinement level (h = 2^-eta)")->capture_default_str();
        c->add_flag("--csv", csv, "also export a CSV mirror");
        static int nsph = -1, nsam = -1, nu = -1;
        c->add_option("--nsph", nsph, "number of spheres");
        c->add_option("--nsam", nsam, "samples per sphere");
        c->add_option("--nu", nu, "redistancing steps");
        c->parse_complete_callback([&]() {
            sub = "gen-spheres";
            cfg["eta"] = eta;
            cfg["csv"] = csv;
            if (nsph > 0) cfg["n_spheres"] = nsph;
            if (nsam > 0) cfg["samples_per_sphere"] = nsam;
            if (nu >= 0) cfg["nu"] = nu;
        });
    }
    {
        auto* c = app.add_subcommand("gen-sinusoids", "sinusoidal-interface training data");
        c->add_option("--eta", eta)->capture_default_str();
        c->add_flag("--csv", csv);
        static int na = -1, nt = -1, nhk = -1, nu = -1;
        c->add_option("--na", na);
        c->add_option("--nt", nt);
        c->add_option("--nhk", nhk);
        c->add_option("--nu", nu);
        c->parse_complete_callback([&]() {
            sub = "gen-sinusoids";
            cfg["eta"] = eta;
            cfg["csv"] = csv;
            if (na > 0) cfg["na"] = na;
            if (nt > 0) cfg["nt"] = nt;
            if (nhk > 0) cfg["nhk"] = nhk;
            if (nu >= 0) cfg["nu"] = nu;
        });
    }
    {
        auto* c = app.add_subcommand("gen-hyppar", "hyperbolic-paraboloidal training data");
        c->add_option("--eta", eta)->capture_default_str();
        c->add_flag("--csv", csv);
        static int nr = -1, nt = -1, nhk = -1, nu = -1;
        c->add_option("--nr", nr);
        c->add_option("--nt", nt);
        c->add_option("--nhk", nhk);
        c->add_option("--nu", nu);
        c->parse_complete_callback([&]() {
            sub = "gen-hyppar";
            cfg["eta"] = eta;
            cfg["csv"] = csv;
            if (nr > 0) cfg["nr"] = nr;
            if (nt > 0) cfg["nt"] = nt;
            if (nhk > 0) cfg["nhk"] = nhk;
            if (nu >= 0) cfg["nu"] = nu;
        });
    }
    {
        auto* c = app.add_subcommand("merge", "concatenate dataset fractions and rebalance");
        static std::vector<std::string> inputs;
        static std::vector<double> fractions;
        static std::string cls = "ns", out_name = "merged.c3ds";
        c->add_option("--inputs", inputs, "dataset files")->required();
        c->add_option("--fractions", fractions, "per-source fractions")->required();
        c->add_option("--class", cls, "ns | sd")->required();
        c->add_option("--out-name", out_name);
        c->parse_complete_callback([&]() {
            sub = "merge";
            cfg["inputs"] = inputs;
            cfg["fractions"] = fractions;
            cfg["class"] = cls;
            cfg["out_name"] = out_name;
        });
    }
    {
        auto* c = app.add_subcommand("split", "stratified 70/15/15 split");
        static std::string input, prefix = "dataset";
        c->add_option("--input", input)->required();
        c->add_option("--out-prefix", prefix);
        c->parse_complete_callback([&]() {
            sub = "split";
            cfg["input"] = input;
            cfg["out_prefix"] = prefix;
        });
    }
    {
        auto* c = app.add_subcommand("fit-preprocess", "fit the standardize/PCA/whiten transform");
        static std::string train_path, out_name = "stats.json";
        static int m_iota = 72;
        c->add_option("--train", train_path)->required();
        c->add_option("--m-iota", m_iota)->capture_default_str();
        c->add_option("--out-name", out_name);
        c->parse_complete_callback([&]() {
            sub = "fit-preprocess";
            cfg["train"] = train_path;
            cfg["m_iota"] = m_iota;
            cfg["out_name"] = out_name;
        });
    }
    {
        auto* c = app.add_subcommand("train", "optimize an error-correcting network");
        static std::string train_path, val_path, stats_path, cls = "ns", out_name = "model.json";
        static int n_h = 140, max_epochs = -1, batch = -1;
        static double l2 = -1, lr0 = -1;
        static bool eq16 = false;
        c->add_option("--train", train_path)->required();
        c->add_option("--val", val_path)->required();
        c->add_option("--stats", stats_path)->required();
        c->add_option("--class", cls)->required();
        c->add_option("--n-h", n_h)->capture_default_str();
        c->add_option("--l2", l2, "override the class default");
        c->add_option("--max-epochs", max_epochs);
        c->add_option("--batch", batch);
        c->add_option("--lr0", lr0);
        c->add_flag("--eq16-literal", eq16, "leave the first hidden layer unactivated");
        c->add_option("--out-name", out_name);
        c->parse_complete_callback([&]() {
            sub = "train";
            cfg["train"] = train_path;
            cfg["val"] = val_path;
            cfg["stats"] = stats_path;
            cfg["class"] = cls;
            cfg["n_h"] = n_h;
            cfg["out_name"] = out_name;
            cfg["eq16_literal"] = eq16;
            if (l2 >= 0) cfg["l2"] = l2;
            if (max_epochs > 0) cfg["max_epochs"] = max_epochs;
            if (batch > 0) cfg["batch"] = batch;
            if (lr0 > 0) cfg["lr0"] = lr0;
        });
    }

    static std::string ns_model, ns_stats, sd_model, sd_stats;
    auto add_model_opts = [&](CLI::App* c) {
        c->add_option("--ns-model", ns_model);
        c->add_option("--ns-stats", ns_stats);
        c->add_option("--sd-model", sd_model);
        c->add_option("--sd-stats", sd_stats);
    };
    auto fill_models = [&]() {
        if (!ns_model.empty()) {
            cfg["ns_model"] = ns_model;
            cfg["ns_stats"] = ns_stats;
            cfg["sd_model"] = sd_model;
            cfg["sd_stats"] = sd_stats;
        }
    };

    {
        auto* c = app.add_subcommand("eval-geometry", "stationary-geometry error reports");
        static std::string shape = "ellipsoid";
        c->add_option("--shape", shape, "ellipsoid | paraboloid | gaussian | morph")->required();
        c->add_option("--eta", eta)->capture_default_str();
        add_model_opts(c);
        c->parse_complete_callback([&]() {
            sub = "eval-geometry";
            cfg["shape"] = shape;
            cfg["eta"] = eta;
            fill_models();
        });
    }
    {
        auto* c = app.add_subcommand("convergence1", "relative errors on randomly shifted spheres");
        static std::vector<int> ratios = {2, 4, 8, 16, 32};
        static int trials = 100;
        c->add_option("--ratios", ratios)->capture_default_str();
        c->add_option("--trials", trials)->capture_default_str();
        add_model_opts(c);
        c->parse_complete_callback([&]() {
            sub = "convergence1";
            cfg["ratios"] = ratios;
            cfg["trials"] = trials;
            fill_models();
        });
    }
    {
        auto* c = app.add_subcommand("convergence2", "absolute errors on uniform grids");
        static std::vector<int> cells = {19, 38, 76, 152};
        c->add_option("--cells", cells)->capture_default_str();
        add_model_opts(c);
        c->parse_complete_callback([&]() {
            sub = "convergence2";
            cfg["cells"] = cells;
            fill_models();
        });
    }
    {
        auto* c = app.add_subcommand("infer", "corrected curvatures for a dataset or a sphere");
        static std::string dataset;
        static double radius = 0.25;
        c->add_option("--dataset", dataset, "packet dataset (.c3ds)");
        c->add_option("--eta", eta)->capture_default_str();
        c->add_option("--radius", radius)->capture_default_str();
        add_model_opts(c);
        c->parse_complete_callback([&]() {
            sub = "infer";
            if (!dataset.empty()) cfg["dataset"] = dataset;
            cfg["eta"] = eta;
            cfg["radius"] = radius;
            fill_models();
        });
    }
    static std::string manifest_path;
    {
        auto* c = app.add_subcommand("replay", "re-run a manifest and verify byte-identical artifacts");
        c->add_option("--manifest", manifest_path)->required();
        c->parse_complete_callback([&]() { sub = "replay"; });
    }

    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    // parent-app option values are processed after subcommand callbacks ran,
    // so the globals are injected here
    if (!sub.empty() && sub != "replay") {
        cfg["seed"] = seed;
        cfg["profile"] = profile;
        if (workers > 0) cfg["workers"] = workers;
    }

    try {
        if (sub == "replay")
            run_replay(manifest_path, outdir, log_path);
        else
            dispatch(sub, cfg, outdir, log_path);
    } catch (const ArtifactError& e) {
        std::fprintf(stderr, "artifact error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    }
    return 0;
}
