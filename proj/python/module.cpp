#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlcurv/datagen.hpp"
#include "mlcurv/harness.hpp"
#include "mlcurv/hybrid.hpp"

namespace py = pybind11;
using namespace mlcurv;

namespace {

DataPacket packet_from_row(const std::vector<double>& row) {
    if (row.size() != kFeatureCount) throw std::invalid_argument("feature row must have 110 entries");
    std::array<float, kFeatureCount> f;
    for (int i = 0; i < kFeatureCount; ++i) f[i] = float(row[i]);
    DataPacket p = unflatten(f.data());
    // keep full precision for the doubles
    for (int n = 0; n < 27; ++n) p.phi[n] = row[n];
    for (int n = 0; n < 27; ++n)
        for (int c = 0; c < 3; ++c) p.normal[n][c] = row[27 + 3 * n + c];
    p.hk = row[108];
    p.h2kg = row[109];
    return p;
}

std::vector<double> row_from_packet(const DataPacket& p) {
    auto f = flatten(p);
    return std::vector<double>(f.begin(), f.end());
}

std::vector<std::vector<double>> py_generate_std_packets(const std::vector<double>& row) {
    auto forms = generate_std_packets(packet_from_row(row));
    std::vector<std::vector<double>> out;
    for (const auto& q : forms) out.push_back(row_from_packet(q));
    return out;
}

std::vector<std::pair<double, double>> py_sphere_baseline(int eta, double radius, uint64_t seed, int nu,
                                                          double eps_rnd) {
    double h = std::pow(2.0, -eta);
    SurfaceSpec spec = make_sphere({0, 0, 0}, radius, 9 * h);
    SurfaceDistance sd(spec, h);
    Rng rng(seed);
    FieldPipeline f = run_field_pipeline(sd, h, 3 * h, nu, eps_rnd, &rng);
    SolverParams params;
    auto recs = solve_interface(f, nullptr, h, params, [&](int32_t, const Vec3&) { return h / radius; });
    std::vector<std::pair<double, double>> out;
    out.reserve(recs.size());
    for (const auto& r : recs) out.emplace_back(r.hk_base, r.hk_exact);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "machine-learning-corrected mean curvature for 3D level sets";

    m.def("ease", &ease, py::arg("t"), py::arg("a_e"), py::arg("A_e"), py::arg("b_e"), py::arg("B_e"),
          "smooth sine blend between two probability plateaus");

    m.def(
        "rand_linspace",
        [](double lo, double hi, int n, uint64_t seed, double jitter) {
            Rng rng(seed);
            return rand_linspace(lo, hi, n, rng, jitter);
        },
        py::arg("lo"), py::arg("hi"), py::arg("n"), py::arg("seed"), py::arg("jitter") = 1.0);

    m.def("generate_std_packets", &py_generate_std_packets, py::arg("features"),
          "six standard symmetry forms of a 110-entry feature row");
    m.def(
        "reorient_standard",
        [](const std::vector<double>& row) { return row_from_packet(reorient_standard(packet_from_row(row))); },
        py::arg("features"));
    m.def(
        "negative_normalize",
        [](const std::vector<double>& row) { return row_from_packet(negative_normalize(packet_from_row(row))); },
        py::arg("features"));

    py::class_<PreprocessStats>(m, "PreprocessStats")
        .def_static(
            "fit",
            [](const std::vector<std::vector<float>>& rows, double h, int m_iota, const std::string& tag) {
                std::vector<std::array<float, kFeatureCount>> r(rows.size());
                for (size_t i = 0; i < rows.size(); ++i) {
                    if (rows[i].size() != kFeatureCount) throw std::invalid_argument("rows must be 110 wide");
                    std::copy(rows[i].begin(), rows[i].end(), r[i].begin());
                }
                return fit_stats(r, h, m_iota, tag);
            },
            py::arg("rows"), py::arg("h"), py::arg("m_iota"), py::arg("class_tag"))
        .def_static("load", &load_stats, py::arg("path"))
        .def("save", [](const PreprocessStats& s, const std::string& path) { save_stats(s, path); }, py::arg("path"))
        .def(
            "apply",
            [](const PreprocessStats& s, const std::vector<float>& row, double h) {
                if (row.size() != kFeatureCount) throw std::invalid_argument("row must be 110 wide");
                return apply_stats(s, row.data(), h);
            },
            py::arg("row"), py::arg("h"))
        .def_property_readonly("m_iota", [](const PreprocessStats& s) { return s.m_iota; })
        .def_property_readonly("h_train", [](const PreprocessStats& s) { return s.h_train; })
        .def_property_readonly("class_tag", [](const PreprocessStats& s) { return s.class_tag; });

    py::class_<MlpModel>(m, "MlpModel")
        .def_static("init", &init_model, py::arg("m_iota"), py::arg("n_h"), py::arg("l2"), py::arg("seed"),
                    py::arg("class_tag"), py::arg("relu_h1") = true)
        .def_static("load", &load_model, py::arg("path"))
        .def("save", [](const MlpModel& mm, const std::string& path) { save_model(mm, path); }, py::arg("path"))
        .def(
            "forward",
            [](const MlpModel& mm, const std::vector<float>& r, float hk) {
                if (int(r.size()) != mm.net.m_in) throw std::invalid_argument("reduced vector has the wrong width");
                return forward(mm, r.data(), hk);
            },
            py::arg("reduced"), py::arg("hk"))
        .def_property_readonly("m_iota", [](const MlpModel& mm) { return mm.net.m_in; })
        .def_property_readonly("n_h", [](const MlpModel& mm) { return mm.net.n_h; })
        .def_property_readonly("class_tag", [](const MlpModel& mm) { return mm.class_tag; })
        .def_property_readonly("param_count", [](const MlpModel& mm) { return mm.net.param_count(); });

    m.def(
        "read_dataset_meta",
        [](const std::string& path) {
            Dataset ds = read_dataset(path);
            py::dict d;
            d["class"] = ds.cls == SampleClass::Saddle ? "sd" : "ns";
            d["eta"] = ds.eta;
            d["h"] = ds.h;
            d["count"] = ds.tuples.size();
            return d;
        },
        py::arg("path"));
    m.def(
        "read_dataset_rows",
        [](const std::string& path, size_t max_rows) {
            Dataset ds = read_dataset(path);
            std::vector<std::pair<std::vector<float>, float>> out;
            for (size_t i = 0; i < std::min(max_rows, ds.tuples.size()); ++i)
                out.emplace_back(std::vector<float>(ds.tuples[i].features.begin(), ds.tuples[i].features.end()),
                                 ds.tuples[i].target);
            return out;
        },
        py::arg("path"), py::arg("max_rows") = size_t(-1));

    m.def("sphere_baseline", &py_sphere_baseline, py::arg("eta"), py::arg("radius"), py::arg("seed") = 1,
          py::arg("nu") = 10, py::arg("eps_rnd") = 1e-4,
          "per-node (baseline, exact) dimensionless curvature pairs on a noisy redistanced sphere");

    m.def("sha256_file", &sha256_file, py::arg("path"));
}
