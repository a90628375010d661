#include "mlcurv/preprocess.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace mlcurv {

using nlohmann::json;

PreprocessStats fit_stats(const std::vector<std::array<float, kFeatureCount>>& rows, double h, int m_iota,
                          const std::string& class_tag) {
    const size_t n = rows.size();
    const int d = kFeatureCount;
    if (m_iota <= 0 || m_iota > d) throw std::invalid_argument("fit_stats: m_iota out of range");
    if (n <= size_t(m_iota)) throw std::invalid_argument("fit_stats: need more rows than retained dimensions");

    // h-normalized working copy, in double
    std::vector<double> X(n * d);
    parallel_chunks(n, size_t(worker_count()) * 4, [&](size_t, size_t b, size_t e) {
        for (size_t r = b; r < e; ++r)
            for (int c = 0; c < d; ++c) X[r * d + c] = c < 27 ? rows[r][c] / h : double(rows[r][c]);
    });

    PreprocessStats s;
    s.mean.assign(d, 0.0);
    s.stdev.assign(d, 0.0);
    s.constant_flag.assign(d, 0);
    s.m_iota = m_iota;
    s.h_train = h;
    s.class_tag = class_tag;

    for (size_t r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) s.mean[c] += X[r * d + c];
    for (int c = 0; c < d; ++c) s.mean[c] /= double(n);
    for (size_t r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) {
            double t = X[r * d + c] - s.mean[c];
            s.stdev[c] += t * t;
        }
    for (int c = 0; c < d; ++c) {
        s.stdev[c] = std::sqrt(s.stdev[c] / double(n));
        if (s.stdev[c] < 1e-300) {
            s.stdev[c] = 1.0;
            s.constant_flag[c] = 1;
        }
    }

    // standardize in place, then correlation matrix C = Z^T Z / (n - 1)
    parallel_chunks(n, size_t(worker_count()) * 4, [&](size_t, size_t b, size_t e) {
        for (size_t r = b; r < e; ++r)
            for (int c = 0; c < d; ++c) X[r * d + c] = (X[r * d + c] - s.mean[c]) / s.stdev[c];
    });

    std::vector<double> C(size_t(d) * d, 0.0);
    {
        const size_t chunks = 16;
        std::vector<std::vector<double>> partial(chunks, std::vector<double>(size_t(d) * d, 0.0));
        parallel_chunks(n, chunks, [&](size_t chunk, size_t b, size_t e) {
            auto& P = partial[chunk];
            for (size_t r = b; r < e; ++r) {
                const double* x = &X[r * d];
                for (int i = 0; i < d; ++i) {
                    double xi = x[i];
                    if (xi == 0.0) continue;
                    for (int j = i; j < d; ++j) P[size_t(i) * d + j] += xi * x[j];
                }
            }
        });
        for (const auto& P : partial)
            for (size_t t = 0; t < C.size(); ++t) C[t] += P[t];
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < i; ++j) C[size_t(i) * d + j] = C[size_t(j) * d + i];
        for (auto& c : C) c /= double(n - 1);
    }

    std::vector<double> V, evals;
    jacobi_eigen_sym(d, C, V, evals);

    s.components.resize(m_iota);
    s.explained_variance.resize(m_iota);
    for (int r = 0; r < m_iota; ++r) {
        s.explained_variance[r] = std::max(evals[r], 0.0);
        s.components[r].assign(V.begin() + size_t(r) * d, V.begin() + size_t(r + 1) * d);
        // deterministic sign: largest-magnitude entry positive
        int arg = 0;
        for (int c = 1; c < d; ++c)
            if (std::fabs(s.components[r][c]) > std::fabs(s.components[r][arg])) arg = c;
        if (s.components[r][arg] < 0)
            for (auto& x : s.components[r]) x = -x;
    }
    return s;
}

std::vector<float> apply_stats(const PreprocessStats& s, const float* row, double h) {
    const int d = kFeatureCount;
    double z[kFeatureCount];
    for (int c = 0; c < d; ++c) {
        double f = c < 27 ? row[c] / h : double(row[c]);
        z[c] = (f - s.mean[c]) / s.stdev[c];
    }
    std::vector<float> r(s.m_iota);
    for (int k = 0; k < s.m_iota; ++k) {
        const double* v = s.components[k].data();
        double acc = 0;
        for (int c = 0; c < d; ++c) acc += v[c] * z[c];
        double w = std::sqrt(s.explained_variance[k]);
        double val = w > 0 ? acc / w : acc;
        if (!std::isfinite(val))
            throw std::runtime_error("apply_stats: non-finite output at component " + std::to_string(k));
        r[k] = float(val);
    }
    return r;
}

std::vector<float> apply_stats(const PreprocessStats& s, const DataPacket& p, double h) {
    auto f = flatten_f32(p);
    return apply_stats(s, f.data(), h);
}

void save_stats(const PreprocessStats& s, const std::string& path) {
    json j;
    j["class"] = s.class_tag;
    j["m_iota"] = s.m_iota;
    j["h_train"] = format_double(s.h_train);
    auto dump_vec = [](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) a.push_back(format_double(x));
        return a;
    };
    j["mean"] = dump_vec(s.mean);
    j["std"] = dump_vec(s.stdev);
    j["constant"] = s.constant_flag;
    j["explained_variance"] = dump_vec(s.explained_variance);
    json comp = json::array();
    for (const auto& row : s.components) comp.push_back(dump_vec(row));
    j["components"] = comp;
    write_text_file(path, j.dump(1));
}

PreprocessStats load_stats(const std::string& path) {
    json j = json::parse(read_text_file(path));
    PreprocessStats s;
    s.class_tag = j.at("class").get<std::string>();
    s.m_iota = j.at("m_iota").get<int>();
    s.h_train = parse_double(j.at("h_train").get<std::string>());
    auto load_vec = [](const json& a) {
        std::vector<double> v;
        v.reserve(a.size());
        for (const auto& x : a) v.push_back(parse_double(x.get<std::string>()));
        return v;
    };
    s.mean = load_vec(j.at("mean"));
    s.stdev = load_vec(j.at("std"));
    s.constant_flag = j.at("constant").get<std::vector<uint8_t>>();
    s.explained_variance = load_vec(j.at("explained_variance"));
    for (const auto& row : j.at("components")) s.components.push_back(load_vec(row));
    if (int(s.components.size()) != s.m_iota || s.mean.size() != kFeatureCount)
        throw ArtifactError("load_stats: inconsistent artifact " + path);
    return s;
}

}  // namespace mlcurv
