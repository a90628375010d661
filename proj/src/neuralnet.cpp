#include "mlcurv/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <json.hpp>

namespace mlcurv {

using nlohmann::json;

template <typename T>
void MlpNet<T>::set_layout(int m, int n) {
    m_in = m;
    n_h = n;
    size_t o = 0;
    o_w1 = o; o += size_t(n) * m;
    o_b1 = o; o += n;
    o_w2 = o; o += size_t(n) * n;
    o_b2 = o; o += n;
    o_w3 = o; o += size_t(n) * n;
    o_b3 = o; o += n;
    o_w4 = o; o += size_t(n) * n;
    o_b4 = o; o += n;
    o_w5 = o; o += n;
    o_b5 = o; o += 1;
    theta.assign(o, T(0));
}

template struct MlpNet<float>;
template struct MlpNet<double>;

// four-accumulator dot; fixed combine order keeps results reproducible
template <typename T>
static T dot4(const T* a, const T* b, int n) {
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

template <typename T>
T MlpNet<T>::forward(const T* r, T hk) const {
    const int n = n_h, m = m_in;
    std::vector<T> h(n), h2(n);
    const T* th = theta.data();
    for (int i = 0; i < n; ++i) {
        T v = th[o_b1 + i] + dot4(th + o_w1 + size_t(i) * m, r, m);
        h[i] = relu_h1 ? std::max(T(0), v) : v;
    }
    const size_t ws[3] = {o_w2, o_w3, o_w4};
    const size_t bs[3] = {o_b2, o_b3, o_b4};
    for (int L = 0; L < 3; ++L) {
        for (int i = 0; i < n; ++i)
            h2[i] = std::max(T(0), th[bs[L] + i] + dot4(th + ws[L] + size_t(i) * n, h.data(), n));
        h.swap(h2);
    }
    return th[o_b5] + dot4(th + o_w5, h.data(), n) + hk;
}

MlpModel init_model(int m_iota, int n_h, double l2, uint64_t seed, const std::string& class_tag, bool relu_h1) {
    if (m_iota <= 0 || n_h <= 0) throw std::invalid_argument("init_model: dimensions must be positive");
    MlpModel m;
    m.net.set_layout(m_iota, n_h);
    m.net.relu_h1 = relu_h1;
    m.class_tag = class_tag;
    m.l2 = l2;
    m.seed = seed;
    Rng rng(seed);
    auto glorot = [&](size_t off, int rows, int cols, int fan_in, int fan_out) {
        double lim = std::sqrt(6.0 / double(fan_in + fan_out));
        for (size_t t = 0; t < size_t(rows) * cols; ++t) m.net.theta[off + t] = float(rng.uniform(-lim, lim));
    };
    glorot(m.net.o_w1, n_h, m_iota, m_iota, n_h);
    glorot(m.net.o_w2, n_h, n_h, n_h, n_h);
    glorot(m.net.o_w3, n_h, n_h, n_h, n_h);
    glorot(m.net.o_w4, n_h, n_h, n_h, n_h);
    glorot(m.net.o_w5, 1, n_h, n_h, 1);
    return m;
}

LrController::Decision LrController::feed(double val_mae) {
    Decision d{lr, false, false};
    if (val_mae < best) {
        best = val_mae;
        plateau_wait = 0;
        stop_wait = 0;
        d.improved = true;
    } else {
        ++plateau_wait;
        ++stop_wait;
        if (plateau_wait >= plateau_patience) {
            lr = std::max(lr * factor, lr_floor);
            plateau_wait = 0;
        }
        if (stop_wait >= stop_patience) d.stop = true;
    }
    d.lr = lr;
    return d;
}

// --- batch kernels -----------------------------------------------------------

namespace {

// transposed (in-major) weight copies for the forward AXPY sweep
template <typename T>
struct TransposedWeights {
    std::vector<T> w1t, w2t, w3t, w4t;
    void refresh(const MlpNet<T>& net) {
        const int n = net.n_h, m = net.m_in;
        w1t.resize(size_t(n) * m);
        w2t.resize(size_t(n) * n);
        w3t.resize(size_t(n) * n);
        w4t.resize(size_t(n) * n);
        const T* th = net.theta.data();
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < m; ++k) w1t[size_t(k) * n + i] = th[net.o_w1 + size_t(i) * m + k];
        auto tr = [&](size_t off, std::vector<T>& out) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) out[size_t(j) * n + i] = th[off + size_t(i) * n + j];
        };
        tr(net.o_w2, w2t);
        tr(net.o_w3, w3t);
        tr(net.o_w4, w4t);
    }
};

template <typename T>
void sample_forward(const MlpNet<T>& net, const TransposedWeights<T>& tw, const T* x, T hk, T* acts, T& pred) {
    const int n = net.n_h, m = net.m_in;
    const T* th = net.theta.data();
    T* h1 = acts;
    T* h2 = acts + n;
    T* h3 = acts + 2 * n;
    T* h4 = acts + 3 * n;

    std::memcpy(h1, th + net.o_b1, sizeof(T) * n);
    for (int k = 0; k < m; ++k) {
        T xv = x[k];
        if (xv == T(0)) continue;
        const T* row = tw.w1t.data() + size_t(k) * n;
        for (int i = 0; i < n; ++i) h1[i] += xv * row[i];
    }
    if (net.relu_h1)
        for (int i = 0; i < n; ++i) h1[i] = std::max(T(0), h1[i]);

    auto layer = [&](const T* hin, T* hout, const std::vector<T>& wt, size_t boff) {
        std::memcpy(hout, th + boff, sizeof(T) * n);
        for (int j = 0; j < n; ++j) {
            T hv = hin[j];
            if (hv == T(0)) continue;
            const T* row = wt.data() + size_t(j) * n;
            for (int i = 0; i < n; ++i) hout[i] += hv * row[i];
        }
        for (int i = 0; i < n; ++i) hout[i] = std::max(T(0), hout[i]);
    };
    layer(h1, h2, tw.w2t, net.o_b2);
    layer(h2, h3, tw.w3t, net.o_b3);
    layer(h3, h4, tw.w4t, net.o_b4);

    pred = th[net.o_b5] + dot4(th + net.o_w5, h4, n) + hk;
}

// accumulates parameter gradients (f64) for one sample given dLoss/dPred
template <typename T>
void sample_backward(const MlpNet<T>& net, const T* x, const T* acts, double gout, std::vector<double>& grad,
                     std::vector<double>& d, std::vector<double>& dprev) {
    const int n = net.n_h, m = net.m_in;
    const T* th = net.theta.data();
    const T* h1 = acts;
    const T* h2 = acts + n;
    const T* h3 = acts + 2 * n;
    const T* h4 = acts + 3 * n;

    grad[net.o_b5] += gout;
    for (int i = 0; i < n; ++i) grad[net.o_w5 + i] += gout * double(h4[i]);
    for (int i = 0; i < n; ++i) d[i] = h4[i] > T(0) ? gout * double(th[net.o_w5 + i]) : 0.0;

    const size_t ws[3] = {net.o_w4, net.o_w3, net.o_w2};
    const size_t bs[3] = {net.o_b4, net.o_b3, net.o_b2};
    const T* hs[3] = {h3, h2, h1};
    for (int L = 0; L < 3; ++L) {
        const T* hin = hs[L];
        std::fill(dprev.begin(), dprev.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            double di = d[i];
            if (di == 0.0) continue;
            grad[bs[L] + i] += di;
            double* grow = grad.data() + ws[L] + size_t(i) * n;
            const T* wrow = th + ws[L] + size_t(i) * n;
            for (int j = 0; j < n; ++j) {
                grow[j] += di * double(hin[j]);
                dprev[j] += di * double(wrow[j]);
            }
        }
        bool mask = (L < 2) || net.relu_h1;  // h3, h2 are ReLU outputs; h1 only in the default variant
        for (int j = 0; j < n; ++j) d[j] = (!mask || hin[j] > T(0)) ? dprev[j] : 0.0;
    }

    for (int i = 0; i < n; ++i) {
        double di = d[i];
        if (di == 0.0) continue;
        grad[net.o_b1 + i] += di;
        double* grow = grad.data() + net.o_w1 + size_t(i) * m;
        for (int j = 0; j < m; ++j) grow[j] += di * double(x[j]);
    }
}

template <typename T>
double kernel_sq_sum(const MlpNet<T>& net) {
    const T* th = net.theta.data();
    auto seg = [&](size_t a, size_t b) {
        double s = 0;
        for (size_t t = a; t < b; ++t) s += double(th[t]) * double(th[t]);
        return s;
    };
    return seg(net.o_w1, net.o_b1) + seg(net.o_w2, net.o_b2) + seg(net.o_w3, net.o_b3) + seg(net.o_w4, net.o_b4) +
           seg(net.o_w5, net.o_b5);
}

template <typename T>
void add_l2_gradient(const MlpNet<T>& net, double l2, std::vector<double>& grad) {
    if (l2 == 0) return;
    const T* th = net.theta.data();
    auto seg = [&](size_t a, size_t b) {
        for (size_t t = a; t < b; ++t) grad[t] += 2.0 * l2 * double(th[t]);
    };
    seg(net.o_w1, net.o_b1);
    seg(net.o_w2, net.o_b2);
    seg(net.o_w3, net.o_b3);
    seg(net.o_w4, net.o_b4);
    seg(net.o_w5, net.o_b5);
}

// Full-batch loss and gradient in one precision; the training loop uses the
// float instantiation chunk-wise and gradient_check the double one.
template <typename T>
double batch_loss_grad(const MlpNet<T>& net, const TransposedWeights<T>& tw, const T* x, const T* hk, const T* y,
                       int B, double l2, std::vector<double>* grad) {
    const int n = net.n_h, m = net.m_in;
    std::vector<T> acts(size_t(B) * 4 * n);
    std::vector<double> e(B);
    double sq = 0;
    for (int b = 0; b < B; ++b) {
        T pred;
        sample_forward(net, tw, x + size_t(b) * m, hk[b], acts.data() + size_t(b) * 4 * n, pred);
        e[b] = double(pred) - double(y[b]);
        sq += e[b] * e[b];
    }
    double rmse = std::sqrt(sq / B);
    double loss = rmse + l2 * kernel_sq_sum(net);
    if (grad) {
        std::vector<double> d(n), dprev(n);
        for (int b = 0; b < B; ++b) {
            double gout = rmse > 0 ? e[b] / (B * rmse) : 0.0;
            sample_backward(net, x + size_t(b) * m, acts.data() + size_t(b) * 4 * n, gout, *grad, d, dprev);
        }
        add_l2_gradient(net, l2, *grad);
    }
    return loss;
}

}  // namespace

double batch_loss_grad_f64(const MlpNet<double>& net, const double* x, const double* hk, const double* y, int batch,
                           double l2, std::vector<double>* grad) {
    TransposedWeights<double> tw;
    tw.refresh(net);
    return batch_loss_grad(net, tw, x, hk, y, batch, l2, grad);
}

double validation_mae(const MlpModel& model, const SampleMatrix& s) {
    if (s.size() == 0) throw std::invalid_argument("validation_mae: empty set");
    TransposedWeights<float> tw;
    tw.refresh(model.net);
    const int n = model.net.n_h, m = model.net.m_in;
    std::vector<double> err(s.size());
    parallel_chunks(s.size(), size_t(worker_count()) * 4, [&](size_t, size_t b, size_t e) {
        std::vector<float> acts(size_t(4) * n);
        for (size_t i = b; i < e; ++i) {
            float pred;
            sample_forward(model.net, tw, s.x.data() + i * m, s.hk[i], acts.data(), pred);
            err[i] = std::fabs(double(pred) - double(s.y[i]));
        }
    });
    double sum = 0;
    for (double v : err) sum += v;
    return sum / double(s.size());
}

TrainHistory train(MlpModel& model, const SampleMatrix& train_set, const SampleMatrix& val_set,
                   const TrainConfig& cfg) {
    const int n = model.net.n_h, m = model.net.m_in;
    if (train_set.dim != m || val_set.dim != m) throw std::invalid_argument("train: sample dim mismatch");
    const size_t N = train_set.size();
    if (N == 0 || val_set.size() == 0) throw std::invalid_argument("train: empty sets");

    TrainHistory hist;
    LrController sched(cfg);
    Rng root(cfg.seed);

    const size_t P = model.net.param_count();
    std::vector<double> adam_m(P, 0.0), adam_v(P, 0.0);
    long adam_t = 0;

    std::vector<uint32_t> order(N);
    for (size_t i = 0; i < N; ++i) order[i] = uint32_t(i);

    std::vector<float> best_theta = model.net.theta;
    double lr = cfg.lr0;

    const size_t kChunks = 4;
    std::vector<std::vector<double>> chunk_grad(kChunks, std::vector<double>(P, 0.0));

    TransposedWeights<float> tw;
    std::vector<float> bx(size_t(cfg.batch) * m), bhk(cfg.batch), by(cfg.batch);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng erng = root.fork(uint64_t(epoch) + 1);
        erng.shuffle(order);

        double loss_sum = 0;
        int batches = 0;
        for (size_t start = 0; start < N; start += size_t(cfg.batch)) {
            const int B = int(std::min(size_t(cfg.batch), N - start));
            for (int b = 0; b < B; ++b) {
                uint32_t s = order[start + b];
                std::memcpy(bx.data() + size_t(b) * m, train_set.x.data() + size_t(s) * m, sizeof(float) * m);
                bhk[b] = train_set.hk[s];
                by[b] = train_set.y[s];
            }
            tw.refresh(model.net);

            // forward all, then batch RMSE, then backward (per fixed chunk)
            std::vector<float> acts(size_t(B) * 4 * n);
            std::vector<double> e(B);
            parallel_chunks(size_t(B), kChunks, [&](size_t, size_t cb, size_t ce) {
                for (size_t b = cb; b < ce; ++b) {
                    float pred;
                    sample_forward(model.net, tw, bx.data() + b * m, bhk[b], acts.data() + b * 4 * n, pred);
                    e[b] = double(pred) - double(by[b]);
                }
            });
            double sq = 0;
            for (int b = 0; b < B; ++b) sq += e[b] * e[b];
            double rmse = std::sqrt(sq / B);
            double loss = rmse + model.l2 * kernel_sq_sum(model.net);
            if (!std::isfinite(loss)) throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch));
            loss_sum += loss;
            ++batches;

            parallel_chunks(size_t(B), kChunks, [&](size_t chunk, size_t cb, size_t ce) {
                auto& g = chunk_grad[chunk];
                std::fill(g.begin(), g.end(), 0.0);
                std::vector<double> d(n), dprev(n);
                for (size_t b = cb; b < ce; ++b) {
                    double gout = rmse > 0 ? e[b] / (B * rmse) : 0.0;
                    sample_backward(model.net, bx.data() + b * m, acts.data() + b * 4 * n, gout, g, d, dprev);
                }
            });
            for (size_t c = 1; c < kChunks; ++c)
                for (size_t p = 0; p < P; ++p) chunk_grad[0][p] += chunk_grad[c][p];
            add_l2_gradient(model.net, model.l2, chunk_grad[0]);

            ++adam_t;
            const double bc1 = 1.0 - std::pow(cfg.beta1, double(adam_t));
            const double bc2 = 1.0 - std::pow(cfg.beta2, double(adam_t));
            for (size_t p = 0; p < P; ++p) {
                double g = chunk_grad[0][p];
                adam_m[p] = cfg.beta1 * adam_m[p] + (1.0 - cfg.beta1) * g;
                adam_v[p] = cfg.beta2 * adam_v[p] + (1.0 - cfg.beta2) * g * g;
                double step = lr * (adam_m[p] / bc1) / (std::sqrt(adam_v[p] / bc2) + cfg.adam_eps);
                model.net.theta[p] = float(double(model.net.theta[p]) - step);
            }
        }

        double vmae = validation_mae(model, val_set);
        auto dec = sched.feed(vmae);
        hist.train_rmse.push_back(loss_sum / std::max(batches, 1));
        hist.val_mae.push_back(vmae);
        hist.lr.push_back(lr);
        if (dec.improved) {
            best_theta = model.net.theta;
            hist.best_epoch = epoch;
            hist.best_val_mae = vmae;
        }
        lr = dec.lr;
        hist.epochs = epoch + 1;
        if (dec.stop) break;
    }

    model.net.theta = best_theta;
    model.trained_epochs = hist.epochs;
    model.best_val_mae = hist.best_val_mae;
    return hist;
}

double gradient_check(int m_in, int n_h, int batch, uint64_t seed, double l2) {
    MlpNet<double> net;
    net.set_layout(m_in, n_h);
    Rng rng(seed);
    auto glorot = [&](size_t off, size_t count, int fan_in, int fan_out) {
        double lim = std::sqrt(6.0 / double(fan_in + fan_out));
        for (size_t t = 0; t < count; ++t) net.theta[off + t] = rng.uniform(-lim, lim);
    };
    glorot(net.o_w1, size_t(n_h) * m_in, m_in, n_h);
    glorot(net.o_w2, size_t(n_h) * n_h, n_h, n_h);
    glorot(net.o_w3, size_t(n_h) * n_h, n_h, n_h);
    glorot(net.o_w4, size_t(n_h) * n_h, n_h, n_h);
    glorot(net.o_w5, n_h, n_h, 1);
    // nonzero biases exercise every gradient path
    for (int i = 0; i < n_h; ++i) {
        net.theta[net.o_b1 + i] = rng.uniform(-0.1, 0.1);
        net.theta[net.o_b2 + i] = rng.uniform(-0.1, 0.1);
        net.theta[net.o_b3 + i] = rng.uniform(-0.1, 0.1);
        net.theta[net.o_b4 + i] = rng.uniform(-0.1, 0.1);
    }
    net.theta[net.o_b5] = rng.uniform(-0.1, 0.1);

    std::vector<double> x(size_t(batch) * m_in), hk(batch), y(batch);
    for (auto& v : x) v = rng.normal();
    for (auto& v : hk) v = 0.1 * rng.normal();
    for (auto& v : y) v = rng.normal();

    TransposedWeights<double> tw;
    tw.refresh(net);
    std::vector<double> grad(net.param_count(), 0.0);
    batch_loss_grad(net, tw, x.data(), hk.data(), y.data(), batch, l2, &grad);

    double max_rel = 0;
    const double step = 1e-6;
    for (size_t p = 0; p < net.param_count(); ++p) {
        double keep = net.theta[p];
        net.theta[p] = keep + step;
        tw.refresh(net);
        double lp = batch_loss_grad(net, tw, x.data(), hk.data(), y.data(), batch, l2, nullptr);
        net.theta[p] = keep - step;
        tw.refresh(net);
        double lm = batch_loss_grad(net, tw, x.data(), hk.data(), y.data(), batch, l2, nullptr);
        net.theta[p] = keep;
        double num = (lp - lm) / (2 * step);
        // 1e-6 floor: the central difference of an O(1) loss carries ~1e-10
        // absolute noise, so coordinates below the floor compare absolutely
        double rel = std::fabs(grad[p] - num) / std::max(1e-6, std::fabs(grad[p]) + std::fabs(num));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

// --- serialization -----------------------------------------------------------

static std::string b64_floats(const float* p, size_t count) { return base64_encode(p, count * sizeof(float)); }

static std::vector<float> floats_from_b64(const std::string& s, size_t expect) {
    auto bytes = base64_decode(s);
    if (bytes.size() != expect * sizeof(float)) throw ArtifactError("model: tensor size mismatch");
    std::vector<float> out(expect);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

void save_model(const MlpModel& m, const std::string& path) {
    const auto& net = m.net;
    json j;
    j["class"] = m.class_tag;
    j["m_iota"] = net.m_in;
    j["n_h"] = net.n_h;
    j["relu_h1"] = net.relu_h1;
    j["l2"] = format_double(m.l2);
    j["seed"] = m.seed;
    j["stats_fingerprint"] = m.stats_fingerprint;
    j["trained_epochs"] = m.trained_epochs;
    j["best_val_mae"] = format_double(m.best_val_mae);
    const float* th = net.theta.data();
    json layers = json::array();
    auto push = [&](size_t w_off, size_t w_count, size_t b_off, size_t b_count) {
        layers.push_back(json{{"w", b64_floats(th + w_off, w_count)}, {"b", b64_floats(th + b_off, b_count)}});
    };
    const int n = net.n_h, mi = net.m_in;
    push(net.o_w1, size_t(n) * mi, net.o_b1, n);
    push(net.o_w2, size_t(n) * n, net.o_b2, n);
    push(net.o_w3, size_t(n) * n, net.o_b3, n);
    push(net.o_w4, size_t(n) * n, net.o_b4, n);
    push(net.o_w5, n, net.o_b5, 1);
    j["layers"] = layers;
    write_text_file(path, j.dump(1));
}

MlpModel load_model(const std::string& path) {
    json j = json::parse(read_text_file(path));
    MlpModel m;
    int mi = j.at("m_iota").get<int>();
    int n = j.at("n_h").get<int>();
    if (mi <= 0 || n <= 0 || size_t(j.at("layers").size()) != 5)
        throw ArtifactError("load_model: malformed artifact " + path);
    m.net.set_layout(mi, n);
    m.net.relu_h1 = j.at("relu_h1").get<bool>();
    m.class_tag = j.at("class").get<std::string>();
    m.l2 = parse_double(j.at("l2").get<std::string>());
    m.seed = j.at("seed").get<uint64_t>();
    m.stats_fingerprint = j.at("stats_fingerprint").get<std::string>();
    m.trained_epochs = j.value("trained_epochs", 0);
    m.best_val_mae = j.contains("best_val_mae") ? parse_double(j["best_val_mae"].get<std::string>()) : -1.0;

    auto& net = m.net;
    const auto& layers = j.at("layers");
    auto pull = [&](int idx, size_t w_off, size_t w_count, size_t b_off, size_t b_count) {
        auto w = floats_from_b64(layers[idx].at("w").get<std::string>(), w_count);
        auto b = floats_from_b64(layers[idx].at("b").get<std::string>(), b_count);
        std::memcpy(net.theta.data() + w_off, w.data(), w.size() * sizeof(float));
        std::memcpy(net.theta.data() + b_off, b.data(), b.size() * sizeof(float));
    };
    pull(0, net.o_w1, size_t(n) * mi, net.o_b1, n);
    pull(1, net.o_w2, size_t(n) * n, net.o_b2, n);
    pull(2, net.o_w3, size_t(n) * n, net.o_b3, n);
    pull(3, net.o_w4, size_t(n) * n, net.o_b4, n);
    pull(4, net.o_w5, n, net.o_b5, 1);
    for (float v : net.theta)
        if (!std::isfinite(v)) throw ArtifactError("load_model: non-finite parameter in " + path);
    return m;
}

}  // namespace mlcurv
