#include <doctest.h>

#include <cmath>

#include "mlcurv/neuralnet.hpp"

using namespace mlcurv;

namespace {

SampleMatrix linear_samples(int n, int dim, uint64_t seed) {
    SampleMatrix s;
    s.dim = dim;
    Rng rng(seed);
    std::vector<float> row(dim);
    for (int i = 0; i < n; ++i) {
        for (auto& v : row) v = float(rng.normal());
        float hk = float(0.1 * rng.normal());
        float y = hk + 2.0f * row[0];
        s.push(row.data(), hk, y);
    }
    return s;
}

}  // namespace

TEST_CASE("initialization: zero biases, bounded Glorot weights, seeded") {
    MlpModel m = init_model(72, 140, 2e-6, 12345, "ns");
    const auto& net = m.net;
    for (int i = 0; i < 140; ++i) {
        CHECK(net.theta[net.o_b1 + i] == 0.0f);
        CHECK(net.theta[net.o_b4 + i] == 0.0f);
    }
    CHECK(net.theta[net.o_b5] == 0.0f);

    double lim1 = std::sqrt(6.0 / (72 + 140));
    double lim2 = std::sqrt(6.0 / (140 + 140));
    double lim5 = std::sqrt(6.0 / (140 + 1));
    for (size_t t = net.o_w1; t < net.o_b1; ++t) CHECK(std::fabs(net.theta[t]) <= lim1);
    for (size_t t = net.o_w2; t < net.o_b2; ++t) CHECK(std::fabs(net.theta[t]) <= lim2);
    for (size_t t = net.o_w5; t < net.o_b5; ++t) CHECK(std::fabs(net.theta[t]) <= lim5);

    MlpModel m2 = init_model(72, 140, 2e-6, 12345, "ns");
    CHECK(m.net.theta == m2.net.theta);
    // parameter counts of the two shipped architectures
    CHECK(m.net.param_count() == 69581);
    CHECK(init_model(80, 140, 5e-6, 1, "sd").net.param_count() == 70701);
}

TEST_CASE("zero networks pass the skip connection through") {
    MlpModel m = init_model(8, 6, 0, 3, "ns");
    std::fill(m.net.theta.begin(), m.net.theta.end(), 0.0f);
    std::vector<float> r(8, 0.37f);
    CHECK(forward(m, r.data(), 0.125f) == 0.125f);

    m.net.theta[m.net.o_b5] = 0.5f;
    CHECK(forward(m, r.data(), 0.125f) == 0.625f);
}

TEST_CASE("forward pass matches an independent matrix evaluation") {
    const int mi = 3, nh = 4;
    MlpModel m = init_model(mi, nh, 0, 99, "ns");
    Rng rng(5);
    std::vector<double> r = {0.3, -0.7, 1.1};
    std::vector<float> rf = {0.3f, -0.7f, 1.1f};
    float hk = 0.21f;

    // straightforward double-precision evaluation
    auto th = [&](size_t off) { return double(m.net.theta[off]); };
    std::vector<double> h(nh), h2(nh);
    for (int i = 0; i < nh; ++i) {
        double acc = th(m.net.o_b1 + i);
        for (int k = 0; k < mi; ++k) acc += th(m.net.o_w1 + i * mi + k) * r[k];
        h[i] = std::max(0.0, acc);
    }
    size_t ws[3] = {m.net.o_w2, m.net.o_w3, m.net.o_w4};
    size_t bs[3] = {m.net.o_b2, m.net.o_b3, m.net.o_b4};
    for (int L = 0; L < 3; ++L) {
        for (int i = 0; i < nh; ++i) {
            double acc = th(bs[L] + i);
            for (int k = 0; k < nh; ++k) acc += th(ws[L] + i * nh + k) * h[k];
            h2[i] = std::max(0.0, acc);
        }
        h.swap(h2);
    }
    double want = th(m.net.o_b5) + double(hk);
    for (int k = 0; k < nh; ++k) want += th(m.net.o_w5 + k) * h[k];

    CHECK(double(forward(m, rf.data(), hk)) == doctest::Approx(want).epsilon(1e-6));
    (void)rng;
}

TEST_CASE("doubling the output kernel doubles the correction exactly") {
    MlpModel m = init_model(6, 10, 0, 7, "ns");
    std::vector<float> r = {0.1f, -0.4f, 0.9f, 0.2f, -1.3f, 0.5f};
    float hk = 0.0625f;
    float base = forward(m, r.data(), hk) - hk;
    for (int i = 0; i < 10; ++i) m.net.theta[m.net.o_w5 + i] *= 2.0f;
    float twice = forward(m, r.data(), hk) - hk;
    CHECK(twice == 2.0f * base);
}

TEST_CASE("Adam leaves parameters alone when every residual vanishes") {
    // zero net: predictions equal hk bit-for-bit on every evaluation path
    MlpModel m = init_model(4, 5, 0.0, 21, "ns");
    std::fill(m.net.theta.begin(), m.net.theta.end(), 0.0f);
    SampleMatrix s;
    s.dim = 4;
    Rng rng(6);
    std::vector<float> row(4);
    for (int i = 0; i < 16; ++i) {
        for (auto& v : row) v = float(rng.normal());
        float hk = float(rng.normal());
        s.push(row.data(), hk, hk);
    }
    auto theta0 = m.net.theta;
    TrainConfig cfg;
    cfg.batch = 16;
    cfg.max_epochs = 3;
    cfg.seed = 1;
    train(m, s, s, cfg);
    CHECK(m.net.theta == theta0);
}

TEST_CASE("schedule: plateau halving and exact early stop") {
    TrainConfig cfg;
    cfg.seed = 0;
    LrController c(cfg);

    auto d = c.feed(1.0);  // first value improves on +inf
    CHECK(d.improved);
    CHECK(d.lr == cfg.lr0);

    // 15 stagnant epochs halve the rate; wait counter resets after halving
    for (int i = 0; i < 14; ++i) {
        d = c.feed(1.0);
        CHECK(d.lr == cfg.lr0);
        CHECK(!d.stop);
    }
    d = c.feed(1.0);
    CHECK(d.lr == doctest::Approx(cfg.lr0 / 2));
    for (int i = 0; i < 15; ++i) d = c.feed(1.0);
    CHECK(d.lr == doctest::Approx(cfg.lr0 / 4));

    // improvement resets both counters
    d = c.feed(0.5);
    CHECK(d.improved);
    // constant validation MAE for 50 epochs ends training exactly then
    for (int i = 0; i < 49; ++i) {
        d = c.feed(0.5);
        CHECK(!d.stop);
    }
    d = c.feed(0.5);
    CHECK(d.stop);

    // the floor is respected
    LrController f(cfg);
    f.feed(1.0);
    for (int i = 0; i < 500; ++i) f.feed(1.0);
    CHECK(f.lr == cfg.lr_floor);
}

TEST_CASE("a linear correction target is learned to near the optimizer floor") {
    // Deep ReLU stacks fitted with Adam bottom out around 3e-5 relative error
    // on linearly realizable targets here (measured across widths and anneal
    // schedules; the f32 noise floor is two orders below that).
    SampleMatrix train_set = linear_samples(512, 4, 1);
    MlpModel m = init_model(4, 64, 0.0, 11, "ns");
    double lr = 1e-2;
    double best = 1e300;
    for (int stage = 0; stage < 5; ++stage) {
        TrainConfig cfg;
        cfg.seed = 2 + stage;
        cfg.max_epochs = 250;
        cfg.lr0 = lr;
        cfg.lr_floor = lr;
        cfg.plateau_patience = 1 << 20;
        cfg.stop_patience = 1 << 20;
        TrainHistory h = train(m, train_set, train_set, cfg);
        best = h.best_val_mae;
        lr *= 0.2;
    }
    CHECK(best < 5e-4);  // targets span roughly [-6, 6]
}

TEST_CASE("full-batch loss is monotone on a linearly realizable target") {
    SampleMatrix s = linear_samples(256, 3, 4);
    MlpModel m = init_model(3, 12, 0.0, 13, "ns");
    TrainConfig cfg;
    cfg.seed = 3;
    cfg.batch = 256;  // full batch
    cfg.max_epochs = 200;
    cfg.lr0 = 1e-3;
    TrainHistory h = train(m, s, s, cfg);
    for (size_t e = 1; e < h.train_rmse.size(); ++e) CHECK(h.train_rmse[e] <= h.train_rmse[e - 1] + 1e-6);
}

TEST_CASE("gradient check: tiny double-precision net") {
    double rel = gradient_check(4, 3, 8, 2024, 1e-5);
    CHECK(rel < 1e-4);
}

TEST_CASE("zero net gradient of the output bias is the mean scaled residual") {
    MlpNet<double> net;
    net.set_layout(3, 4);
    std::fill(net.theta.begin(), net.theta.end(), 0.0);
    const int B = 6;
    Rng rng(8);
    std::vector<double> x(B * 3), hk(B), y(B);
    for (auto& v : x) v = rng.normal();
    for (int b = 0; b < B; ++b) {
        hk[b] = rng.normal();
        y[b] = rng.normal();
    }
    std::vector<double> grad(net.param_count(), 0.0);
    batch_loss_grad_f64(net, x.data(), hk.data(), y.data(), B, 0.0, &grad);

    // with all parameters zero, pred = hk, so e = hk - y and dL/db5 = sum e / (B * rmse)
    double sq = 0;
    for (int b = 0; b < B; ++b) sq += (hk[b] - y[b]) * (hk[b] - y[b]);
    double rmse = std::sqrt(sq / B);
    double want = 0;
    for (int b = 0; b < B; ++b) want += (hk[b] - y[b]) / (B * rmse);
    CHECK(grad[net.o_b5] == doctest::Approx(want).epsilon(1e-12));
    // every weight gradient vanishes (dead hidden units)
    for (size_t t = net.o_w1; t < net.o_b5; ++t) CHECK(grad[t] == 0.0);
}

TEST_CASE("duplicated samples scale the gradient consistently") {
    MlpNet<double> net;
    net.set_layout(3, 4);
    Rng rng(9);
    for (auto& v : net.theta) v = 0.3 * rng.normal();
    std::vector<double> x = {0.2, -0.4, 0.9}, hk = {0.1}, y = {0.6};
    std::vector<double> g1(net.param_count(), 0.0), g2(net.param_count(), 0.0);
    batch_loss_grad_f64(net, x.data(), hk.data(), y.data(), 1, 0.0, &g1);

    std::vector<double> x2 = {0.2, -0.4, 0.9, 0.2, -0.4, 0.9}, hk2 = {0.1, 0.1}, y2 = {0.6, 0.6};
    batch_loss_grad_f64(net, x2.data(), hk2.data(), y2.data(), 2, 0.0, &g2);
    for (size_t t = 0; t < g1.size(); ++t) CHECK(g2[t] == doctest::Approx(g1[t]).epsilon(1e-12));
}

TEST_CASE("model artifacts roundtrip bit-for-bit and reject tampering") {
    MlpModel m = init_model(24, 32, 5e-6, 77, "sd");
    m.stats_fingerprint = "deadbeef";
    m.trained_epochs = 12;
    m.best_val_mae = 0.001953125;
    std::string path = "/tmp/mlcurv_test_model.json";
    save_model(m, path);
    MlpModel t = load_model(path);
    CHECK(t.net.theta == m.net.theta);
    CHECK(t.class_tag == "sd");
    CHECK(t.l2 == 5e-6);
    CHECK(t.stats_fingerprint == "deadbeef");
    CHECK(t.best_val_mae == m.best_val_mae);

    std::vector<float> r(24, 0.25f);
    CHECK(forward(m, r.data(), 0.5f) == forward(t, r.data(), 0.5f));

    std::string text = read_text_file(path);
    auto pos = text.find("\"n_h\": 32");
    REQUIRE(pos != std::string::npos);
    std::string bad = text.substr(0, pos) + "\"n_h\": 33" + text.substr(pos + 9);
    write_text_file("/tmp/mlcurv_test_model_bad.json", bad);
    CHECK_THROWS(load_model("/tmp/mlcurv_test_model_bad.json"));
}

TEST_CASE("training histories are reproducible from the seed") {
    SampleMatrix s = linear_samples(200, 3, 21);
    TrainConfig cfg;
    cfg.seed = 9;
    cfg.max_epochs = 25;
    MlpModel a = init_model(3, 8, 1e-6, 31, "ns");
    MlpModel b = init_model(3, 8, 1e-6, 31, "ns");
    TrainHistory ha = train(a, s, s, cfg);
    TrainHistory hb = train(b, s, s, cfg);
    CHECK(ha.val_mae == hb.val_mae);
    CHECK(a.net.theta == b.net.theta);
}
