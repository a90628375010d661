#pragma once

#include <string>
#include <vector>

#include "mlcurv/util.hpp"

namespace mlcurv {

// Error-correcting MLP: four ReLU hidden layers of width n_h, a linear neuron
// producing the correction, and a non-adaptable output adding the incoming
// dimensionless curvature back (skip connection). Parameters live in one
// contiguous buffer so the optimizer can treat them uniformly.
template <typename T>
struct MlpNet {
    int m_in = 0, n_h = 0;
    bool relu_h1 = true;  // the literal variant leaves the first hidden layer unactivated
    std::vector<T> theta;

    size_t o_w1 = 0, o_b1 = 0, o_w2 = 0, o_b2 = 0, o_w3 = 0, o_b3 = 0, o_w4 = 0, o_b4 = 0, o_w5 = 0, o_b5 = 0;

    void set_layout(int m, int n);
    size_t param_count() const { return theta.size(); }
    T forward(const T* r, T hk) const;
};

extern template struct MlpNet<float>;
extern template struct MlpNet<double>;

struct MlpModel {
    MlpNet<float> net;
    std::string class_tag;       // "ns" | "sd"
    double l2 = 0;
    uint64_t seed = 0;
    std::string stats_fingerprint;  // SHA-256 of the preprocessing artifact
    int trained_epochs = 0;
    double best_val_mae = -1;
};

MlpModel init_model(int m_iota, int n_h, double l2, uint64_t seed, const std::string& class_tag,
                    bool relu_h1 = true);

inline float forward(const MlpModel& m, const float* r, float hk) { return m.net.forward(r, hk); }

// The f32 correction alone; the non-adaptable output addition can then happen
// at full precision in the caller.
inline float forward_correction(const MlpModel& m, const float* r) { return m.net.forward(r, 0.0f); }

struct TrainConfig {
    int batch = 64;
    int max_epochs = 1000;
    double lr0 = 1.5e-4;
    double lr_floor = 1e-5;
    double plateau_factor = 0.5;
    int plateau_patience = 15;
    int stop_patience = 50;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    uint64_t seed = 0;
};

// Validation-MAE driven schedule: halve the rate after `plateau_patience`
// epochs without improvement (clamped at lr_floor) and stop after
// `stop_patience` stagnant epochs.
struct LrController {
    double lr, lr_floor, factor;
    int plateau_patience, stop_patience;
    double best = 1e300;
    int plateau_wait = 0, stop_wait = 0;

    LrController(const TrainConfig& c)
        : lr(c.lr0), lr_floor(c.lr_floor), factor(c.plateau_factor), plateau_patience(c.plateau_patience),
          stop_patience(c.stop_patience) {}

    struct Decision {
        double lr;
        bool improved;
        bool stop;
    };
    Decision feed(double val_mae);
};

// Preprocessed samples: reduced feature rows, the raw hk skip input, and the
// regression target.
struct SampleMatrix {
    int dim = 0;
    std::vector<float> x;   // n*dim
    std::vector<float> hk;  // n
    std::vector<float> y;   // n
    size_t size() const { return hk.size(); }
    void push(const float* row, float hk_v, float y_v) {
        x.insert(x.end(), row, row + dim);
        hk.push_back(hk_v);
        y.push_back(y_v);
    }
};

struct TrainHistory {
    std::vector<double> train_rmse;  // epoch mean of batch losses (incl. L2 term)
    std::vector<double> val_mae;
    std::vector<double> lr;
    int best_epoch = -1;
    double best_val_mae = 1e300;
    int epochs = 0;
};

// Mini-batch Adam on RMSE + l2 * sum of kernel squares; returns the history
// and leaves the best-validation snapshot in `model`. Throws on divergence.
TrainHistory train(MlpModel& model, const SampleMatrix& train_set, const SampleMatrix& val_set,
                   const TrainConfig& cfg);

double validation_mae(const MlpModel& model, const SampleMatrix& s);

// Max relative deviation between analytic and central finite-difference
// gradients on a small double-precision net.
double gradient_check(int m_in, int n_h, int batch, uint64_t seed, double l2 = 1e-5);

// Full-batch loss (RMSE + l2 * kernel squares) and, when grad != nullptr,
// accumulated parameter gradients; double-precision reference path.
double batch_loss_grad_f64(const MlpNet<double>& net, const double* x, const double* hk, const double* y, int batch,
                           double l2, std::vector<double>* grad);

void save_model(const MlpModel& m, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace mlcurv
