#pragma once

#include <string>
#include <vector>

#include "mlcurv/packets.hpp"

namespace mlcurv {

// Fitted standardize -> PCA-project -> whiten transform. Means/stds live in
// h-normalized feature space; component rows are orthonormal and ordered by
// descending explained variance.
struct PreprocessStats {
    std::vector<double> mean;                 // 110
    std::vector<double> stdev;                // 110, constant columns replaced by 1
    std::vector<uint8_t> constant_flag;       // 110
    std::vector<std::vector<double>> components;  // m_iota rows of length 110
    std::vector<double> explained_variance;   // m_iota, descending
    int m_iota = 0;
    double h_train = 0;
    std::string class_tag;
};

// Fit from raw f32 feature rows; level-set columns are h-normalized before the
// moments and the correlation-matrix eigendecomposition.
PreprocessStats fit_stats(const std::vector<std::array<float, kFeatureCount>>& rows, double h, int m_iota,
                          const std::string& class_tag);

// Reduced, whitened representation of one row evaluated at mesh size h.
std::vector<float> apply_stats(const PreprocessStats& s, const float* row, double h);
std::vector<float> apply_stats(const PreprocessStats& s, const DataPacket& p, double h);

void save_stats(const PreprocessStats& s, const std::string& path);
PreprocessStats load_stats(const std::string& path);

}  // namespace mlcurv
