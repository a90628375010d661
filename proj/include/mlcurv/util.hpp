#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlcurv {

// Missing/corrupt/mismatched artifacts (fingerprints, magics, shapes); the
// CLI maps this to its own exit code.
struct ArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3 operator-(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) {
    double n = norm(a);
    return {a[0] / n, a[1] / n, a[2] / n};
}

// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{};

    static Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }
    // Rodrigues rotation about a unit axis.
    static Mat3 rotation(const Vec3& axis, double angle);

    Vec3 apply(const Vec3& v) const {
        return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
                m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
                m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
    }
    Mat3 transposed() const { return Mat3{{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}}; }
};

// Deterministic xoshiro256** generator with stream forking. Draw order is part
// of every reproducibility contract in this project, so all randomness flows
// through this class instead of <random> distributions.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next();
    // in [0, 1)
    double uniform01();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    // unbiased integer in [0, n)
    uint64_t below(uint64_t n);
    double normal();
    // azimuthal/polar draw: theta ~ U(0, 2pi), phi = acos(2 U(0,1) - 1)
    Vec3 unit_axis();
    Vec3 uniform_box(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

    // Independent child stream; detached from this instance's draw position.
    Rng fork(uint64_t key) const;

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    uint64_t s_[4];
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

uint64_t hash_mix(uint64_t a, uint64_t b);

// --- worker pool -----------------------------------------------------------

int worker_count();
void set_worker_count(int n);

// Runs fn(begin, end) over [0, n) split into contiguous chunks. Chunk
// boundaries depend only on (n, chunks), so per-chunk accumulations reduced in
// chunk order are independent of the number of workers.
void parallel_chunks(size_t n, size_t chunks, const std::function<void(size_t, size_t, size_t)>& fn);
// Convenience: element-parallel loop, one output slot per index.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

// --- encoding / hashing ----------------------------------------------------

std::string base64_encode(const void* data, size_t len);
std::vector<uint8_t> base64_decode(const std::string& text);

std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Shortest round-trippable decimal form of a double.
std::string format_double(double v);
double parse_double(const std::string& s);

// Symmetric eigendecomposition (cyclic Jacobi). a is n*n row-major and is
// destroyed; eigenvectors come back as rows of v, eigenvalues descending.
void jacobi_eigen_sym(int n, std::vector<double>& a, std::vector<double>& v, std::vector<double>& evals);

}  // namespace mlcurv
