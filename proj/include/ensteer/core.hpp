#pragma once

// Common types, error hierarchy and small utilities shared by all modules.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ensteer {

// Hard cap on the state dimension. Keeps point storage allocation-free in
// the integrator hot loops; every entry point validates against it.
inline constexpr int kMaxDim = 8;

using Point = std::vector<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Malformed inputs: dimension mismatches, bad grids, invalid words.
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A request exceeds what an object can deliver (jet order, bracket depth).
struct CapabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A trajectory left its guard box or a flow does not exist where needed.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Step policy produced an unusably small step.
struct StiffnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A reduction plan cannot be built (irreducible word, frequency collision).
struct PlanError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The generator approximation missed its tolerance at some time node.
struct InfeasibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Scenario file fails schema validation.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

inline double sqr(double x) { return x * x; }

inline double euclidean_norm(const double* v, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

inline double euclidean_distance(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += sqr(a[i] - b[i]);
    return std::sqrt(s);
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw StructuralError("loglog_slope: need at least two samples");
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(std::max(y[i], 1e-300));
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Worker cap for parallel maps over independent points. Each worker writes
// disjoint output slots, so results are bitwise identical for any cap.
// ---------------------------------------------------------------------------

inline std::atomic<int>& worker_cap_storage() {
    static std::atomic<int> cap{1};
    return cap;
}

inline int worker_cap() { return worker_cap_storage().load(); }

inline void set_worker_cap(int n) {
    worker_cap_storage().store(std::max(1, n));
}

/// fn(begin, end) over [0, count) split across min(worker_cap, count) chunks.
template <typename Fn>
void parallel_chunks(int count, Fn&& fn) {
    const int workers = std::min(worker_cap(), count);
    if (workers <= 1) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int begin = count * w / workers;
        const int end = count * (w + 1) / workers;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Deterministic RNG (SplitMix64). Distribution code is our own so frozen
// test values survive standard-library changes; streams are derived from
// (seed, index) pairs so parallel trials stay reproducible.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        Rng r(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
        r.next();  // decorrelate nearby seeds
        return r;
    }

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

}  // namespace ensteer
