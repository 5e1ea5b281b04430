#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace hdp {

/// Seeded random source. One instance per logical stream; not thread-safe.
/// Fork independent child streams with derive() instead of sharing.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }

    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal();
        return m;
    }

    std::uint64_t seed() const { return seed_; }

    /// Deterministic child stream keyed by an index (e.g. episode number).
    /// Depends only on (seed, stream), not on draws made so far.
    Rng derive(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

    /// SplitMix64-style avalanche of (seed, stream) into a fresh seed.
    static std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace hdp
