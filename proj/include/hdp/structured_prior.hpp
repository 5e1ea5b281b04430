#pragma once

#include "hdp/gp_prior.hpp"
#include "hdp/rng.hpp"
#include "hdp/trajectory.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hdp {

/// Contiguous coordinate range [begin, begin+len) within one state vector.
struct CoordSlice {
    int begin = 0;
    int len = 0;
};

/// Soft observations of a stacked trajectory: values, where they live
/// (timestep + coordinate slice), and the observation noise covariance.
struct KeyStateObservation {
    Eigen::VectorXd values;                              ///< stacked observed values
    std::vector<std::pair<int, CoordSlice>> indices;     ///< (timestep, slice), timesteps strictly increasing
    Eigen::MatrixXd noise_cov;                           ///< observation covariance, diagonal entries >= kMinObsVariance

    static constexpr double kMinObsVariance = 1e-8;

    /// Flattened trajectory-row index of every observed coordinate, in
    /// stacking order.
    std::vector<int> flat_rows(int state_dim) const;

    int obs_dim() const { return static_cast<int>(values.size()); }

    /// Throws ConfigError on out-of-range timesteps/slices, non-increasing
    /// timesteps, shape mismatches, or variances below the floor.
    void validate(int horizon, int state_dim) const;

    /// Diagonal observation noise helper.
    static KeyStateObservation with_diagonal_noise(Eigen::VectorXd values,
                                                   std::vector<std::pair<int, CoordSlice>> indices,
                                                   const Eigen::VectorXd& variances);
};

/// Task-conditioned trajectory Gaussian: the diffusion noise model. Holds the
/// conditioned mean/covariance plus a Cholesky factor for sampling and
/// inverse application. Immutable after construction; safe to share.
class StructuredPrior {
public:
    /// Symmetrizes, adds relative jitter, factors. Throws IllConditionedError
    /// (with the offending eigenvalue) if factorization fails.
    StructuredPrior(Eigen::VectorXd mean, Eigen::MatrixXd cov, int horizon, int state_dim);

    /// Zero-mean unit-covariance prior; the standard isotropic noise model.
    static StructuredPrior isotropic(int horizon, int state_dim);

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }
    /// Lower Cholesky factor of cov + jitter*I.
    const Eigen::MatrixXd& chol() const { return chol_; }
    int horizon() const { return horizon_; }
    int state_dim() const { return state_dim_; }
    Eigen::Index dim() const { return mean_.size(); }

    /// cov^{-1} v via two triangular solves.
    Eigen::VectorXd apply_inverse(const Eigen::VectorXd& v) const;

    /// v' cov^{-1} v >= 0.
    double mahalanobis_sq(const Eigen::VectorXd& v) const;

    /// mean + chol * z with z standard normal.
    Eigen::VectorXd sample_stacked(Rng& rng) const;

    std::vector<Trajectory> sample(int count, Rng& rng) const;

private:
    StructuredPrior() = default;
    friend class GainCache;

    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd chol_;
    int horizon_ = 0;
    int state_dim_ = 0;
};

/// Gaussian conditioning of the GP prior on soft key-state observations.
StructuredPrior condition(const GpPrior& prior, const KeyStateObservation& obs);

/// Cache of conditioning gains keyed by the selection structure (timesteps,
/// slices, noise diagonal). Observed values vary per task; the gain and the
/// conditioned covariance do not. Concurrent reads are shared; insertion is
/// exclusive. Duplicate computation of the same key is harmless (values are
/// identical, last write wins).
class GainCache {
public:
    GainCache() = default;

    /// Same output as condition(); reuses the cached gain and covariance when
    /// the selection structure has been seen before.
    StructuredPrior get_or_compute(const GpPrior& prior, const KeyStateObservation& obs);

    std::size_t size() const;
    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }

    /// Binary persistence. The file is an optimization only; results are
    /// identical with or without it.
    void save(const std::string& path) const;
    void load(const std::string& path);

    static std::string encode_key(const KeyStateObservation& obs, int state_dim);

private:
    friend StructuredPrior condition(const GpPrior&, const KeyStateObservation&);

    struct Entry {
        Eigen::MatrixXd gain;    ///< Hd x n
        Eigen::MatrixXd cov;     ///< conditioned covariance
        Eigen::MatrixXd chol;    ///< its Cholesky factor
        std::vector<int> rows;   ///< flattened observed rows
    };

    static Entry compute_entry(const GpPrior& prior, const KeyStateObservation& obs);
    static StructuredPrior assemble(const GpPrior& prior, const KeyStateObservation& obs,
                                    const Entry& entry);

    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, Entry> entries_;
    mutable std::atomic<std::uint64_t> hits_{0};
    mutable std::atomic<std::uint64_t> misses_{0};
};

}  // namespace hdp
