#include "hdp/structured_prior.hpp"

#include "hdp/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>

namespace hdp {

namespace {

Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& cov, const char* what) {
    const double jitter = jitter_for(cov);
    Eigen::MatrixXd jittered = cov;
    jittered.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(jittered);
    if (llt.info() != Eigen::Success) {
        const Eigen::VectorXd eigs =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly)
                .eigenvalues();
        throw IllConditionedError(
            std::string(what) + ": covariance is not PSD beyond jitter tolerance, "
            "min eigenvalue " + std::to_string(eigs.minCoeff()),
            eigs.minCoeff());
    }
    return llt.matrixL();
}

void append_double_hex(std::string& out, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(bits));
    out += buf;
}

}  // namespace

std::vector<int> KeyStateObservation::flat_rows(int state_dim) const {
    std::vector<int> rows;
    rows.reserve(values.size());
    for (const auto& [t, slice] : indices)
        for (int j = 0; j < slice.len; ++j) rows.push_back(t * state_dim + slice.begin + j);
    return rows;
}

void KeyStateObservation::validate(int horizon, int state_dim) const {
    int total = 0;
    int prev_t = -1;
    for (const auto& [t, slice] : indices) {
        if (t <= prev_t)
            throw ConfigError("KeyStateObservation: timesteps must be strictly increasing");
        if (t < 0 || t >= horizon)
            throw ConfigError("KeyStateObservation: timestep " + std::to_string(t) +
                              " outside [0, " + std::to_string(horizon) + ")");
        if (slice.begin < 0 || slice.len < 1 || slice.begin + slice.len > state_dim)
            throw ConfigError("KeyStateObservation: coordinate slice out of range");
        prev_t = t;
        total += slice.len;
    }
    if (values.size() != total)
        throw ConfigError("KeyStateObservation: values length does not match slices");
    if (noise_cov.rows() != total || noise_cov.cols() != total)
        throw ConfigError("KeyStateObservation: noise covariance shape mismatch");
    for (int j = 0; j < total; ++j)
        if (!(noise_cov(j, j) >= kMinObsVariance))
            throw ConfigError("KeyStateObservation: noise variance below floor");
}

KeyStateObservation KeyStateObservation::with_diagonal_noise(
    Eigen::VectorXd values, std::vector<std::pair<int, CoordSlice>> indices,
    const Eigen::VectorXd& variances) {
    KeyStateObservation obs;
    obs.values = std::move(values);
    obs.indices = std::move(indices);
    obs.noise_cov = variances.cwiseMax(kMinObsVariance).asDiagonal();
    return obs;
}

StructuredPrior::StructuredPrior(Eigen::VectorXd mean, Eigen::MatrixXd cov, int horizon,
                                 int state_dim)
    : mean_(std::move(mean)), horizon_(horizon), state_dim_(state_dim) {
    cov_ = 0.5 * (cov + cov.transpose());
    chol_ = cholesky_or_throw(cov_, "StructuredPrior");
}

StructuredPrior StructuredPrior::isotropic(int horizon, int state_dim) {
    StructuredPrior p;
    const Eigen::Index n = static_cast<Eigen::Index>(horizon) * state_dim;
    p.mean_ = Eigen::VectorXd::Zero(n);
    p.cov_ = Eigen::MatrixXd::Identity(n, n);
    p.chol_ = Eigen::MatrixXd::Identity(n, n);
    p.horizon_ = horizon;
    p.state_dim_ = state_dim;
    return p;
}

Eigen::VectorXd StructuredPrior::apply_inverse(const Eigen::VectorXd& v) const {
    Eigen::VectorXd y = chol_.triangularView<Eigen::Lower>().solve(v);
    return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

double StructuredPrior::mahalanobis_sq(const Eigen::VectorXd& v) const {
    return chol_.triangularView<Eigen::Lower>().solve(v).squaredNorm();
}

Eigen::VectorXd StructuredPrior::sample_stacked(Rng& rng) const {
    return mean_ + chol_ * rng.normal_vector(mean_.size());
}

std::vector<Trajectory> StructuredPrior::sample(int count, Rng& rng) const {
    std::vector<Trajectory> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k)
        out.push_back(unstack_trajectory(sample_stacked(rng), horizon_, state_dim_));
    return out;
}

GainCache::Entry GainCache::compute_entry(const GpPrior& prior, const KeyStateObservation& obs) {
    obs.validate(prior.horizon, prior.state_dim);
    Entry entry;
    entry.rows = obs.flat_rows(prior.state_dim);

    // S = C K C' + K_y; gain G = K C' S^{-1}.
    Eigen::MatrixXd cross = prior.cov(entry.rows, Eigen::all);  // n x Hd
    Eigen::MatrixXd s = prior.cov(entry.rows, entry.rows);
    s += obs.noise_cov;
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) {
        const Eigen::VectorXd eigs =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s, Eigen::EigenvaluesOnly)
                .eigenvalues();
        throw IllConditionedError(
            "condition: observation system matrix is not PD, min eigenvalue " +
                std::to_string(eigs.minCoeff()),
            eigs.minCoeff());
    }
    entry.gain = llt.solve(cross).transpose();

    Eigen::MatrixXd cond = prior.cov - entry.gain * cross;
    entry.cov = 0.5 * (cond + cond.transpose());
    entry.chol = cholesky_or_throw(entry.cov, "condition");
    return entry;
}

StructuredPrior GainCache::assemble(const GpPrior& prior, const KeyStateObservation& obs,
                                    const Entry& entry) {
    StructuredPrior out;
    Eigen::VectorXd residual = obs.values - prior.mean(entry.rows);
    out.mean_ = prior.mean + entry.gain * residual;
    out.cov_ = entry.cov;
    out.chol_ = entry.chol;
    out.horizon_ = prior.horizon;
    out.state_dim_ = prior.state_dim;
    return out;
}

StructuredPrior condition(const GpPrior& prior, const KeyStateObservation& obs) {
    return GainCache::assemble(prior, obs, GainCache::compute_entry(prior, obs));
}

std::string GainCache::encode_key(const KeyStateObservation& obs, int state_dim) {
    std::string key;
    key.reserve(32 * obs.indices.size());
    key += std::to_string(state_dim);
    for (const auto& [t, slice] : obs.indices) {
        key += ';';
        key += std::to_string(t);
        key += ':';
        key += std::to_string(slice.begin);
        key += ':';
        key += std::to_string(slice.len);
    }
    key += '|';
    for (int j = 0; j < obs.noise_cov.rows(); ++j) append_double_hex(key, obs.noise_cov(j, j));
    return key;
}

StructuredPrior GainCache::get_or_compute(const GpPrior& prior, const KeyStateObservation& obs) {
    const std::string key = encode_key(obs, prior.state_dim);
    {
        std::shared_lock lock(mutex_);
        auto it = entries_.find(key);
        if (it != entries_.end()) {
            ++hits_;
            return assemble(prior, obs, it->second);
        }
    }
    ++misses_;
    Entry entry = compute_entry(prior, obs);
    StructuredPrior out = assemble(prior, obs, entry);
    {
        std::unique_lock lock(mutex_);
        entries_[key] = std::move(entry);
    }
    return out;
}

std::size_t GainCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

namespace {

constexpr char kCacheMagic[8] = {'H', 'D', 'P', 'G', 'A', 'I', 'N', '1'};

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
    const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Eigen::MatrixXd read_matrix(std::ifstream& in) {
    std::uint32_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in) throw IoError("gain cache: truncated matrix header");
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw IoError("gain cache: truncated matrix body");
    return m;
}

}  // namespace

void GainCache::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("gain cache: cannot open for writing: " + path);
    out.write(kCacheMagic, sizeof(kCacheMagic));
    std::shared_lock lock(mutex_);
    const std::uint64_t count = entries_.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const auto& [key, entry] : entries_) {
        const std::uint32_t klen = static_cast<std::uint32_t>(key.size());
        out.write(reinterpret_cast<const char*>(&klen), sizeof(klen));
        out.write(key.data(), klen);
        const std::uint64_t nrows = entry.rows.size();
        out.write(reinterpret_cast<const char*>(&nrows), sizeof(nrows));
        out.write(reinterpret_cast<const char*>(entry.rows.data()),
                  static_cast<std::streamsize>(sizeof(int) * nrows));
        write_matrix(out, entry.gain);
        write_matrix(out, entry.cov);
        write_matrix(out, entry.chol);
    }
    if (!out) throw IoError("gain cache: write failed: " + path);
}

void GainCache::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("gain cache: cannot open for reading: " + path);
    char magic[sizeof(kCacheMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
        throw IoError("gain cache: bad magic/version in " + path);
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    std::unordered_map<std::string, Entry> loaded;
    for (std::uint64_t k = 0; k < count; ++k) {
        std::uint32_t klen = 0;
        in.read(reinterpret_cast<char*>(&klen), sizeof(klen));
        std::string key(klen, '\0');
        in.read(key.data(), klen);
        std::uint64_t nrows = 0;
        in.read(reinterpret_cast<char*>(&nrows), sizeof(nrows));
        if (!in) throw IoError("gain cache: truncated record in " + path);
        Entry entry;
        entry.rows.resize(nrows);
        in.read(reinterpret_cast<char*>(entry.rows.data()),
                static_cast<std::streamsize>(sizeof(int) * nrows));
        entry.gain = read_matrix(in);
        entry.cov = read_matrix(in);
        entry.chol = read_matrix(in);
        loaded.emplace(std::move(key), std::move(entry));
    }
    std::unique_lock lock(mutex_);
    for (auto& [key, entry] : loaded) entries_[key] = std::move(entry);
}

}  // namespace hdp
