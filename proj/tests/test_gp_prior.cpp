#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hdp/errors.hpp"
#include "hdp/gp_prior.hpp"
#include "hdp/structured_prior.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

using namespace hdp;

namespace {

LtvModel scalar_model(double dt, double q_c) {
    LtvModel m;
    m.dt = dt;
    m.d_pos = 1;
    m.q_c = q_c;
    return m;
}

// Independent marginal-covariance recursion written with scalar loops only:
// P_{t+1} = Phi P_t Phi' + Q expanded blockwise for the constant-velocity
// model. Checks the implementation's block assembly without sharing any
// matrix code with it.
std::vector<Eigen::MatrixXd> recursion_oracle(const LtvModel& model, int horizon) {
    const int p = model.d_pos;
    const int d = 2 * p;
    const double dt = model.dt;
    Eigen::MatrixXd prev = model.k0.size() ? model.k0 : Eigen::MatrixXd::Zero(d, d);
    std::vector<Eigen::MatrixXd> out{prev};
    for (int t = 1; t < horizon; ++t) {
        Eigen::MatrixXd next(d, d);
        for (int a = 0; a < p; ++a) {
            for (int b = 0; b < p; ++b) {
                const double pp = prev(a, b), pv = prev(a, p + b);
                const double vp = prev(p + a, b), vv = prev(p + a, p + b);
                next(a, b) = pp + dt * (pv + vp) + dt * dt * vv;
                next(a, p + b) = pv + dt * vv;
                next(p + a, b) = vp + dt * vv;
                next(p + a, p + b) = vv;
            }
            next(a, a) += model.q_c * dt * dt * dt / 3.0;
            next(a, p + a) += model.q_c * dt * dt / 2.0;
            next(p + a, a) += model.q_c * dt * dt / 2.0;
            next(p + a, p + a) += model.q_c * dt;
        }
        out.push_back(next);
        prev = next;
    }
    return out;
}

}  // namespace

TEST_CASE("transition matrix block structure") {
    CHECK(transition_matrix(scalar_model(0.1, 1.0))
              .isApprox(Eigen::Matrix2d{{1.0, 0.1}, {0.0, 1.0}}, 1e-15));

    LtvModel planar;
    planar.dt = 0.0;
    CHECK(transition_matrix(planar).isIdentity(1e-15));

    planar.dt = 1.0;
    Eigen::MatrixXd phi = transition_matrix(planar);
    CHECK(phi.topLeftCorner(2, 2).isIdentity(1e-15));
    CHECK(phi.topRightCorner(2, 2).isIdentity(1e-15));
    CHECK(phi.bottomLeftCorner(2, 2).isZero(1e-15));
    CHECK(phi.bottomRightCorner(2, 2).isIdentity(1e-15));
}

TEST_CASE("process noise block structure") {
    Eigen::MatrixXd q = process_noise(scalar_model(1.0, 1.0));
    CHECK(q(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(q(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(q(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(q(1, 1) == doctest::Approx(1.0).epsilon(1e-14));

    CHECK(process_noise(scalar_model(0.3, 0.0)).isZero(0.0));

    q = process_noise(scalar_model(0.5, 2.0));
    CHECK(q(0, 0) == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
    CHECK(q(0, 1) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(q(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
    CHECK(es.eigenvalues().minCoeff() >= -1e-15);
}

TEST_CASE("joint prior with deterministic start") {
    LtvModel m = scalar_model(1.0, 1.0);
    GpPrior prior = build_gp_prior(m, 2);
    CHECK(prior.mean.isZero(0.0));
    CHECK(prior.cov.topLeftCorner(2, 2).isZero(0.0));
    CHECK(prior.cov.topRightCorner(2, 2).isZero(0.0));
    CHECK(prior.cov.bottomRightCorner(2, 2).isApprox(process_noise(m), 1e-14));
}

TEST_CASE("one recursion step with unit initial covariance") {
    LtvModel m = scalar_model(0.7, 1.3);
    m.k0 = Eigen::MatrixXd::Identity(2, 2);
    GpPrior prior = build_gp_prior(m, 3);
    Eigen::MatrixXd phi = transition_matrix(m);
    Eigen::MatrixXd expected = phi * phi.transpose() + process_noise(m);
    CHECK(prior.cov.block(2, 2, 2, 2).isApprox(expected, 1e-14));
}

TEST_CASE("mean propagates the initial state") {
    LtvModel m;
    m.dt = 0.5;
    m.mu0 = Eigen::VectorXd(4);
    m.mu0 << 1.0, -2.0, 0.4, 0.2;
    GpPrior prior = build_gp_prior(m, 4);
    // Constant velocity: position drifts by dt * v each step.
    CHECK(prior.mean.segment(4, 4).isApprox(Eigen::Vector4d(1.2, -1.9, 0.4, 0.2), 1e-14));
    CHECK(prior.mean.segment(12, 4).isApprox(Eigen::Vector4d(1.6, -1.7, 0.4, 0.2), 1e-14));
}

TEST_CASE("covariance symmetry and factorability") {
    LtvModel m;
    m.dt = 0.13;
    m.q_c = 0.7;
    m.k0 = 0.5 * Eigen::MatrixXd::Identity(4, 4);
    m.mu0 = Eigen::VectorXd::Constant(4, 0.2);
    GpPrior prior = build_gp_prior(m, 12);
    CHECK((prior.cov - prior.cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::MatrixXd jittered = prior.cov;
    jittered.diagonal().array() += jitter_for(prior.cov);
    Eigen::LLT<Eigen::MatrixXd> llt(jittered);
    CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("marginal covariance matches the scalar recursion oracle") {
    LtvModel m;
    m.dt = 0.21;
    m.q_c = 2.4;
    m.k0 = Eigen::MatrixXd::Identity(4, 4) * 0.3;
    const int horizon = 9;
    GpPrior prior = build_gp_prior(m, horizon);
    auto oracle = recursion_oracle(m, horizon);
    for (int t = 0; t < horizon; ++t) {
        Eigen::MatrixXd block = prior.cov.block(4 * t, 4 * t, 4, 4);
        CHECK((block - oracle[t]).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("sampled velocity increments shrink with the noise density") {
    std::vector<double> qcs{1e-4, 1e-2, 1.0};
    std::vector<double> mean_increment;
    for (double qc : qcs) {
        LtvModel m;
        m.dt = 0.1;
        m.q_c = qc;
        m.k0 = Eigen::MatrixXd::Identity(4, 4);
        GpPrior gp = build_gp_prior(m, 16);
        StructuredPrior prior(gp.mean, gp.cov, gp.horizon, gp.state_dim);
        Rng rng(99);
        double acc = 0.0;
        const int n_samples = 64;
        for (int k = 0; k < n_samples; ++k) {
            Trajectory traj = unstack_trajectory(prior.sample_stacked(rng), 16, 4);
            double worst = 0.0;
            for (int t = 0; t + 1 < 16; ++t)
                worst = std::max(worst,
                                 (traj.row(t + 1).tail(2) - traj.row(t).tail(2))
                                     .cwiseAbs()
                                     .maxCoeff());
            acc += worst;
        }
        mean_increment.push_back(acc / n_samples);
    }
    CHECK(mean_increment[0] < mean_increment[1]);
    CHECK(mean_increment[1] < mean_increment[2]);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(build_gp_prior(scalar_model(0.1, 1.0), 1), ConfigError);
    CHECK_THROWS_AS(build_gp_prior(scalar_model(-0.1, 1.0), 4), ConfigError);
    CHECK_THROWS_AS(build_gp_prior(scalar_model(0.1, -1.0), 4), ConfigError);

    // Dense storage budget: horizon * state_dim above the cap is rejected.
    LtvModel m = scalar_model(0.1, 1.0);
    CHECK_THROWS_AS(build_gp_prior(m, 2049), ConfigError);
    CHECK_NOTHROW(build_gp_prior(m, 2048));

    LtvModel bad = scalar_model(0.1, 1.0);
    bad.k0 = Eigen::MatrixXd::Zero(2, 2);
    bad.k0(0, 1) = 1.0;  // asymmetric
    CHECK_THROWS_AS(build_gp_prior(bad, 4), ConfigError);
}
