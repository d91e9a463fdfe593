#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "unidiff/diffusion.hpp"
#include "unidiff/linalg.hpp"

using namespace unidiff;
namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("exp of the zero generator is the identity") {
    const EnsembleSpec spec(Family::GaussianHermitian, 8, 1.0, 1);
    DiffusionRun run(spec, {1.0});
    const Matrix h = Matrix::Zero(8, 8);
    run.step(h);
    CHECK((run.u_current() - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(run.t_elapsed() == doctest::Approx(run.eps() * run.eps()));
}

TEST_CASE("scalar exponential: phase pi lands on -1") {
    Matrix h(1, 1);
    h(0, 0) = kPi;
    const Matrix u = linalg::unitary_exp_eig(h, 1.0);
    CHECK(std::abs(u(0, 0) - std::complex<double>(-1.0, 0.0)) < 1e-14);
}

TEST_CASE("taylor and eigendecomposition exponentials agree") {
    const EnsembleSpec spec(Family::GaussianHermitian, 48, 1.0, 5);
    RngStream rng(spec.seed, 0);
    const Matrix h = sample_hermitian(spec, rng);
    const Matrix a = linalg::unitary_exp_eig(h, 0.1);
    const Matrix b = linalg::unitary_exp_taylor(h, 0.1);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(linalg::unitarity_drift(b) < 1e-13);
}

TEST_CASE("fast and exact trajectories coincide") {
    const EnsembleSpec spec(Family::UniformEntries, 24, 1.5, 31);
    DiffusionRun fast(spec, {0.4}, 100, false);
    DiffusionRun exact(spec, {0.4}, 100, true);
    RngStream r1(spec.seed, 0), r2(spec.seed, 0);
    const auto sf = fast.run_to_checkpoints(r1, 0);
    const auto se = exact.run_to_checkpoints(r2, 0);
    REQUIRE(sf.size() == 1);
    REQUIRE(se.size() == 1);
    for (std::size_t j = 0; j < sf[0].thetas.size(); ++j)
        CHECK(sf[0].thetas[j] == doctest::Approx(se[0].thetas[j]).epsilon(1e-10));
}

TEST_CASE("unitarity holds along a long run") {
    const EnsembleSpec spec(Family::GaussianHermitian, 16, 1.0, 7);
    DiffusionRun run(spec, {3.0});
    RngStream rng(spec.seed, 0);
    run.run_to_checkpoints(rng, 0);
    CHECK(linalg::unitarity_drift(run.u_current()) < 1e-8);
}

TEST_CASE("t = 0 checkpoint returns the identity spectrum") {
    const EnsembleSpec spec(Family::GaussianHermitian, 12, 1.0, 3);
    DiffusionRun run(spec, {0.0, 0.5});
    RngStream rng(spec.seed, 0);
    const auto samples = run.run_to_checkpoints(rng, 0);
    REQUIRE(samples.size() == 2);
    for (double th : samples[0].thetas) CHECK(th == 0.0);
    CHECK(samples[1].t == 0.5);
    // phases sorted and inside (-pi, pi]
    for (std::size_t j = 1; j < samples[1].thetas.size(); ++j)
        CHECK(samples[1].thetas[j] >= samples[1].thetas[j - 1]);
    CHECK(samples[1].thetas.front() > -kPi);
    CHECK(samples[1].thetas.back() <= kPi);
}

TEST_CASE("first moment matches the analytic law at small scale") {
    // a_1(t) = exp(-m2 t / 2); N=64, 80 samples at m2 t = 0.5 gives a
    // standard error well below the 0.01 assertion window.
    const EnsembleSpec spec(Family::GaussianHermitian, 64, 1.0, 2026);
    auto batch = run_batch(spec, {0.5}, 80, 2);
    double mean = 0.0;
    for (const auto& s : batch) {
        std::complex<double> tr(0, 0);
        for (double th : s.thetas) tr += std::polar(1.0, th);
        mean += tr.real() / s.thetas.size();
    }
    mean /= batch.size();
    CHECK(std::abs(mean - std::exp(-0.25)) < 0.01);

    // universality: the sign ensemble gives the same statistic
    const EnsembleSpec spec2(Family::SignBernoulli, 64, 1.0, 2027);
    auto batch2 = run_batch(spec2, {0.5}, 80, 2);
    double mean2 = 0.0;
    for (const auto& s : batch2) {
        std::complex<double> tr(0, 0);
        for (double th : s.thetas) tr += std::polar(1.0, th);
        mean2 += tr.real() / s.thetas.size();
    }
    mean2 /= batch2.size();
    CHECK(std::abs(mean2 - std::exp(-0.25)) < 0.01);
}

TEST_CASE("reunitarize") {
    const EnsembleSpec spec(Family::GaussianHermitian, 20, 1.0, 17);
    RngStream rng(spec.seed, 0);
    const Matrix u = linalg::unitary_exp_eig(sample_hermitian(spec, rng), 0.7);

    SUBCASE("exact unitary input is a fixed point") {
        CHECK((reunitarize(u) - u).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("scalar perturbation is projected back onto the same direction") {
        const Matrix out = reunitarize(u * (1.0 + 1e-6));
        CHECK(linalg::unitarity_drift(out) < 1e-12);
        CHECK((out - u).cwiseAbs().maxCoeff() < 1e-5);
    }
    SUBCASE("far-from-unitary input is rejected") {
        CHECK_THROWS_AS(reunitarize(u * 1.05), std::runtime_error);
    }
}

TEST_CASE("eigenphase moduli stay pinned to the unit circle") {
    const EnsembleSpec spec(Family::GaussianHermitian, 32, 1.0, 23);
    DiffusionRun run(spec, {2.0});
    RngStream rng(spec.seed, 0);
    run.run_to_checkpoints(rng, 0);
    linalg::CVector lam;
    REQUIRE(linalg::complex_eigenvalues(run.u_current(), lam));
    for (Eigen::Index j = 0; j < lam.size(); ++j)
        CHECK(std::abs(std::abs(lam(j)) - 1.0) < 1e-6);
}

TEST_CASE("step rejects mismatched generator sizes") {
    const EnsembleSpec spec(Family::GaussianHermitian, 8, 1.0, 1);
    DiffusionRun run(spec, {1.0});
    CHECK_THROWS_AS(run.step(Matrix::Zero(9, 9)), std::invalid_argument);
}

TEST_CASE("checkpoint bookkeeping") {
    const EnsembleSpec spec(Family::GaussianHermitian, 4, 1.0, 1);
    DiffusionRun run(spec, {0.5, 1.0});
    // M = max(100, ceil(100 * 1 * 1)) = 100, eps^2 = 1/100
    CHECK(run.total_steps() == 100);
    CHECK(run.eps() == doctest::Approx(0.1));
    CHECK_THROWS_AS(DiffusionRun(spec, {1.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(DiffusionRun(spec, {-1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DiffusionRun(spec, {}), std::invalid_argument);
}
