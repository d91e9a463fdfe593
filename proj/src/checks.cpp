#include "unidiff/checks.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "unidiff/analytic.hpp"
#include "unidiff/diffusion.hpp"
#include "unidiff/ensembles.hpp"
#include "unidiff/linalg.hpp"
#include "unidiff/stats.hpp"

namespace unidiff::checks {

namespace {

constexpr double kPi = std::numbers::pi;

class Suite {
  public:
    explicit Suite(const Options& opts) : opts_(opts) {}

    // pass when measured < bound
    void below(const std::string& name, double measured, double bound,
               const std::string& note = "") {
        results_.push_back({name, measured, bound, measured < bound, note});
    }
    // pass when |measured - target| < tol
    void near(const std::string& name, double measured, double target, double tol,
              const std::string& note = "") {
        results_.push_back({name, measured, tol, std::abs(measured - target) < tol,
                            note.empty() ? ("target " + std::to_string(target)) : note});
    }
    // pass when measured > bound
    void above(const std::string& name, double measured, double bound,
               const std::string& note = "") {
        results_.push_back({name, measured, bound, measured > bound, note});
    }

    std::vector<CheckResult> take() { return std::move(results_); }
    const Options& opts() const { return opts_; }

  private:
    Options opts_;
    std::vector<CheckResult> results_;
};

// --- ensembles -------------------------------------------------------------

void check_ensembles(Suite& s) {
    const std::uint64_t seed = s.opts().seed;
    for (Family fam : {Family::GaussianHermitian, Family::SignBernoulli,
                       Family::UniformEntries}) {
        const EnsembleSpec spec(fam, 48, 0.7, seed);
        double herm = 0.0;
        {
            RngStream rng(seed, 1);
            const Matrix h = sample_hermitian(spec, rng);
            herm = (h - h.adjoint()).cwiseAbs().maxCoeff();
        }
        const auto est = estimate_moments_of_h(spec, 1500);
        const std::string fn = family_name(fam);
        s.below("hermiticity_" + fn, herm, 1e-15);
        s.below("m2_calibration_" + fn, std::abs(est.m2_hat - spec.m2),
                4.0 * est.m2_stderr, "within 4 stderr of m2");
        s.below("m1_nullity_" + fn, std::abs(est.m1_hat), 4.0 * est.m1_stderr,
                "within 4 stderr of 0");
    }
    // determinism: same (spec, seed, stream) twice
    {
        const EnsembleSpec spec(Family::GaussianHermitian, 32, 1.0, seed);
        RngStream r1(seed, 7), r2(seed, 7);
        const Matrix a = sample_hermitian(spec, r1);
        const Matrix b = sample_hermitian(spec, r2);
        s.below("sampling_determinism", (a - b).cwiseAbs().maxCoeff(), 1e-300,
                "bit-identical redraw");
    }
}

// --- diffusion ---------------------------------------------------------------

void check_diffusion(Suite& s) {
    const std::uint64_t seed = s.opts().seed;

    // unitarity drift and eigenphase modulus over a long run
    {
        const EnsembleSpec spec(Family::GaussianHermitian, 32, 1.0, seed + 1);
        DiffusionRun run(spec, {6.0});
        RngStream rng(spec.seed, 0);
        auto out = run.run_to_checkpoints(rng, 0);
        s.below("unitarity_drift", linalg::unitarity_drift(run.u_current()), 1e-8,
                "600 steps, N=32");
        double worst = 0.0;
        linalg::CVector lam;
        linalg::complex_eigenvalues(run.u_current(), lam);
        for (Eigen::Index j = 0; j < lam.size(); ++j)
            worst = std::max(worst, std::abs(std::abs(lam(j)) - 1.0));
        s.below("eigenphase_modulus", worst, 1e-6);
    }

    // m2t-scaling: (m2, t) vs (m2/2, 2t) indistinguishable by KS
    {
        const EnsembleSpec sa(Family::GaussianHermitian, 64, 1.0, seed + 2);
        const EnsembleSpec sb(Family::GaussianHermitian, 64, 0.5, seed + 3);
        auto batch_a = run_batch(sa, {1.5}, 16, s.opts().n_threads);
        auto batch_b = run_batch(sb, {3.0}, 16, s.opts().n_threads);
        std::vector<double> xa, xb;
        for (const auto& es : batch_a) xa.insert(xa.end(), es.thetas.begin(), es.thetas.end());
        for (const auto& es : batch_b) xb.insert(xb.end(), es.thetas.begin(), es.thetas.end());
        const auto ks = ks_two_sample(xa, xb);
        s.above("m2t_scaling_ks_p", ks.p_value, 0.01, "two-sample KS");
    }

    // continuum limit: doubling m_per_unit moves a1 by less than its stderr
    {
        const EnsembleSpec spec(Family::GaussianHermitian, 48, 1.0, seed + 4);
        auto b1 = run_batch(spec, {1.0}, 60, s.opts().n_threads, 100);
        auto b2 = run_batch(spec, {1.0}, 60, s.opts().n_threads, 200);
        const auto m1 = empirical_moments(b1, 1);
        const auto m2 = empirical_moments(b2, 1);
        const double se = std::hypot(m1.stderrs[0], m2.stderrs[0]);
        s.below("continuum_limit_a1_shift", std::abs(m1.a[0] - m2.a[0]), se,
                "vs combined stderr");
    }

    // reunitarize: fixed point and corruption rejection
    {
        RngStream rng(seed, 11);
        const EnsembleSpec spec(Family::GaussianHermitian, 24, 1.0, seed);
        const Matrix h = sample_hermitian(spec, rng);
        const Matrix u = linalg::unitary_exp_eig(h, 0.3);
        s.below("reunitarize_fixed_point", (reunitarize(u) - u).cwiseAbs().maxCoeff(),
                1e-12);
        bool threw = false;
        try {
            Matrix bad = 1.05 * u; // drift ~ 0.1
            reunitarize(bad);
        } catch (const std::exception&) {
            threw = true;
        }
        s.above("reunitarize_corruption_error", threw ? 1.0 : 0.0, 0.5,
                "throws on drift 0.1");
    }
}

// --- analytic ---------------------------------------------------------------

void check_analytic(Suite& s) {
    // functional-equation residual over a tau x theta grid
    {
        double worst = 0.0;
        for (double tau : {0.5, 1.0, 2.0, 4.0, 5.5})
            for (int i = 0; i <= 24; ++i) {
                const double th = -kPi + (2.0 * kPi) * i / 24.0 + 1e-3;
                const Complex z = std::polar(1.0, th);
                const Complex f = solve_f_on_circle(th, tau, 1.0);
                const Complex r = z * f - (1.0 + f) * std::exp(-tau * (f + 0.5));
                worst = std::max(worst, std::abs(r) / (1.0 + std::abs(f)));
            }
        s.below("residual_relative", worst, 1e-12);
    }

    // branch: f real and increasing toward the support on the real ray
    {
        double max_im = 0.0, min_step = 1.0;
        double prev = 0.0;
        bool first = true;
        for (double r = 10.0; r >= 1.0; r -= 0.25) {
            const Complex f = solve_f_at(Complex(r + 1e-12, 0.0), 1.0, 1.0);
            max_im = std::max(max_im, std::abs(f.imag()));
            if (!first) min_step = std::min(min_step, f.real() - prev);
            prev = f.real();
            first = false;
        }
        s.below("real_ray_imag", max_im, 1e-12);
        s.above("real_ray_increasing", min_step, 0.0, "f grows as r decreases to 1");
    }

    // normalization on the default grid (trapezoid)
    {
        double worst = 0.0;
        for (double tau : {0.5, 1.0, 2.0, 3.0, 3.9, 4.0, 4.3, 5.5}) {
            const auto grid = default_theta_grid(tau, 1.0, 2048);
            const auto sol = density(tau, 1.0, grid);
            worst = std::max(worst,
                             std::abs(trapezoid_periodic(grid, sol.rho_values) - 1.0));
        }
        s.below("normalization_trapezoid", worst, 1e-6, "default 2048-point grid");
    }

    // symmetry rho(theta) = rho(-theta)
    {
        double worst = 0.0;
        for (double tau : {1.0, 4.0})
            for (int i = 1; i <= 40; ++i) {
                const double th = kPi * i / 41.0;
                worst = std::max(worst, std::abs(rho_at(th, tau, 1.0) -
                                                 rho_at(-th, tau, 1.0)));
            }
        s.below("symmetry", worst, 1e-9);
    }

    // quadrature moments match the recursion
    {
        double worst = 0.0;
        for (double tau : {1.0, 2.0, 4.0, 5.5}) {
            const auto mom = analytic_moments(tau, 1.0, 10);
            for (int k = 1; k <= 10; ++k)
                worst = std::max(worst, std::abs(integrate_density(tau, 1.0, k) -
                                                 mom.a[k - 1]));
        }
        s.below("moment_quadrature", worst, 1e-6, "k <= 10");
    }

    // normalization via the adaptive quadrature as well
    {
        double worst = 0.0;
        for (double tau : {1.0, 4.0, 5.5})
            worst = std::max(worst, std::abs(integrate_density(tau, 1.0, 0) - 1.0));
        s.below("normalization_quadrature", worst, 1e-8);
    }

    // cross-oracle: functional equation vs Fourier sum
    {
        const auto grid = default_theta_grid(5.5, 1.0, 512);
        const auto sol = density(5.5, 1.0, grid);
        const auto fou = density_from_moments(5.5, 1.0, 256, grid);
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            worst = std::max(worst,
                             std::abs(sol.rho_values[i] - fou.solution.rho_values[i]));
        s.below("oracle_equivalence_supercritical", worst, 1e-5, "m2t=5.5, full grid");
    }
    {
        const auto grid = default_theta_grid(1.0, 1.0, 512);
        const auto sol = density(1.0, 1.0, grid);
        const auto fou = density_from_moments(1.0, 1.0, 4096, grid);
        double worst = 0.0;
        long masked = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (fou.truncation_estimate[i] >= 5e-6) {
                ++masked;
                continue;
            }
            worst = std::max(worst,
                             std::abs(sol.rho_values[i] - fou.solution.rho_values[i]));
        }
        s.below("oracle_equivalence_subcritical", worst, 1e-5,
                "m2t=1, tail-bounded points");
        s.below("oracle_mask_fraction", static_cast<double>(masked) / grid.size(), 0.05,
                "points excluded by the Fourier tail bound");
    }

    // support: vanishing outside the edge, positive inside
    {
        const double te = *edge_points(2.0, 1.0).theta_edge;
        double worst_gap = 0.0, min_inside = 1.0;
        for (int i = 1; i <= 25; ++i) {
            const double out = te + 1e-3 + (kPi - te - 1e-3) * i / 26.0;
            const double in = te * i / 26.0;
            worst_gap = std::max(worst_gap, rho_at(out, 2.0, 1.0));
            min_inside = std::min(min_inside, rho_at(in, 2.0, 1.0));
        }
        s.below("support_gap_rho", worst_gap, 1e-8, "m2t=2, |theta|>edge+1e-3");
        s.above("support_inside_rho", min_inside, 0.0, "m2t=2, inside the arc");
    }

    // subcritical edge exponent 1/2
    {
        const double te = *edge_points(2.0, 1.0).theta_edge;
        std::vector<double> lx, ly;
        for (int q = 0; q < 20; ++q) {
            const double d = 1e-4 * std::pow(100.0, q / 19.0); // [1e-4, 1e-2]
            lx.push_back(std::log(d));
            ly.push_back(std::log(rho_at(te - d, 2.0, 1.0)));
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i]; sy += ly[i]; sxx += lx[i] * lx[i]; sxy += lx[i] * ly[i];
        }
        const double m = static_cast<double>(lx.size());
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        s.near("edge_exponent_subcritical", slope, 0.5, 0.02);
    }

    // critical exponent 1/3 and amplitude at m2t = 4
    {
        std::vector<double> lx, ly;
        for (int q = 0; q < 25; ++q) {
            const double d = 1e-4 * std::pow(100.0, q / 24.0);
            lx.push_back(std::log(d));
            ly.push_back(std::log(rho_at(kPi - d, 4.0, 1.0)));
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i]; sy += ly[i]; sxx += lx[i] * lx[i]; sxy += lx[i] * ly[i];
        }
        const double m = static_cast<double>(lx.size());
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        const double inter = std::exp((sy - slope * sx) / m);
        s.near("critical_exponent", slope, 1.0 / 3.0, 0.01);
        s.below("critical_amplitude_reldev",
                std::abs(inter - critical_density_coefficient()) /
                    critical_density_coefficient(),
                0.02, "vs (1/pi)(3/16)^(1/3)cos(pi/6)");
    }

    // edge formula and critical time spot values
    {
        s.below("edge_formula_m2t2", std::abs(*edge_points(2.0, 1.0).theta_edge -
                                              (kPi / 2.0 + 1.0)), 1e-12);
        s.above("edge_full_circle_at_tc", edge_points(4.0, 1.0).full_circle() ? 1.0 : 0.0,
                0.5);
        s.below("critical_time_formula", std::abs(critical_time(1.0 / 500.0) - 2000.0),
                1e-9);
    }

    // uniform limit at large m2t
    {
        double worst = 0.0;
        for (int i = 0; i <= 64; ++i) {
            const double th = -kPi + 1e-6 + (2 * kPi - 2e-6) * i / 64.0;
            worst = std::max(worst, std::abs(rho_at(th, 100.0, 1.0) - 1.0 / (2 * kPi)));
        }
        s.below("uniform_limit", worst, 1e-6, "m2t=100");
    }

    // moments at t=0 and closed-form regression a1..a5
    {
        const auto mom0 = analytic_moments(0.0, 1.0, 8);
        double worst0 = 0.0;
        for (double a : mom0.a) worst0 = std::max(worst0, std::abs(a - 1.0));
        s.below("moments_at_t0", worst0, 1e-14, "a_k(0) = 1");

        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const double tau = 5.5 * i / 19.0;
            const auto mom = analytic_moments(tau, 1.0, 5);
            const auto ref = closed_form_moments(tau);
            for (int k = 0; k < 5; ++k) {
                const double denom = std::max(1e-3, std::abs(ref[k]));
                worst = std::max(worst, std::abs(mom.a[k] - ref[k]) / denom);
            }
        }
        s.below("closed_form_moments_rel", worst, 1e-10, "a1..a5 vs recursion");
    }

    // interior branch through the gap: f(0) = -1 and the power series
    {
        const Complex f0 = solve_f_at(Complex(0.0, 0.0), 2.0, 1.0);
        s.below("interior_f_at_origin", std::abs(f0 - Complex(-1.0, 0.0)), 1e-10);
        const Complex fw = solve_f_at(Complex(0.3, 0.0), 2.0, 1.0);
        const auto mom = analytic_moments(2.0, 1.0, 60);
        Complex series(-1.0, 0.0);
        double wk = 1.0;
        for (int k = 1; k <= 60; ++k) {
            wk *= 0.3;
            series -= mom.a[k - 1] * wk;
        }
        s.below("interior_series_match", std::abs(fw - series), 1e-8,
                "f(0.3) vs -1-sum a_k w^k");
    }

    // S-transform identity residuals
    {
        double worst = 0.0;
        for (double tau : {0.5, 1.0, 2.0})
            for (double z : s_check_points(tau, 1.0, 17))
                worst = std::max(worst, s_transform_check(Complex(z, 0.0), tau, 1.0));
        s.below("s_transform_residual", worst, 1e-10, "50 z-points across m2t");
    }

    // near-critical profile: power-law ratio and window accuracy
    {
        const double ratio = near_critical_profile(kPi - 0.2) /
                             near_critical_profile(kPi - 0.025);
        s.below("profile_power_ratio", std::abs(ratio - 2.0), 1e-12,
                "(0.2/0.025)^{1/3} = 2");
        double worst = 0.0;
        for (double d : {0.05, 0.1, 0.2, 0.3}) {
            const double r = rho_at(kPi - d, 4.0, 1.0);
            worst = std::max(worst, std::abs(r - near_critical_profile(kPi - d)) / r);
        }
        s.below("profile_window_reldev", worst, 0.05, "|theta-pi| <= 0.3");
    }
}

// --- stats -------------------------------------------------------------------

void check_stats(Suite& s) {
    const std::uint64_t seed = s.opts().seed;

    // histogram normalization on a Monte Carlo batch
    {
        const EnsembleSpec spec(Family::GaussianHermitian, 48, 1.0, seed + 5);
        auto batch = run_batch(spec, {1.0}, 40, s.opts().n_threads);
        const auto h = histogram(batch, 32);
        double sum = 0.0;
        for (std::size_t b = 0; b + 1 < h.bin_edges.size(); ++b)
            sum += h.normalized[b] * (h.bin_edges[b + 1] - h.bin_edges[b]);
        s.below("histogram_normalization", std::abs(sum - 1.0), 1e-12);

        // moment magnitude and imaginary-part consistency
        const auto mom = empirical_moments(batch, 6);
        double max_a = 0.0, worst_imag = 0.0;
        for (int k = 0; k < 6; ++k) {
            max_a = std::max(max_a, std::abs(mom.a[k]));
            const auto [mi, si] = jackknife_mean([&] {
                std::vector<double> v;
                for (const auto& es : batch) {
                    std::complex<double> tr(0, 0);
                    for (double th : es.thetas) tr += std::polar(1.0, (k + 1) * th);
                    v.push_back(tr.imag() / es.thetas.size());
                }
                return v;
            }());
            worst_imag = std::max(worst_imag, std::abs(mi) / std::max(si, 1e-12));
        }
        s.below("empirical_moment_magnitude", max_a, 1.0 + 1e-12, "|a_k| <= 1");
        s.below("empirical_moment_imag_sigma", worst_imag, 4.0, "imag parts vs 0");
    }

    // jackknife errors shrink like 1/sqrt(n): 4x samples -> ~2x smaller
    {
        const EnsembleSpec spec(Family::GaussianHermitian, 32, 1.0, seed + 6);
        auto batch = run_batch(spec, {1.0}, 160, s.opts().n_threads);
        std::vector<EigenphaseSample> quarter(batch.begin(), batch.begin() + 40);
        const auto m_full = empirical_moments(batch, 1);
        const auto m_quarter = empirical_moments(quarter, 1);
        const double ratio = m_quarter.stderrs[0] / m_full.stderrs[0];
        s.near("jackknife_shrink_ratio", ratio, 2.0, 0.6, "target 2.0 +- 0.6");
    }

    // control case: spacing fit on synthetic uniform phases gives slope 1
    {
        RngStream rng(seed, 77);
        std::vector<EigenphaseSample> batch(200);
        for (auto& es : batch) {
            es.t = 1.0;
            es.thetas.resize(128);
            for (auto& th : es.thetas) th = rng.uniform(-kPi, std::nextafter(kPi, 4.0));
            std::sort(es.thetas.begin(), es.thetas.end());
        }
        const auto fit = critical_spacing_fit(batch, {0.02, 0.3}, 24, 500);
        s.near("control_spacing_slope", fit.slope, 1.0, 0.05, "uniform phases");
    }

    // empirical edge at small m2t: theta_max ~ 2 sqrt(m2 t)
    {
        const EnsembleSpec spec(Family::GaussianHermitian, 48, 1.0, seed + 7);
        auto batch = run_batch(spec, {0.01}, 30, s.opts().n_threads);
        const auto e = estimate_edge(batch);
        s.near("edge_small_t", e.theta_max, 0.2, 0.05, "2 sqrt(m2 t) = 0.2");
    }
}

} // namespace

std::vector<CheckResult> run_all(const Options& opts) {
    Suite s(opts);
    check_ensembles(s);
    check_diffusion(s);
    check_analytic(s);
    check_stats(s);
    return s.take();
}

bool all_passed(const std::vector<CheckResult>& results) {
    return std::all_of(results.begin(), results.end(),
                       [](const CheckResult& r) { return r.pass; });
}

void print_table(const std::vector<CheckResult>& results, std::FILE* out) {
    std::fprintf(out, "%-36s %14s %14s  %s\n", "check", "measured", "bound", "result");
    for (const auto& r : results)
        std::fprintf(out, "%-36s %14.6g %14.6g  %s%s%s\n", r.name.c_str(), r.measured,
                     r.bound, r.pass ? "pass" : "FAIL",
                     r.note.empty() ? "" : "   # ", r.note.c_str());
    int failed = 0;
    for (const auto& r : results) failed += r.pass ? 0 : 1;
    std::fprintf(out, "%zu checks, %d failed\n", results.size(), failed);
}

} // namespace unidiff::checks
