#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "unidiff/analytic.hpp" // MomentTable
#include "unidiff/diffusion.hpp"

namespace unidiff {

struct DensityHistogram {
    std::vector<double> bin_edges;  // n_bins + 1 ascending edges covering (-pi, pi]
    std::vector<long> counts;
    std::vector<double> normalized; // counts / (total * binwidth)
    std::vector<double> stderrs;    // jackknife over samples, per bin
    long n_eigenvalues_total = 0;
    int n_samples = 0;
    double t = 0.0;
};

struct SpacingFit {
    double t = 0.0;
    int n = 0; // matrix size
    double window_lo = 0.0, window_hi = 0.0;
    double slope = 0.0;
    double slope_stderr = 0.0;
    double intercept = 0.0; // of log C(s) vs log s
    long pooled_count = 0;  // eigenvalues inside the window
    double mean_gap_pi = 0.0;
    int n_fit_points = 0;
};

// Periodic binning of eigenphases on (-pi, pi]. All samples must share the
// same t; failed samples are skipped.
DensityHistogram histogram(const std::vector<EigenphaseSample>& samples, int n_bins);

// Empirical moments a_k = mean over samples of (1/N) sum_j e^{ik theta_j},
// with leave-one-sample-out jackknife standard errors. Real parts in .a,
// imaginary parts kept as a diagnostic.
MomentTable empirical_moments(const std::vector<EigenphaseSample>& samples, int k_max);

struct EdgeEstimate {
    double theta_max = 0.0;
    double quantile_99 = 0.0;
    long n_pooled = 0;
};
EdgeEstimate estimate_edge(const std::vector<EigenphaseSample>& samples);

// Least-squares fit of log(cumulative count within s of pi) against log s on
// a geometric grid of n_fit_points in [window.first, window.second]. Also
// measures the mean circular gap straddling theta = pi. min_count guards
// against fitting noise.
SpacingFit critical_spacing_fit(const std::vector<EigenphaseSample>& samples,
                                std::pair<double, double> window,
                                int n_fit_points = 24, long min_count = 1000);

// log(gap_small_n / gap_large_n) / log(n_large / n_small); ~3/4 at t_c.
double gap_ratio_exponent(const SpacingFit& small_n, const SpacingFit& large_n);

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Mean and leave-one-out jackknife standard error.
std::pair<double, double> jackknife_mean(const std::vector<double>& values);

// L1 distance between a histogram and a reference density, integrating the
// reference across each bin (16-point Gauss-Legendre per bin).
double l1_distance_to_density(const DensityHistogram& hist,
                              const std::function<double(double)>& rho);

// L1 distance between two histograms over identical binnings.
double l1_distance(const DensityHistogram& a, const DensityHistogram& b);

} // namespace unidiff
