#include "unidiff/stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace unidiff {

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<const EigenphaseSample*> usable(const std::vector<EigenphaseSample>& samples) {
    std::vector<const EigenphaseSample*> out;
    for (const auto& s : samples)
        if (!s.failed && !s.thetas.empty()) out.push_back(&s);
    if (out.empty()) throw std::invalid_argument("no usable eigenphase samples");
    const double t0 = out.front()->t;
    for (const auto* s : out)
        if (std::abs(s->t - t0) > 1e-12)
            throw std::invalid_argument("mixed observation times in one batch");
    return out;
}
} // namespace

DensityHistogram histogram(const std::vector<EigenphaseSample>& samples, int n_bins) {
    if (n_bins < 16) throw std::invalid_argument("histogram: n_bins must be >= 16");
    const auto use = usable(samples);

    DensityHistogram h;
    h.t = use.front()->t;
    h.n_samples = static_cast<int>(use.size());
    const double width = 2.0 * kPi / n_bins;
    h.bin_edges.resize(n_bins + 1);
    for (int b = 0; b <= n_bins; ++b) h.bin_edges[b] = -kPi + b * width;
    h.counts.assign(n_bins, 0);

    // per-sample normalized histograms for the jackknife
    std::vector<std::vector<double>> per_sample(use.size(), std::vector<double>(n_bins, 0.0));
    for (std::size_t i = 0; i < use.size(); ++i) {
        const auto& th = use[i]->thetas;
        for (double x : th) {
            int b = static_cast<int>(std::floor((x + kPi) / width));
            b = std::clamp(b, 0, n_bins - 1);
            ++h.counts[b];
            per_sample[i][b] += 1.0;
        }
        const double norm = 1.0 / (static_cast<double>(th.size()) * width);
        for (double& v : per_sample[i]) v *= norm;
        h.n_eigenvalues_total += static_cast<long>(th.size());
    }

    h.normalized.resize(n_bins);
    h.stderrs.resize(n_bins);
    const double total_norm = 1.0 / (static_cast<double>(h.n_eigenvalues_total) * width);
    for (int b = 0; b < n_bins; ++b) h.normalized[b] = h.counts[b] * total_norm;
    for (int b = 0; b < n_bins; ++b) {
        std::vector<double> vals(use.size());
        for (std::size_t i = 0; i < use.size(); ++i) vals[i] = per_sample[i][b];
        h.stderrs[b] = use.size() >= 2 ? jackknife_mean(vals).second : 0.0;
    }
    return h;
}

MomentTable empirical_moments(const std::vector<EigenphaseSample>& samples, int k_max) {
    if (k_max < 1) throw std::invalid_argument("empirical_moments: k_max must be >= 1");
    const auto use = usable(samples);
    if (use.size() < 2) throw std::invalid_argument("empirical_moments: need >= 2 samples");

    MomentTable table;
    table.t = use.front()->t;
    table.k_max = k_max;
    table.source = MomentTable::Source::MonteCarlo;
    table.a.resize(k_max);
    table.stderrs.resize(k_max);
    table.imag_parts.resize(k_max);

    // per-sample (1/N) sum_j e^{ik theta_j}
    std::vector<std::vector<std::complex<double>>> tr(use.size(),
                                                      std::vector<std::complex<double>>(k_max));
    for (std::size_t i = 0; i < use.size(); ++i) {
        const auto& th = use[i]->thetas;
        for (double x : th) {
            const std::complex<double> e1 = std::polar(1.0, x);
            std::complex<double> ek(1.0, 0.0);
            for (int k = 0; k < k_max; ++k) {
                ek *= e1;
                tr[i][k] += ek;
            }
        }
        for (auto& v : tr[i]) v /= static_cast<double>(th.size());
    }

    for (int k = 0; k < k_max; ++k) {
        std::vector<double> re(use.size()), im(use.size());
        for (std::size_t i = 0; i < use.size(); ++i) {
            re[i] = tr[i][k].real();
            im[i] = tr[i][k].imag();
        }
        const auto [mr, sr] = jackknife_mean(re);
        const auto [mi, si] = jackknife_mean(im);
        (void)si;
        table.a[k] = mr;
        table.stderrs[k] = sr;
        table.imag_parts[k] = mi;
    }
    return table;
}

EdgeEstimate estimate_edge(const std::vector<EigenphaseSample>& samples) {
    const auto use = usable(samples);
    std::vector<double> abs_pooled;
    for (const auto* s : use)
        for (double x : s->thetas) abs_pooled.push_back(std::abs(x));
    std::sort(abs_pooled.begin(), abs_pooled.end());
    EdgeEstimate e;
    e.n_pooled = static_cast<long>(abs_pooled.size());
    e.theta_max = abs_pooled.back();
    const std::size_t rank =
        std::min(abs_pooled.size() - 1,
                 static_cast<std::size_t>(std::ceil(0.99 * abs_pooled.size())) - 1);
    e.quantile_99 = abs_pooled[rank];
    return e;
}

SpacingFit critical_spacing_fit(const std::vector<EigenphaseSample>& samples,
                                std::pair<double, double> window, int n_fit_points,
                                long min_count) {
    const auto [lo, hi] = window;
    if (!(lo > 0.0) || !(hi > lo) || hi > 0.5)
        throw std::invalid_argument("critical_spacing_fit: window must satisfy 0 < lo < hi <= 0.5");
    if (n_fit_points < 20)
        throw std::invalid_argument("critical_spacing_fit: need >= 20 fit points");
    const auto use = usable(samples);

    // distances from pi (both tails of the circle meet at theta = pi == -pi)
    std::vector<double> dist;
    for (const auto* s : use)
        for (double x : s->thetas) {
            const double d = kPi - std::abs(x);
            if (d < hi) dist.push_back(d);
        }
    std::sort(dist.begin(), dist.end());

    SpacingFit fit;
    fit.t = use.front()->t;
    fit.n = static_cast<int>(use.front()->thetas.size());
    fit.window_lo = lo;
    fit.window_hi = hi;
    fit.n_fit_points = n_fit_points;
    fit.pooled_count = static_cast<long>(dist.end() -
                                         std::lower_bound(dist.begin(), dist.end(), lo));
    if (static_cast<long>(dist.size()) < min_count)
        throw std::runtime_error(
            "critical_spacing_fit: only " + std::to_string(dist.size()) +
            " eigenvalues below the window top; need >= " + std::to_string(min_count) +
            " (widen the window or add samples)");

    // cumulative counts at a geometric ladder of s values
    std::vector<double> lx, ly;
    for (int q = 0; q < n_fit_points; ++q) {
        const double s = lo * std::pow(hi / lo, q / double(n_fit_points - 1));
        const auto c = std::upper_bound(dist.begin(), dist.end(), s) - dist.begin();
        if (c > 0) {
            lx.push_back(std::log(s));
            ly.push_back(std::log(static_cast<double>(c) / use.size()));
        }
    }
    if (static_cast<int>(lx.size()) < 20)
        throw std::runtime_error("critical_spacing_fit: empty cumulative counts in window");

    const double m = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double denom = m * sxx - sx * sx;
    fit.slope = (m * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / m;
    double ssr = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ssr += r * r;
    }
    fit.slope_stderr = std::sqrt(ssr / (m - 2.0) * m / denom);

    // circular gap straddling pi: from the largest phase to the smallest,
    // wrapped around the seam
    std::vector<double> gaps;
    for (const auto* s : use)
        gaps.push_back(2.0 * kPi - (s->thetas.back() - s->thetas.front()));
    fit.mean_gap_pi = jackknife_mean(gaps).first;
    return fit;
}

double gap_ratio_exponent(const SpacingFit& small_n, const SpacingFit& large_n) {
    if (small_n.n >= large_n.n)
        throw std::invalid_argument("gap_ratio_exponent: fits must be ordered by matrix size");
    return std::log(small_n.mean_gap_pi / large_n.mean_gap_pi) /
           std::log(static_cast<double>(large_n.n) / small_n.n);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty input");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                                 static_cast<double>(j) / b.size()));
    }
    const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    // Kolmogorov tail: Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2)
    double p = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        p += 2.0 * sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    KsResult r;
    r.statistic = d;
    r.p_value = std::clamp(p, 0.0, 1.0);
    return r;
}

std::pair<double, double> jackknife_mean(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n == 0) throw std::invalid_argument("jackknife_mean: empty input");
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    if (n == 1) return {mean, 0.0};
    // leave-one-out means: theta_i = (sum - x_i)/(n-1)
    double ss = 0.0;
    for (double v : values) {
        const double loo = (sum - v) / (n - 1);
        ss += (loo - mean) * (loo - mean);
    }
    const double se = std::sqrt((n - 1.0) / n * ss);
    return {mean, se};
}

double l1_distance_to_density(const DensityHistogram& hist,
                              const std::function<double(double)>& rho) {
    // 16-point Gauss-Legendre inside each bin; |difference| is piecewise
    // smooth enough at this tolerance scale.
    static const std::array<double, 8> gx = {0.0950125098376374, 0.2816035507792589,
                                             0.4580167776572274, 0.6178762444026438,
                                             0.7554044083550030, 0.8656312023878318,
                                             0.9445750230732326, 0.9894009349916499};
    static const std::array<double, 8> gw = {0.1894506104550685, 0.1826034150449236,
                                             0.1691565193950025, 0.1495959888165767,
                                             0.1246289712555339, 0.0951585116824928,
                                             0.0622535239386479, 0.0271524594117541};
    double l1 = 0.0;
    for (std::size_t b = 0; b + 1 < hist.bin_edges.size(); ++b) {
        const double a = hist.bin_edges[b], c = hist.bin_edges[b + 1];
        const double mid = 0.5 * (a + c), half = 0.5 * (c - a);
        double s = 0.0;
        for (int q = 0; q < 8; ++q) {
            s += gw[q] * std::abs(hist.normalized[b] - rho(mid + half * gx[q]));
            s += gw[q] * std::abs(hist.normalized[b] - rho(mid - half * gx[q]));
        }
        l1 += s * half;
    }
    return l1;
}

double l1_distance(const DensityHistogram& a, const DensityHistogram& b) {
    if (a.bin_edges.size() != b.bin_edges.size())
        throw std::invalid_argument("l1_distance: histograms must share binning");
    double l1 = 0.0;
    for (std::size_t i = 0; i + 1 < a.bin_edges.size(); ++i)
        l1 += std::abs(a.normalized[i] - b.normalized[i]) * (a.bin_edges[i + 1] - a.bin_edges[i]);
    return l1;
}

} // namespace unidiff
