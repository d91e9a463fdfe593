#include "unidiff/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace unidiff {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kResidualTol = 1e-12;
constexpr double kPhysicalTol = 1e-9; // allowed Re(1/2+f) undershoot below 0

struct Equation {
    double tau; // m2 * t

    // exp(-tau (f + 1/2)) with an overflow guard; huge trial steps in a
    // Newton line search can push the exponent far positive.
    bool exp_term(Complex f, Complex& out) const {
        const Complex w = -tau * (f + 0.5);
        if (w.real() > 500.0) return false;
        out = std::exp(w);
        return true;
    }
    bool residual(Complex f, Complex z, Complex& out) const {
        Complex e;
        if (!exp_term(f, e)) return false;
        out = z * f - (1.0 + f) * e;
        return true;
    }
    // d/df [ z f - (1+f) e^{-tau(f+1/2)} ] = z - (1 - tau (1+f)) e^{-tau(f+1/2)}
    bool derivative(Complex f, Complex z, Complex& out) const {
        Complex e;
        if (!exp_term(f, e)) return false;
        out = z - (1.0 - tau * (1.0 + f)) * e;
        return true;
    }
};

bool newton(const Equation& eq, Complex z, Complex f0, Complex& f_out,
            int max_iter = 80) {
    Complex f = f0;
    Complex g;
    if (!eq.residual(f, z, g)) return false;
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(g) <= kResidualTol * (1.0 + std::abs(f))) {
            f_out = f;
            return true;
        }
        Complex gp;
        if (!eq.derivative(f, z, gp) || gp == Complex(0.0, 0.0)) return false;
        const Complex step = g / gp;
        double lambda = 1.0;
        bool improved = false;
        for (int bt = 0; bt < 40; ++bt) {
            const Complex f_try = f - lambda * step;
            Complex g_try;
            if (eq.residual(f_try, z, g_try) && std::abs(g_try) < std::abs(g)) {
                f = f_try;
                g = g_try;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) return false;
    }
    f_out = f;
    return std::abs(g) <= kResidualTol * (1.0 + std::abs(f));
}

// Large-|z| asymptotics of the physical branch, f = a1/z + a2/z^2 + ...
Complex asymptotic_seed(Complex z, double tau) {
    const double a1 = std::exp(-0.5 * tau);
    const double a2 = std::exp(-tau) * (1.0 - tau);
    return a1 / z + a2 / (z * z);
}

// Track the physical branch along path(s), s: 0 -> 1, with adaptive step
// bisection and a secant predictor.
Complex continue_path(const Equation& eq, const std::function<Complex(double)>& path,
                      Complex f_start, double ds_init = 0.125) {
    double s = 0.0;
    double ds = ds_init;
    Complex f = f_start;
    Complex f_prev = f_start;
    double s_prev = 0.0;
    while (s < 1.0 - 1e-15) {
        const double s_next = std::min(1.0, s + ds);
        Complex seed = f;
        if (s > s_prev) // secant predictor
            seed = f + (f - f_prev) * ((s_next - s) / (s - s_prev));
        Complex f_next;
        if (newton(eq, path(s_next), seed, f_next) ||
            newton(eq, path(s_next), f, f_next)) {
            f_prev = f;
            s_prev = s;
            f = f_next;
            s = s_next;
            ds = std::min(ds * 1.5, 0.25);
        } else {
            ds *= 0.5;
            if (ds < 1e-13)
                throw BranchLossError("continuation step underflow while tracking f");
        }
    }
    return f;
}

// Radial descent from |z| = r0 down to |z| = r_target along a fixed angle.
Complex radial_descent(double theta, double tau, double r_target, double r0 = 50.0) {
    Equation eq{tau};
    const Complex dir = std::polar(1.0, theta);
    r0 = std::max(r0, 2.0 * r_target);
    const double log_ratio = std::log(r0 / r_target);
    auto path = [&](double s) { return dir * (r_target * std::exp(log_ratio * (1.0 - s))); };
    Complex f0;
    if (!newton(eq, path(0.0), asymptotic_seed(path(0.0), tau), f0))
        throw BranchLossError("seeding at large |z| failed");
    return continue_path(eq, path, f0);
}

// Cube-root seed near the critical closing point (tau ~ 4, theta ~ pi):
// f = -1/2 + F with F^3 ~ -(3/16)(z+1).
Complex critical_seed(Complex z) {
    return -0.5 + std::pow(-(z + 1.0) * (3.0 / 16.0), 1.0 / 3.0);
}

double wrap_distance_to_pi(double theta) {
    return std::abs(std::abs(theta) - kPi);
}

} // namespace

Complex solve_f(Complex z, double t, double m2, Complex f_init) {
    Equation eq{t * m2};
    Complex f;
    if (!newton(eq, z, f_init, f))
        throw BranchLossError("Newton did not converge from the given seed");
    return f;
}

Complex solve_f_on_circle(double theta, double t, double m2) {
    const double tau = t * m2;
    Equation eq{tau};
    const Complex z = std::polar(1.0, theta);

    // Near the critical closing point the Jacobian degenerates like F^2;
    // the local cube-root asymptotics is a better seed than continuation.
    if (std::abs(tau - 4.0) <= 0.02 && wrap_distance_to_pi(theta) <= 0.2) {
        Complex f;
        if (newton(eq, z, critical_seed(z), f) && (0.5 + f).real() >= -kPhysicalTol)
            return f;
    }

    for (double r0 : {50.0, 400.0}) {
        Complex f = radial_descent(theta, tau, 1.0, r0);
        if ((0.5 + f).real() >= -kPhysicalTol) return f;
    }
    throw BranchLossError("radial continuation left the physical branch");
}

Complex solve_f_at(Complex z, double t, double m2) {
    const double tau = t * m2;
    const double r = std::abs(z);
    if (r > 1.0 + 1e-12) return radial_descent(std::arg(z), tau, r);
    if (tau >= 4.0)
        throw BranchLossError("no spectral gap at m2*t >= 4: interior points unreachable");
    // Reach interior points through the gap at theta = pi: descend the
    // negative real axis to z = -1 (where f = -1/2 exactly), then walk a
    // chord inside the disk. Both stay off the support arc.
    Equation eq{tau};
    Complex f = radial_descent(kPi, tau, 1.0);
    auto chord = [&](double s) { return Complex(-1.0, 0.0) * (1.0 - s) + z * s; };
    return continue_path(eq, chord, f);
}

double rho_at(double theta, double t, double m2) {
    const Complex f = solve_f_on_circle(theta, t, m2);
    return std::max(0.0, (0.5 + f).real() / kPi);
}

std::vector<double> default_theta_grid(double t, double m2, int n_uniform) {
    if (n_uniform < 16) throw std::invalid_argument("default_theta_grid: too few points");
    const double tau = t * m2;
    const double h = 2.0 * kPi / n_uniform;
    std::vector<double> grid;
    grid.reserve(n_uniform + 512);
    for (int i = 1; i <= n_uniform; ++i) grid.push_back(-kPi + h * i);

    auto add_cluster = [&](double center, double delta_min) {
        // geometric ladder of offsets h > d > delta_min on both sides
        for (double d = h; d > delta_min; d /= 1.35) {
            for (double s : {center - d, center + d})
                if (s > -kPi + 1e-12 && s <= kPi) grid.push_back(s);
        }
        if (center > -kPi + 1e-12 && center <= kPi) grid.push_back(center);
    };

    if (tau > 0.0 && tau < 4.0 - 1e-12) {
        const double te = *edge_points(t, m2).theta_edge;
        add_cluster(te, 1e-10);
        add_cluster(-te, 1e-10);
    }
    if (tau >= 4.0 - 1e-9 && tau < 4.6) {
        const double dmin = std::abs(tau - 4.0) < 1e-9 ? 1e-10 : 1e-6;
        add_cluster(kPi, dmin);  // ladder below +pi
        add_cluster(-kPi, dmin); // ladder above -pi (the same cusp point)
    }

    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-13; }),
               grid.end());
    return grid;
}

ResolventSolution density(double t, double m2, const std::vector<double>& theta_grid) {
    if (!(t > 0.0)) throw std::invalid_argument("density: requires t > 0");
    if (!(m2 > 0.0)) throw std::invalid_argument("density: requires m2 > 0");
    if (!std::is_sorted(theta_grid.begin(), theta_grid.end()))
        throw std::invalid_argument("density: grid must be ascending");
    if (!theta_grid.empty() &&
        (theta_grid.front() <= -kPi - 1e-12 || theta_grid.back() > kPi + 1e-12))
        throw std::invalid_argument("density: grid must lie in (-pi, pi]");

    ResolventSolution sol;
    sol.t = t;
    sol.m2 = m2;
    sol.theta_grid = theta_grid;
    sol.f_values.resize(theta_grid.size());
    sol.rho_values.resize(theta_grid.size());
    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
        try {
            const Complex f = solve_f_on_circle(theta_grid[i], t, m2);
            sol.f_values[i] = f;
            sol.rho_values[i] = std::max(0.0, (0.5 + f).real() / kPi);
        } catch (const BranchLossError&) {
            sol.failed_indices.push_back(static_cast<int>(i));
            sol.f_values[i] = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
            sol.rho_values[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return sol;
}

MomentTable analytic_moments(double t, double m2, int k_max) {
    if (k_max < 1) throw std::invalid_argument("analytic_moments: k_max must be >= 1");
    const double tau = t * m2;
    MomentTable table;
    table.t = t;
    table.m2 = m2;
    table.k_max = k_max;
    table.source = MomentTable::Source::Analytic;
    table.a.resize(k_max);

    // Substituting f(w) = sum_{k>=1} a_k w^k (w = 1/z) into the functional
    // equation gives a_{k} = e^{-tau/2} [w^{k-1}] (1+f) e^{-tau f}; the
    // right-hand side only involves a_1..a_{k-1}, so the recursion is
    // triangular. E holds the series of e^{-tau f}.
    std::vector<double> fc(k_max + 1, 0.0); // f coefficients, fc[j] = a_j
    std::vector<double> ec(k_max + 1, 0.0); // exp series coefficients
    ec[0] = 1.0;
    const double pref = std::exp(-0.5 * tau);
    for (int k = 1; k <= k_max; ++k) {
        const int m = k - 1;
        if (m >= 1) {
            // E' = -tau f' E  =>  m E_m = -tau sum_{j=1}^{m} j f_j E_{m-j}
            double s = 0.0;
            for (int j = 1; j <= m; ++j) s += j * fc[j] * ec[m - j];
            ec[m] = -tau * s / m;
        }
        double tot = ec[m];
        for (int j = 1; j <= m; ++j) tot += fc[j] * ec[m - j];
        const double ak = pref * tot;
        table.a[k - 1] = ak;
        fc[k] = ak;
    }
    return table;
}

std::array<double, 5> closed_form_moments(double tau) {
    const double e = std::exp(-0.5 * tau);
    return {
        e,
        std::exp(-tau) * (1.0 - tau),
        0.5 * std::exp(-1.5 * tau) * (2.0 - 6.0 * tau + 3.0 * tau * tau),
        -(1.0 / 3.0) * std::exp(-2.0 * tau) *
            (-3.0 + 18.0 * tau - 24.0 * tau * tau + 8.0 * tau * tau * tau),
        (1.0 / 24.0) * std::exp(-2.5 * tau) *
            (24.0 - 240.0 * tau + 600.0 * tau * tau - 500.0 * tau * tau * tau +
             125.0 * tau * tau * tau * tau),
    };
}

FourierDensity density_from_moments(double t, double m2, int k_max,
                                    const std::vector<double>& theta_grid) {
    if (k_max < 2) throw std::invalid_argument("density_from_moments: k_max must be >= 2");
    const MomentTable mom = analytic_moments(t, m2, k_max);
    const auto& a = mom.a;

    FourierDensity out;
    out.solution.t = t;
    out.solution.m2 = m2;
    out.solution.theta_grid = theta_grid;
    const std::size_t n = theta_grid.size();
    out.solution.f_values.resize(n);
    out.solution.rho_values.resize(n);
    out.truncation_estimate.assign(n, 0.0);

    const int k_half = k_max / 2;
    std::vector<double> partial_half(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double th = theta_grid[i];
        // cos/sin recurrences for sum a_k e^{-ik theta}
        const double c1 = std::cos(th), s1 = std::sin(th);
        double ck = 1.0, sk = 0.0; // cos(0), sin(0)
        double sum_c = 0.0, sum_s = 0.0;
        for (int k = 1; k <= k_max; ++k) {
            const double cn = ck * c1 - sk * s1;
            const double sn = sk * c1 + ck * s1;
            ck = cn;
            sk = sn;
            sum_c += a[k - 1] * ck;
            sum_s += a[k - 1] * sk;
            if (k == k_half) partial_half[i] = sum_c;
        }
        out.solution.f_values[i] = Complex(sum_c, -sum_s); // f = sum a_k e^{-ik theta}
        out.solution.rho_values[i] = (1.0 + 2.0 * sum_c) / (2.0 * kPi);
        out.truncation_estimate[i] = std::abs(sum_c - partial_half[i]) / kPi;
    }
    // Partial-sum difference is only an indicator; widen it over a small
    // window and scale, so near-edge oscillation nulls do not mask points.
    std::vector<double> est = out.truncation_estimate;
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0;
        const std::size_t lo = i >= 5 ? i - 5 : 0;
        const std::size_t hi = std::min(n - 1, i + 5);
        for (std::size_t j = lo; j <= hi; ++j) m = std::max(m, est[j]);
        out.truncation_estimate[i] = 4.0 * m;
    }

    // Envelope bound on the dropped tail: fit |a_k| ~ A k^{-p} over the
    // peaks of the upper half and integrate.
    double tail = std::numeric_limits<double>::infinity();
    {
        std::vector<double> lk, la;
        for (int k = std::max(2, k_half); k < k_max; ++k) {
            const double v = std::abs(a[k - 1]);
            if (v > std::abs(a[k - 2]) && v >= std::abs(a[k])) {
                lk.push_back(std::log(k));
                la.push_back(std::log(v));
            }
        }
        if (lk.size() >= 4) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            const double m = static_cast<double>(lk.size());
            for (std::size_t i = 0; i < lk.size(); ++i) {
                sx += lk[i];
                sy += la[i];
                sxx += lk[i] * lk[i];
                sxy += lk[i] * la[i];
            }
            const double p = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
            const double logA = (sy + p * sx) / m;
            if (p > 1.01)
                tail = std::exp(logA) * std::pow(k_max, 1.0 - p) / (p - 1.0) / kPi;
        } else {
            // decay too fast for a peak fit; crude but tiny
            tail = std::abs(a[k_max - 1]) * k_max / kPi;
        }
    }
    out.tail_bound = tail;
    out.tail_warning = !(tail < 1e-6);
    return out;
}

EdgePoints edge_points(double t, double m2) {
    if (t < 0.0) throw std::invalid_argument("edge_points: t must be >= 0");
    if (!(m2 > 0.0)) throw std::invalid_argument("edge_points: m2 must be > 0");
    EdgePoints ep;
    ep.t = t;
    ep.m2 = m2;
    const double tau = t * m2;
    if (tau >= 4.0) return ep; // full circle
    // z_edge = (sqrt(4-tau)+i sqrt(tau))/(sqrt(4-tau)-i sqrt(tau))
    //          * exp((i/2) sqrt(tau) sqrt(4-tau));
    // arg of the Moebius factor is 2 atan2(sqrt(tau), sqrt(4-tau)).
    ep.theta_edge = 2.0 * std::atan2(std::sqrt(tau), std::sqrt(4.0 - tau)) +
                    0.5 * std::sqrt(tau * (4.0 - tau));
    return ep;
}

double critical_time(double m2) {
    if (!(m2 > 0.0)) throw std::invalid_argument("critical_time: m2 must be > 0");
    return 4.0 / m2;
}

double critical_density_coefficient() {
    return std::cbrt(3.0 / 16.0) * std::cos(kPi / 6.0) / kPi;
}

double near_critical_profile(double theta) {
    return critical_density_coefficient() * std::cbrt(std::abs(theta - kPi));
}

double s_transform_check(Complex z, double t, double m2) {
    const double tau = t * m2;
    const Complex s = std::exp(tau * (z + 0.5));
    const Complex w = (1.0 + z) / (z * s);
    if (!(std::abs(w) > 1.0 + 1e-12))
        throw BranchLossError("s_transform_check: w = (1+z)/(zS) is not outside the unit circle");
    const Complex f = solve_f_at(w, t, m2);
    const Complex green = (1.0 + f) / w;
    return std::abs(green / (z * s) - 1.0);
}

std::vector<double> s_check_points(double t, double m2, int count) {
    if (count < 1) throw std::invalid_argument("s_check_points: count must be >= 1");
    // w(z) stays outside the unit circle exactly for real z below the
    // boundary value f at z = 1; stay away from both ends.
    const double z_star = solve_f_on_circle(0.0, t, m2).real();
    const double lo = 0.02 * z_star;
    const double hi = 0.90 * z_star;
    std::vector<double> pts(count);
    for (int i = 0; i < count; ++i)
        pts[i] = lo * std::pow(hi / lo, count == 1 ? 0.5 : i / double(count - 1));
    return pts;
}

// --- quadrature ------------------------------------------------------------

namespace {

// 16-point Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton
// iteration on P_16.
struct Gauss16 {
    std::array<double, 16> x{}, w{};
    Gauss16() {
        const int n = 16;
        for (int i = 0; i < n / 2; ++i) {
            double xi = std::cos(kPi * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = xi;
                for (int k = 2; k <= n; ++k) {
                    const double pk = ((2 * k - 1) * xi * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                const double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
                const double dx = p1 / dp;
                xi -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            double p0 = 1.0, p1 = xi;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2 * k - 1) * xi * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            const double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
            x[i] = -xi;
            x[n - 1 - i] = xi;
            w[i] = w[n - 1 - i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
        }
    }
};
const Gauss16& gauss16() {
    static const Gauss16 g;
    return g;
}

double gl16(const std::function<double(double)>& f, double a, double b) {
    const auto& g = gauss16();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 16; ++i) s += g.w[i] * f(c + h * g.x[i]);
    return s * h;
}

double adaptive_gl(const std::function<double(double)>& f, double a, double b,
                   double tol, int depth = 0) {
    const double whole = gl16(f, a, b);
    const double mid = 0.5 * (a + b);
    const double split = gl16(f, a, mid) + gl16(f, mid, b);
    if (std::abs(split - whole) <= tol || depth >= 24) return split;
    return adaptive_gl(f, a, mid, 0.5 * tol, depth + 1) +
           adaptive_gl(f, mid, b, 0.5 * tol, depth + 1);
}

} // namespace

double integrate_density(double t, double m2, int cos_k, double tol) {
    const double tau = t * m2;
    auto g = [&](double th) { return rho_at(th, t, m2) * std::cos(cos_k * th); };

    // rho is even, cos(k theta) is even: integrate [0, pi] and double.
    if (tau < 4.0 - 1e-12) {
        const double te = *edge_points(t, m2).theta_edge;
        // square-root edge: substitute theta = te - u^2
        auto gu = [&](double u) { return g(te - u * u) * 2.0 * u; };
        const double inner = adaptive_gl(gu, 0.0, std::sqrt(te), 0.25 * tol);
        const double gap = te < kPi ? adaptive_gl(g, te, kPi, 0.25 * tol) : 0.0;
        return 2.0 * (inner + gap);
    }
    if (std::abs(tau - 4.0) <= 1e-9) {
        // cube-root cusp at pi: substitute theta = pi - u^3 near pi
        const double cut = 0.2;
        auto gu = [&](double u) { return g(kPi - u * u * u) * 3.0 * u * u; };
        return 2.0 * (adaptive_gl(g, 0.0, kPi - cut, 0.25 * tol) +
                      adaptive_gl(gu, 0.0, std::cbrt(cut), 0.25 * tol));
    }
    // smooth supercritical density; split near pi where curvature peaks
    return 2.0 * (adaptive_gl(g, 0.0, kPi - 0.2, 0.5 * tol) +
                  adaptive_gl(g, kPi - 0.2, kPi, 0.5 * tol));
}

double trapezoid_periodic(const std::vector<double>& theta, const std::vector<double>& values) {
    if (theta.size() != values.size() || theta.size() < 2)
        throw std::invalid_argument("trapezoid_periodic: bad input sizes");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < theta.size(); ++i)
        s += 0.5 * (values[i] + values[i + 1]) * (theta[i + 1] - theta[i]);
    // closing cell across the periodic seam
    const double seam = (theta.front() + 2.0 * kPi) - theta.back();
    s += 0.5 * (values.back() + values.front()) * seam;
    return s;
}

} // namespace unidiff
