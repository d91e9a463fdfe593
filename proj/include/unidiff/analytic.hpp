#pragma once

#include <array>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace unidiff {

using Complex = std::complex<double>;

// Thrown when Newton continuation cannot keep the physical branch
// (the solution continuously connected to f -> 0 as |z| -> infinity).
class BranchLossError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// f(z,t) on an evaluation grid along the unit circle, with the density
// rho(theta) recovered from the boundary values.
struct ResolventSolution {
    double t = 0.0;
    double m2 = 1.0;
    std::vector<double> theta_grid;
    std::vector<Complex> f_values;
    std::vector<double> rho_values;   // clamped to >= 0 for reporting
    std::vector<int> failed_indices;  // grid points where continuation failed
};

struct MomentTable {
    enum class Source { Analytic, MonteCarlo };
    double t = 0.0;
    double m2 = 1.0;
    int k_max = 0;
    std::vector<double> a;          // a_1..a_kmax
    Source source = Source::Analytic;
    std::vector<double> stderrs;    // Monte Carlo only
    std::vector<double> imag_parts; // Monte Carlo diagnostic, expected ~0
};

// Support boundary of the eigenvalue distribution. Empty theta_edge means
// the support covers the full circle (m2*t >= 4).
struct EdgePoints {
    double t = 0.0;
    double m2 = 1.0;
    std::optional<double> theta_edge;
    bool full_circle() const { return !theta_edge.has_value(); }
};

// --- functional equation core -------------------------------------------

// Newton solve of z f = (1+f) exp(-t m2 (f + 1/2)) from the seed f_init.
// The accepted solution satisfies |residual| < 1e-12 (1 + |f|); whether it
// is the physical branch is the caller's responsibility (continuation).
Complex solve_f(Complex z, double t, double m2, Complex f_init);

// Physical-branch boundary value of f at z = e^{i theta}, limit from
// |z| > 1, obtained by radial continuation from the large-|z| asymptotics.
Complex solve_f_on_circle(double theta, double t, double m2);

// Physical-branch value at an arbitrary point off the support. Points with
// |z| < 1 are reached through the spectral gap around theta = pi and are
// only defined for m2*t < 4.
Complex solve_f_at(Complex z, double t, double m2);

// Density at one angle: rho = (1/pi) Re(1/2 + f), clamped to >= 0.
double rho_at(double theta, double t, double m2);

// --- grid solves ----------------------------------------------------------

// Default evaluation grid: n_uniform equispaced points on (-pi, pi] plus
// graded clusters around the support edges (and around pi near the critical
// point) so that the trapezoidal normalization check reaches 1e-6.
std::vector<double> default_theta_grid(double t, double m2, int n_uniform = 2048);

// Solve f on the given grid and form the density.
ResolventSolution density(double t, double m2, const std::vector<double>& theta_grid);

// --- moments ---------------------------------------------------------------

// a_k = <(1/N) tr U^k> by power-series substitution of f = sum a_k z^{-k}
// into the functional equation; triangular recursion, exact in exact
// arithmetic.
MomentTable analytic_moments(double t, double m2, int k_max);

// Closed forms for a_1..a_5 as polynomial-times-exponential in tau = m2*t,
// kept as regression oracles. (The printed a_2 in the source material has
// the overall sign flipped; this returns the convention with a_k(0) = 1,
// which the recursion and Monte Carlo both confirm.)
std::array<double, 5> closed_form_moments(double tau);

// Fourier reconstruction rho = (1/2pi)(1 + 2 sum a_k cos k theta).
struct FourierDensity {
    ResolventSolution solution;
    std::vector<double> truncation_estimate; // per-point partial-sum error estimate
    double tail_bound = 0.0;                 // global envelope bound on the dropped tail
    bool tail_warning = false;               // tail_bound > 1e-6
};
FourierDensity density_from_moments(double t, double m2, int k_max,
                                    const std::vector<double>& theta_grid);

// --- support, critical point ----------------------------------------------

EdgePoints edge_points(double t, double m2);

// t_c = 4 / m2.
double critical_time(double m2);

// Leading-order density at t = t_c near theta = pi:
// (1/pi) (3/16)^{1/3} cos(pi/6) |theta - pi|^{1/3}. Validity window
// |theta - pi| < 0.3 (next-order corrections below 1%).
double near_critical_profile(double theta);

// The coefficient of |theta - pi|^{1/3} above, approximately 0.1577785.
double critical_density_coefficient();

// --- consistency checks ------------------------------------------------

// Residual of the S-transform identity (1/(zS)) G((1+z)/(zS)) = 1 with
// S = exp(t (z + 1/2) m2), G evaluated through the functional equation.
// Requires |(1+z)/(zS)| > 1 unless m2*t < 4 (then interior points are
// reached through the gap); otherwise throws BranchLossError.
double s_transform_check(Complex z, double t, double m2);

// Real test points z in (0, f(1)) for which w = (1+z)/(zS) stays outside
// the unit disk, suitable for s_transform_check at this tau.
std::vector<double> s_check_points(double t, double m2, int count);

// --- quadrature -----------------------------------------------------------

// Adaptive Gauss-Legendre integral of rho(theta) * cos(k theta) over
// (-pi, pi], with square-root (edge) and cube-root (critical cusp)
// substitutions at the analytically known singular angles.
double integrate_density(double t, double m2, int cos_k = 0, double tol = 1e-10);

// Periodic trapezoidal rule for samples on an ascending grid in (-pi, pi].
double trapezoid_periodic(const std::vector<double>& theta,
                          const std::vector<double>& values);

} // namespace unidiff
