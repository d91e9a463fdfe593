#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "unidiff/ensembles.hpp"

namespace unidiff {

// Sorted eigenphases theta_j in (-pi, pi] of one realized product matrix.
struct EigenphaseSample {
    std::vector<double> thetas;
    double t = 0.0;
    std::uint64_t sample_index = 0;
    bool failed = false; // eigensolver did not converge; thetas empty
};

// One trajectory of the multiplicative diffusion U = prod_k exp(i eps H_k),
// eps = sqrt(t_max / M). The step count M is fixed from the last checkpoint
// so that eps^2 * m2 <= 1e-2 (with m_per_unit = 100 by default).
class DiffusionRun {
  public:
    DiffusionRun(EnsembleSpec spec, std::vector<double> t_checkpoints,
                 int m_per_unit = 100, bool exact_exp = false);

    const EnsembleSpec& spec() const { return spec_; }
    const std::vector<double>& checkpoints() const { return checkpoints_; }
    int total_steps() const { return total_steps_; }
    double eps() const { return eps_; }
    double t_elapsed() const { return static_cast<double>(steps_applied_) * eps_ * eps_; }
    const Matrix& u_current() const { return u_; }
    int m_per_unit() const { return m_per_unit_; }

    // u <- exp(i eps h) u via Hermitian eigendecomposition of h.
    void step(const Matrix& h);

    // Run the whole trajectory, drawing H_k from the given stream, and
    // collect eigenphases at every checkpoint. sample_index tags the output.
    std::vector<EigenphaseSample> run_to_checkpoints(RngStream& rng,
                                                     std::uint64_t sample_index = 0);

  private:
    void advance(const Matrix& h);

    EnsembleSpec spec_;
    std::vector<double> checkpoints_;
    int m_per_unit_;
    bool exact_exp_;
    int total_steps_ = 0;
    double eps_ = 0.0;
    long steps_applied_ = 0;
    Matrix u_;
};

// Nearest unitary via QR with phase-fixed R diagonal. Requires the input to
// be within 1e-3 of unitary (max-norm of U^H U - I); otherwise the matrix is
// considered corrupted and an exception is thrown.
Matrix reunitarize(const Matrix& u);

// Convenience batch driver: n_samples independent trajectories with RNG
// streams keyed by (spec.seed, sample index), optionally multi-threaded.
// Returns samples ordered by (sample index, checkpoint).
std::vector<EigenphaseSample> run_batch(const EnsembleSpec& spec,
                                        const std::vector<double>& t_checkpoints,
                                        int n_samples, int n_threads,
                                        int m_per_unit = 100, bool exact_exp = false);

// Eigenphases of one unitary matrix: general complex eigensolve, phases
// arg(lambda_j) sorted ascending. Throws if any |lambda_j| strays from 1
// by more than 1e-6.
std::vector<double> eigenphases(const Matrix& u);

} // namespace unidiff
