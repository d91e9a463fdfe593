#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "unidiff/rng.hpp"

namespace unidiff {

using Matrix = Eigen::MatrixXcd;

enum class Family { GaussianHermitian, SignBernoulli, UniformEntries };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// Hermitian generator ensemble: N x N, entrywise distribution fixed by the
// family, first moment zero, second moment <(1/N) tr H^2> = m2.
struct EnsembleSpec {
    Family family = Family::GaussianHermitian;
    int n = 2;
    double m2 = 1.0;
    std::uint64_t seed = 0;

    EnsembleSpec() = default;
    EnsembleSpec(Family family_, int n_, double m2_, std::uint64_t seed_);

    std::string to_json() const;
    static EnsembleSpec from_json(const std::string& text);
};

// Draw one Hermitian matrix from the stream. Entry variances are m2/N
// (off-diagonal E|H_ij|^2 and diagonal E H_ii^2 alike), so that
// E[(1/N) tr H^2] = m2 for every family.
Matrix sample_hermitian(const EnsembleSpec& spec, RngStream& rng);

struct MomentEstimate {
    double m1_hat = 0.0;
    double m2_hat = 0.0;
    double m1_stderr = 0.0;
    double m2_stderr = 0.0;
};

// Sample means of (1/N) tr H and (1/N) tr H^2 over n_samples draws,
// with standard errors. Streams are keyed by (spec.seed, sample index).
MomentEstimate estimate_moments_of_h(const EnsembleSpec& spec, int n_samples);

} // namespace unidiff
