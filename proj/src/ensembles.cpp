#include "unidiff/ensembles.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace unidiff {

std::string family_name(Family f) {
    switch (f) {
        case Family::GaussianHermitian: return "gaussian";
        case Family::SignBernoulli: return "sign";
        case Family::UniformEntries: return "uniform";
    }
    throw std::logic_error("unreachable family");
}

Family family_from_name(const std::string& name) {
    if (name == "gaussian") return Family::GaussianHermitian;
    if (name == "sign") return Family::SignBernoulli;
    if (name == "uniform") return Family::UniformEntries;
    throw std::invalid_argument("unknown ensemble family: " + name);
}

EnsembleSpec::EnsembleSpec(Family family_, int n_, double m2_, std::uint64_t seed_)
    : family(family_), n(n_), m2(m2_), seed(seed_) {
    if (n < 2) throw std::invalid_argument("EnsembleSpec: n must be >= 2");
    if (!(m2 > 0.0)) throw std::invalid_argument("EnsembleSpec: m2 must be > 0");
}

std::string EnsembleSpec::to_json() const {
    nlohmann::json j;
    j["family"] = family_name(family);
    j["n"] = n;
    j["m2"] = m2;
    j["seed"] = seed;
    return j.dump();
}

EnsembleSpec EnsembleSpec::from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    return EnsembleSpec(family_from_name(j.at("family").get<std::string>()),
                        j.at("n").get<int>(), j.at("m2").get<double>(),
                        j.at("seed").get<std::uint64_t>());
}

Matrix sample_hermitian(const EnsembleSpec& spec, RngStream& rng) {
    const int n = spec.n;
    const double v = spec.m2 / n;        // target E|H_ij|^2 per entry
    Matrix h(n, n);

    switch (spec.family) {
        case Family::GaussianHermitian: {
            const double sd = std::sqrt(v);       // diagonal, real
            const double so = std::sqrt(v / 2.0); // off-diagonal, per component
            for (int i = 0; i < n; ++i) {
                h(i, i) = std::complex<double>(rng.normal(sd), 0.0);
                for (int j = i + 1; j < n; ++j) {
                    h(i, j) = std::complex<double>(rng.normal(so), rng.normal(so));
                    h(j, i) = std::conj(h(i, j));
                }
            }
            break;
        }
        case Family::SignBernoulli: {
            const double sd = std::sqrt(v);
            const double so = std::sqrt(v / 2.0);
            for (int i = 0; i < n; ++i) {
                h(i, i) = std::complex<double>(rng.sign() * sd, 0.0);
                for (int j = i + 1; j < n; ++j) {
                    h(i, j) = std::complex<double>(rng.sign() * so, rng.sign() * so);
                    h(j, i) = std::conj(h(i, j));
                }
            }
            break;
        }
        case Family::UniformEntries: {
            // Uniform[-a, a] has variance a^2/3.
            const double ad = std::sqrt(3.0 * v);
            const double ao = std::sqrt(3.0 * v / 2.0);
            for (int i = 0; i < n; ++i) {
                h(i, i) = std::complex<double>(rng.uniform(-ad, ad), 0.0);
                for (int j = i + 1; j < n; ++j) {
                    h(i, j) = std::complex<double>(rng.uniform(-ao, ao), rng.uniform(-ao, ao));
                    h(j, i) = std::conj(h(i, j));
                }
            }
            break;
        }
    }
    return h;
}

MomentEstimate estimate_moments_of_h(const EnsembleSpec& spec, int n_samples) {
    if (n_samples < 2) throw std::invalid_argument("estimate_moments_of_h: n_samples must be >= 2");
    double s1 = 0.0, s1sq = 0.0, s2 = 0.0, s2sq = 0.0;
    for (int k = 0; k < n_samples; ++k) {
        RngStream rng(spec.seed, static_cast<std::uint64_t>(k));
        Matrix h = sample_hermitian(spec, rng);
        const double tr1 = h.trace().real() / spec.n;
        const double tr2 = h.squaredNorm() / spec.n; // tr H^2 = sum |H_ij|^2 for Hermitian H
        s1 += tr1;
        s1sq += tr1 * tr1;
        s2 += tr2;
        s2sq += tr2 * tr2;
    }
    MomentEstimate est;
    const double inv = 1.0 / n_samples;
    est.m1_hat = s1 * inv;
    est.m2_hat = s2 * inv;
    const double var1 = std::max(0.0, s1sq * inv - est.m1_hat * est.m1_hat);
    const double var2 = std::max(0.0, s2sq * inv - est.m2_hat * est.m2_hat);
    est.m1_stderr = std::sqrt(var1 / (n_samples - 1));
    est.m2_stderr = std::sqrt(var2 / (n_samples - 1));
    return est;
}

} // namespace unidiff
