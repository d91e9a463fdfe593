#include "unidiff/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "unidiff/linalg.hpp"

namespace unidiff {

namespace {
constexpr int kReunitarizeEvery = 100;
constexpr double kUnitarityBound = 1e-8;
constexpr double kModulusBound = 1e-6;
} // namespace

DiffusionRun::DiffusionRun(EnsembleSpec spec, std::vector<double> t_checkpoints,
                           int m_per_unit, bool exact_exp)
    : spec_(std::move(spec)), checkpoints_(std::move(t_checkpoints)),
      m_per_unit_(m_per_unit), exact_exp_(exact_exp) {
    if (m_per_unit_ < 1) throw std::invalid_argument("DiffusionRun: m_per_unit must be >= 1");
    if (checkpoints_.empty()) throw std::invalid_argument("DiffusionRun: no checkpoints");
    if (!std::is_sorted(checkpoints_.begin(), checkpoints_.end()))
        throw std::invalid_argument("DiffusionRun: checkpoints must be ascending");
    if (checkpoints_.front() < 0.0)
        throw std::invalid_argument("DiffusionRun: checkpoints must be nonnegative");

    const double t_max = checkpoints_.back();
    if (t_max > 0.0) {
        total_steps_ = std::max(100, static_cast<int>(std::ceil(m_per_unit_ * t_max * spec_.m2)));
        eps_ = std::sqrt(t_max / total_steps_);
    }
    u_ = Matrix::Identity(spec_.n, spec_.n);
}

void DiffusionRun::advance(const Matrix& h) {
    if (exact_exp_) {
        u_ = linalg::unitary_exp_eig(h, eps_) * u_;
    } else {
        u_ = linalg::unitary_exp_taylor(h, eps_) * u_;
    }
    ++steps_applied_;
    if (steps_applied_ % kReunitarizeEvery == 0) u_ = reunitarize(u_);
}

void DiffusionRun::step(const Matrix& h) {
    if (h.rows() != spec_.n || h.cols() != spec_.n)
        throw std::invalid_argument("step: generator size does not match the run");
    u_ = linalg::unitary_exp_eig(h, eps_) * u_;
    ++steps_applied_;
    if (steps_applied_ % kReunitarizeEvery == 0) u_ = reunitarize(u_);
}

std::vector<EigenphaseSample> DiffusionRun::run_to_checkpoints(RngStream& rng,
                                                               std::uint64_t sample_index) {
    std::vector<EigenphaseSample> out;
    out.reserve(checkpoints_.size());

    // Checkpoint k is reached after ceil(t_k / eps^2) steps.
    std::vector<long> stop_steps;
    for (double t : checkpoints_) {
        long s = 0;
        if (t > 0.0 && eps_ > 0.0)
            s = std::min<long>(total_steps_, static_cast<long>(std::ceil(t / (eps_ * eps_) - 1e-9)));
        stop_steps.push_back(s);
    }

    std::size_t next = 0;
    auto emit = [&]() {
        while (next < stop_steps.size() && stop_steps[next] == steps_applied_) {
            EigenphaseSample s;
            s.t = checkpoints_[next];
            s.sample_index = sample_index;
            try {
                s.thetas = eigenphases(u_);
            } catch (const std::exception&) {
                s.failed = true;
                s.thetas.clear();
            }
            out.push_back(std::move(s));
            ++next;
        }
    };

    emit(); // t = 0 checkpoints
    while (next < stop_steps.size()) {
        advance(sample_hermitian(spec_, rng));
        emit();
    }
    return out;
}

Matrix reunitarize(const Matrix& u) {
    const double drift = linalg::unitarity_drift(u);
    if (drift >= 1e-3)
        throw std::runtime_error("reunitarize: input too far from unitary (drift " +
                                 std::to_string(drift) + ")");
    return linalg::reunitarize_qr(u);
}

std::vector<double> eigenphases(const Matrix& u) {
    linalg::CVector lam;
    if (!linalg::complex_eigenvalues(u, lam))
        throw std::runtime_error("eigenphases: complex eigensolver failed");
    std::vector<double> thetas(lam.size());
    for (Eigen::Index j = 0; j < lam.size(); ++j) {
        const double mod = std::abs(lam(j));
        if (std::abs(mod - 1.0) >= kModulusBound)
            throw std::runtime_error("eigenphases: eigenvalue modulus off the unit circle");
        thetas[j] = std::arg(lam(j)); // (-pi, pi]
    }
    std::sort(thetas.begin(), thetas.end());
    return thetas;
}

std::vector<EigenphaseSample> run_batch(const EnsembleSpec& spec,
                                        const std::vector<double>& t_checkpoints,
                                        int n_samples, int n_threads,
                                        int m_per_unit, bool exact_exp) {
    if (n_samples < 1) throw std::invalid_argument("run_batch: n_samples must be >= 1");
    n_threads = std::max(1, n_threads);
    std::vector<std::vector<EigenphaseSample>> per_sample(n_samples);

    auto worker = [&](int first, int stride) {
        for (int i = first; i < n_samples; i += stride) {
            DiffusionRun run(spec, t_checkpoints, m_per_unit, exact_exp);
            RngStream rng(spec.seed, static_cast<std::uint64_t>(i));
            per_sample[i] = run.run_to_checkpoints(rng, static_cast<std::uint64_t>(i));
        }
    };

    if (n_threads == 1 || n_samples == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker, w, n_threads);
        for (auto& th : pool) th.join();
    }

    std::vector<EigenphaseSample> flat;
    flat.reserve(static_cast<std::size_t>(n_samples) * t_checkpoints.size());
    for (auto& v : per_sample)
        for (auto& s : v) flat.push_back(std::move(s));
    return flat;
}

} // namespace unidiff
