// unidiff: multiplicative unitary diffusion laboratory.
//
// Subcommands: density, simulate, moments, critical, check.
// Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 invariant
// violation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "unidiff/analytic.hpp"
#include "unidiff/checks.hpp"
#include "unidiff/diffusion.hpp"
#include "unidiff/ensembles.hpp"
#include "unidiff/io.hpp"
#include "unidiff/stats.hpp"

namespace {

using nlohmann::json;
using namespace unidiff;

constexpr double kPi = std::numbers::pi;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitInvariant = 3;

std::string tag(double v) {
    std::string s = io::format_double(v);
    for (char& c : s) {
        if (c == '.') c = 'p';
        if (c == '-') c = 'm';
    }
    return s;
}

int default_threads() {
    if (const char* env = std::getenv("UNIDIFF_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 2;
}

json load_config_file(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") {
            std::FILE* f = std::fopen(argv[i + 1], "rb");
            if (!f) throw CLI::ValidationError("--config", "cannot open config file");
            std::string text;
            char buf[4096];
            std::size_t n;
            while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
            std::fclose(f);
            return json::parse(text);
        }
    return json::object();
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string item = csv.substr(pos, comma == std::string::npos ? csv.size() - pos
                                                                            : comma - pos);
        if (!item.empty()) out.push_back(std::stod(item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    for (double v : parse_list(csv)) out.push_back(static_cast<int>(std::lround(v)));
    return out;
}

struct CommonOpts {
    double m2 = 1.0;
    std::uint64_t seed = 1;
    int threads = default_threads();
    std::string out_dir = ".";
    std::string config_path;
};

void add_common(CLI::App* cmd, CommonOpts& o, const json& cfg) {
    o.m2 = cfg.value("m2", o.m2);
    o.seed = cfg.value("seed", o.seed);
    o.threads = cfg.value("threads", o.threads);
    o.out_dir = cfg.value("out_dir", o.out_dir);
    cmd->add_option("--m2", o.m2, "second moment of the generator distribution");
    cmd->add_option("--seed", o.seed, "base RNG seed");
    cmd->add_option("--threads", o.threads, "worker threads (default: UNIDIFF_THREADS or 2)");
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    cmd->add_option("--config", o.config_path, "JSON config file (flags override it)");
}

std::string out_path(const CommonOpts& o, const std::string& name) {
    std::filesystem::create_directories(o.out_dir);
    return (std::filesystem::path(o.out_dir) / name).string();
}

// ---------------------------------------------------------------- density --

int cmd_density(const CommonOpts& o, const std::vector<double>& ts, int grid_points,
                int kmax_cross) {
    if (ts.empty()) throw CLI::ValidationError("--t", "at least one time is required");
    for (double t : ts)
        if (!(t > 0.0)) throw CLI::ValidationError("--t", "times must be > 0");
    if (!(o.m2 > 0.0)) throw CLI::ValidationError("--m2", "m2 must be > 0");

    json cfg{{"command", "density"}, {"m2", o.m2}, {"t", ts},
             {"grid_points", grid_points}, {"kmax", kmax_cross}, {"out_dir", o.out_dir}};
    bool any_failed = false;
    std::vector<std::string> outputs;
    for (double t : ts) {
        const auto grid = default_theta_grid(t, o.m2, grid_points);
        const auto sol = density(t, o.m2, grid);
        if (!sol.failed_indices.empty()) {
            any_failed = true;
            std::fprintf(stderr, "density: %zu grid points failed at t=%s\n",
                         sol.failed_indices.size(), io::format_double(t).c_str());
        }
        const double norm = trapezoid_periodic(grid, sol.rho_values);
        std::fprintf(stderr, "t=%s: %zu grid points, trapezoid integral %.9f\n",
                     io::format_double(t).c_str(), grid.size(), norm);
        const std::string path = out_path(o, "density_t" + tag(t) + ".csv");
        io::write_density_csv(path, sol, {"density", cfg.dump()});
        outputs.push_back(path);
        if (kmax_cross > 0) {
            const auto fou = density_from_moments(t, o.m2, kmax_cross, grid);
            if (fou.tail_warning)
                std::fprintf(stderr,
                             "t=%s: Fourier tail bound %.3g exceeds 1e-6 "
                             "(subcritical edge; increase --kmax or mask near edges)\n",
                             io::format_double(t).c_str(), fou.tail_bound);
            const std::string fpath = out_path(o, "density_fourier_t" + tag(t) + ".csv");
            io::write_density_csv(fpath, fou.solution, {"density", cfg.dump()});
            outputs.push_back(fpath);
        }
    }
    io::write_manifest_json(out_path(o, "density_manifest.json"), cfg.dump(), outputs);
    return any_failed ? kExitNumerical : kExitOk;
}

// --------------------------------------------------------------- simulate --

int cmd_simulate(const CommonOpts& o, const std::string& family, int n,
                 const std::vector<double>& ts, int samples, int bins, int m_per_unit,
                 bool exact_exp) {
    if (ts.empty()) throw CLI::ValidationError("--t", "at least one time is required");
    for (double t : ts)
        if (t < 0.0) throw CLI::ValidationError("--t", "times must be >= 0");
    if (n < 2) throw CLI::ValidationError("--n", "matrix size must be >= 2");
    if (samples < 1) throw CLI::ValidationError("--samples", "need at least one sample");

    EnsembleSpec spec;
    try {
        spec = EnsembleSpec(family_from_name(family), n, o.m2, o.seed);
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("simulate", e.what());
    }
    std::vector<double> checkpoints = ts;
    std::sort(checkpoints.begin(), checkpoints.end());

    json cfg{{"command", "simulate"}, {"family", family}, {"n", n}, {"m2", o.m2},
             {"t", checkpoints}, {"samples", samples}, {"seed", o.seed},
             {"bins", bins}, {"m_per_unit", m_per_unit}, {"exact_exp", exact_exp},
             {"out_dir", o.out_dir}};

    const auto batch = run_batch(spec, checkpoints, samples, o.threads, m_per_unit, exact_exp);
    long failed = 0;
    for (const auto& s : batch) failed += s.failed ? 1 : 0;
    if (failed > 0)
        std::fprintf(stderr, "simulate: %ld of %zu sample checkpoints failed\n", failed,
                     batch.size());

    std::vector<std::string> outputs;
    for (double t : checkpoints) {
        std::vector<EigenphaseSample> at_t;
        for (const auto& s : batch)
            if (std::abs(s.t - t) < 1e-12) at_t.push_back(s);
        const std::string ep = out_path(o, "eigenphases_t" + tag(t) + ".csv");
        io::write_eigenphases_csv(ep, at_t, {"simulate", cfg.dump()});
        outputs.push_back(ep);
        const auto hist = histogram(at_t, bins);
        const std::string hp = out_path(o, "histogram_t" + tag(t) + ".csv");
        io::write_histogram_csv(hp, hist, {"simulate", cfg.dump()});
        outputs.push_back(hp);
    }
    io::write_manifest_json(out_path(o, "run_manifest.json"), cfg.dump(), outputs);

    if (failed * 100 > static_cast<long>(batch.size())) {
        std::fprintf(stderr, "simulate: more than 1%% of samples failed\n");
        return kExitNumerical;
    }
    return kExitOk;
}

// ---------------------------------------------------------------- moments --

int cmd_moments(const CommonOpts& o, const std::string& family, int n,
                const std::vector<double>& ts, int samples, int kmax) {
    if (ts.empty()) throw CLI::ValidationError("--t", "time grid must not be empty");
    if (kmax < 1) throw CLI::ValidationError("--kmax", "kmax must be >= 1");
    for (double t : ts)
        if (t < 0.0) throw CLI::ValidationError("--t", "times must be >= 0");

    EnsembleSpec spec;
    try {
        spec = EnsembleSpec(family_from_name(family), n, o.m2, o.seed);
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("moments", e.what());
    }
    std::vector<double> grid = ts;
    std::sort(grid.begin(), grid.end());

    json cfg{{"command", "moments"}, {"family", family}, {"n", n}, {"m2", o.m2},
             {"t", grid}, {"samples", samples}, {"kmax", kmax}, {"seed", o.seed},
             {"out_dir", o.out_dir}};

    const auto batch = run_batch(spec, grid, samples, o.threads);

    std::vector<std::string> outputs;
    const std::string path = out_path(o, "moments.csv");
    {
        io::CsvFile csv(path, {"moments", cfg.dump()},
                        {"t", "k", "a_analytic", "a_empirical", "a_emp_stderr",
                         "a_emp_imag"});
        std::vector<double> worst_sigma(kmax, 0.0);
        for (double t : grid) {
            const auto ana = analytic_moments(t, o.m2, kmax);
            std::vector<EigenphaseSample> at_t;
            for (const auto& s : batch)
                if (std::abs(s.t - t) < 1e-12) at_t.push_back(s);
            const auto emp = empirical_moments(at_t, kmax);
            for (int k = 1; k <= kmax; ++k) {
                csv.row({t, static_cast<double>(k), ana.a[k - 1], emp.a[k - 1],
                         emp.stderrs[k - 1], emp.imag_parts[k - 1]});
                if (emp.stderrs[k - 1] > 0.0)
                    worst_sigma[k - 1] =
                        std::max(worst_sigma[k - 1],
                                 std::abs(ana.a[k - 1] - emp.a[k - 1]) / emp.stderrs[k - 1]);
            }
        }
        std::printf("per-k agreement, max |analytic - empirical| / stderr over the grid:\n");
        for (int k = 1; k <= kmax; ++k) std::printf("  k=%d: %.2f sigma\n", k, worst_sigma[k - 1]);
    }
    outputs.push_back(path);
    io::write_manifest_json(out_path(o, "moments_manifest.json"), cfg.dump(), outputs);
    return kExitOk;
}

// --------------------------------------------------------------- critical --

int cmd_critical(const CommonOpts& o, const std::string& family, const std::vector<int>& ns,
                 int samples, double t_flag, std::pair<double, double> window) {
    if (ns.size() < 2) throw CLI::ValidationError("--n", "need at least two matrix sizes");
    const double tc = critical_time(o.m2);
    double t = t_flag > 0.0 ? t_flag : tc;
    if (std::abs(t - tc) > 0.01 * tc) {
        std::fprintf(stderr,
                     "critical: t=%s is not the critical time; t_c = 4/m2 = %s\n",
                     io::format_double(t).c_str(), io::format_double(tc).c_str());
        return kExitUsage;
    }

    json cfg{{"command", "critical"}, {"family", family}, {"n", ns}, {"m2", o.m2},
             {"t", t}, {"samples", samples}, {"window", {window.first, window.second}},
             {"seed", o.seed}, {"out_dir", o.out_dir}};

    std::vector<std::string> outputs;
    std::vector<SpacingFit> fits;
    EnsembleSpec base;
    for (int n : ns) {
        EnsembleSpec spec(family_from_name(family), n, o.m2, o.seed);
        const auto batch = run_batch(spec, {t}, samples, o.threads);
        try {
            fits.push_back(critical_spacing_fit(batch, window, 24, 2000));
        } catch (const std::runtime_error& e) {
            std::fprintf(stderr, "critical: %s\n", e.what());
            const long have = estimate_edge(batch).n_pooled;
            std::fprintf(stderr,
                         "critical: roughly %ld samples needed at N=%d for 2000 "
                         "eigenvalues in the window\n",
                         static_cast<long>(std::ceil(2000.0 * samples / std::max(1L, have))),
                         n);
            return kExitNumerical;
        }
    }

    const std::string fit_path = out_path(o, "spacing_fits.csv");
    {
        io::CsvFile csv(fit_path, {"critical", cfg.dump()},
                        {"n", "slope", "slope_stderr", "intercept", "mean_gap_pi",
                         "pooled_count"});
        for (const auto& f : fits)
            csv.row({static_cast<double>(f.n), f.slope, f.slope_stderr, f.intercept,
                     f.mean_gap_pi, static_cast<double>(f.pooled_count)});
    }
    outputs.push_back(fit_path);

    // analytic near-critical profile and the density it approximates
    const std::string prof_path = out_path(o, "critical_profile.csv");
    {
        io::CsvFile csv(prof_path, {"critical", cfg.dump()},
                        {"theta", "rho_profile", "rho_analytic"});
        for (int i = 1; i <= 60; ++i) {
            const double d = 0.3 * i / 60.0;
            const double th = kPi - d;
            csv.row({th, near_critical_profile(th), rho_at(th, t, o.m2)});
        }
    }
    outputs.push_back(prof_path);

    // analytic density critical exponent over the near window
    double ana_slope = 0.0, ana_coeff = 0.0;
    {
        std::vector<double> lx, ly;
        for (int q = 0; q < 25; ++q) {
            const double d = 1e-4 * std::pow(100.0, q / 24.0);
            lx.push_back(std::log(d));
            ly.push_back(std::log(rho_at(kPi - d, t, o.m2)));
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(lx.size());
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i]; sy += ly[i]; sxx += lx[i] * lx[i]; sxy += lx[i] * ly[i];
        }
        ana_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        ana_coeff = std::exp((sy - ana_slope * sx) / m);
    }

    std::sort(fits.begin(), fits.end(),
              [](const SpacingFit& a, const SpacingFit& b) { return a.n < b.n; });
    const double gap_exp = gap_ratio_exponent(fits.front(), fits.back());

    std::printf("counting exponent (fit, predicted 4/3):\n");
    for (const auto& f : fits)
        std::printf("  N=%d: slope %.4f +- %.4f, pooled %ld\n", f.n, f.slope,
                    f.slope_stderr, f.pooled_count);
    std::printf("gap exponent N=%d vs N=%d (predicted 3/4): %.4f\n", fits.front().n,
                fits.back().n, gap_exp);
    std::printf("analytic density near pi: slope %.5f (predicted 1/3), coefficient %.5f "
                "(predicted %.5f)\n",
                ana_slope, ana_coeff, critical_density_coefficient());

    const std::string sum_path = out_path(o, "critical_summary.csv");
    {
        io::CsvFile csv(sum_path, {"critical", cfg.dump()},
                        {"quantity", "measured", "predicted"});
        char line[160];
        std::snprintf(line, sizeof line, "counting_slope_n%d,%s,%s", fits.front().n,
                      io::format_double(fits.front().slope).c_str(),
                      io::format_double(4.0 / 3.0).c_str());
        csv.raw_row(line);
        std::snprintf(line, sizeof line, "counting_slope_n%d,%s,%s", fits.back().n,
                      io::format_double(fits.back().slope).c_str(),
                      io::format_double(4.0 / 3.0).c_str());
        csv.raw_row(line);
        std::snprintf(line, sizeof line, "gap_exponent,%s,0.75",
                      io::format_double(gap_exp).c_str());
        csv.raw_row(line);
        std::snprintf(line, sizeof line, "density_slope,%s,%s",
                      io::format_double(ana_slope).c_str(),
                      io::format_double(1.0 / 3.0).c_str());
        csv.raw_row(line);
        std::snprintf(line, sizeof line, "density_coefficient,%s,%s",
                      io::format_double(ana_coeff).c_str(),
                      io::format_double(critical_density_coefficient()).c_str());
        csv.raw_row(line);
    }
    outputs.push_back(sum_path);
    io::write_manifest_json(out_path(o, "critical_manifest.json"), cfg.dump(), outputs);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"unidiff: eigenvalue density of products of random unitaries"};
    app.require_subcommand(1);

    json cfg;
    try {
        cfg = load_config_file(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }

    // density
    auto* cd = app.add_subcommand("density", "analytic density from the functional equation");
    CommonOpts od;
    add_common(cd, od, cfg);
    std::string cd_t = cfg.value("t", std::string("0.5,1,2,3,4,5,5.5"));
    int cd_grid = cfg.value("grid_points", 2048);
    int cd_kmax = cfg.value("kmax", 0);
    cd->add_option("--t", cd_t, "comma list of times");
    cd->add_option("--grid-points", cd_grid, "uniform grid size (edges refined)");
    cd->add_option("--kmax", cd_kmax, "also write the Fourier moment-sum density");

    // simulate
    auto* cs = app.add_subcommand("simulate", "Monte Carlo diffusion trajectories");
    CommonOpts os;
    add_common(cs, os, cfg);
    std::string cs_family = cfg.value("family", std::string("gaussian"));
    int cs_n = cfg.value("n", 200);
    std::string cs_t = cfg.value("t", std::string("0.5,1,2,3,4,5,5.5"));
    int cs_samples = cfg.value("samples", 200);
    int cs_bins = cfg.value("bins", 64);
    int cs_mpu = cfg.value("m_per_unit", 100);
    bool cs_exact = cfg.value("exact_exp", false);
    cs->add_option("--family", cs_family, "gaussian | sign | uniform");
    cs->add_option("--n", cs_n, "matrix size N");
    cs->add_option("--t", cs_t, "comma list of checkpoint times");
    cs->add_option("--samples", cs_samples, "number of trajectories");
    cs->add_option("--bins", cs_bins, "histogram bins");
    cs->add_option("--m-per-unit", cs_mpu, "steps per unit of m2*t");
    cs->add_flag("--exact-exp", cs_exact, "eigendecomposition per step");

    // moments
    auto* cm = app.add_subcommand("moments", "analytic vs empirical moments a_k(t)");
    CommonOpts om;
    add_common(cm, om, cfg);
    std::string cm_family = cfg.value("family", std::string("gaussian"));
    int cm_n = cfg.value("n", 200);
    std::string cm_t = cfg.value("t", std::string());
    int cm_samples = cfg.value("samples", 200);
    int cm_kmax = cfg.value("kmax", 4);
    cm->add_option("--family", cm_family, "gaussian | sign | uniform");
    cm->add_option("--n", cm_n, "matrix size N");
    cm->add_option("--t", cm_t, "comma list of times (default 0.25..5.5 step 0.25)");
    cm->add_option("--samples", cm_samples, "number of trajectories");
    cm->add_option("--kmax", cm_kmax, "highest moment order");

    // critical
    auto* cc = app.add_subcommand("critical", "level statistics at the critical time");
    CommonOpts oc;
    add_common(cc, oc, cfg);
    std::string cc_family = cfg.value("family", std::string("gaussian"));
    std::string cc_n = cfg.value("n", std::string("128,256"));
    int cc_samples = cfg.value("samples", 500);
    double cc_t = cfg.value("t", 0.0);
    std::string cc_window = cfg.value("window", std::string("0.02,0.3"));
    cc->add_option("--family", cc_family, "gaussian | sign | uniform");
    cc->add_option("--n", cc_n, "comma list of matrix sizes");
    cc->add_option("--samples", cc_samples, "trajectories per size");
    cc->add_option("--t", cc_t, "evolution time (must equal t_c = 4/m2; 0 = use t_c)");
    cc->add_option("--window", cc_window, "fit window lo,hi in |theta-pi|");

    // check
    auto* ck = app.add_subcommand("check", "run the cross-module invariant suite");
    CommonOpts ok_;
    add_common(ck, ok_, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (cd->parsed()) return cmd_density(od, parse_list(cd_t), cd_grid, cd_kmax);
        if (cs->parsed())
            return cmd_simulate(os, cs_family, cs_n, parse_list(cs_t), cs_samples, cs_bins,
                                cs_mpu, cs_exact);
        if (cm->parsed()) {
            std::vector<double> ts = parse_list(cm_t);
            if (cm_t.empty()) {
                if (cm->count("--t") || cfg.contains("t"))
                    throw CLI::ValidationError("--t", "time grid must not be empty");
                for (int i = 1; i <= 22; ++i) ts.push_back(0.25 * i);
            }
            return cmd_moments(om, cm_family, cm_n, ts, cm_samples, cm_kmax);
        }
        if (cc->parsed()) {
            const auto w = parse_list(cc_window);
            if (w.size() != 2) throw CLI::ValidationError("--window", "expected lo,hi");
            return cmd_critical(oc, cc_family, parse_int_list(cc_n), cc_samples, cc_t,
                                {w[0], w[1]});
        }
        if (ck->parsed()) {
            checks::Options copts;
            copts.n_threads = ok_.threads;
            copts.seed = ok_.seed;
            const auto results = checks::run_all(copts);
            checks::print_table(results, stdout);
            return checks::all_passed(results) ? kExitOk : kExitInvariant;
        }
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const BranchLossError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitUsage;
}
