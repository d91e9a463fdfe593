#include "unidiff/io.hpp"

#include <cinttypes>
#include <ctime>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace unidiff::io {

std::string format_double(double v) {
    char buf[40];
    // round-trip exact; %.17g keeps the decimal point locale-free
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {
std::string timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}
} // namespace

CsvFile::CsvFile(const std::string& path, const Provenance& prov,
                 const std::vector<std::string>& columns) {
    f_ = std::fopen(path.c_str(), "wb"); // LF line endings on every platform
    if (!f_) throw std::runtime_error("cannot open output file: " + path);
    std::fprintf(f_, "# unidiff v%s %s\n", kVersion, prov.command.c_str());
    std::fprintf(f_, "# config: %s\n", prov.config_json.c_str());
    if (prov.with_timestamp)
        std::fprintf(f_, "# generated_at: %s\n", timestamp_utc().c_str());
    std::string head;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) head += ',';
        head += columns[i];
    }
    std::fprintf(f_, "%s\n", head.c_str());
}

CsvFile::~CsvFile() {
    if (f_) std::fclose(f_);
}

void CsvFile::row(const std::vector<double>& values) {
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) line += ',';
        line += format_double(values[i]);
    }
    std::fprintf(f_, "%s\n", line.c_str());
}

void CsvFile::raw_row(const std::string& line) { std::fprintf(f_, "%s\n", line.c_str()); }

void write_density_csv(const std::string& path, const ResolventSolution& sol,
                       const Provenance& prov) {
    CsvFile csv(path, prov, {"theta", "re_f", "im_f", "rho"});
    for (std::size_t i = 0; i < sol.theta_grid.size(); ++i)
        csv.row({sol.theta_grid[i], sol.f_values[i].real(), sol.f_values[i].imag(),
                 sol.rho_values[i]});
}

void write_moments_csv(const std::string& path, const MomentTable& analytic,
                       const MomentTable* empirical, const Provenance& prov) {
    if (empirical) {
        CsvFile csv(path, prov,
                    {"t", "k", "a_analytic", "a_empirical", "a_emp_stderr", "a_emp_imag"});
        for (int k = 1; k <= analytic.k_max; ++k)
            csv.row({analytic.t, static_cast<double>(k), analytic.a[k - 1],
                     empirical->a[k - 1], empirical->stderrs[k - 1],
                     empirical->imag_parts[k - 1]});
    } else {
        CsvFile csv(path, prov, {"t", "k", "a_k"});
        for (int k = 1; k <= analytic.k_max; ++k)
            csv.row({analytic.t, static_cast<double>(k), analytic.a[k - 1]});
    }
}

void write_histogram_csv(const std::string& path, const DensityHistogram& hist,
                         const Provenance& prov) {
    CsvFile csv(path, prov, {"bin_center", "rho_hat", "stderr"});
    for (std::size_t b = 0; b + 1 < hist.bin_edges.size(); ++b)
        csv.row({0.5 * (hist.bin_edges[b] + hist.bin_edges[b + 1]), hist.normalized[b],
                 hist.stderrs[b]});
}

void write_eigenphases_csv(const std::string& path,
                           const std::vector<EigenphaseSample>& samples,
                           const Provenance& prov) {
    CsvFile csv(path, prov, {"sample_index", "t", "theta"});
    char buf[96];
    for (const auto& s : samples) {
        if (s.failed) continue;
        for (double th : s.thetas) {
            std::snprintf(buf, sizeof buf, "%" PRIu64 ",%s,%s",
                          static_cast<std::uint64_t>(s.sample_index),
                          format_double(s.t).c_str(), format_double(th).c_str());
            csv.raw_row(buf);
        }
    }
}

void write_manifest_json(const std::string& path, const std::string& config_json,
                         const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["tool"] = "unidiff";
    j["version"] = kVersion;
    j["config"] = nlohmann::json::parse(config_json);
    j["outputs"] = outputs;
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    const std::string text = j.dump(2);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fputc('\n', f);
    std::fclose(f);
}

} // namespace unidiff::io
