#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "unidiff/analytic.hpp"
#include "unidiff/diffusion.hpp"
#include "unidiff/stats.hpp"

namespace unidiff::io {

inline constexpr const char* kVersion = "0.1.0";

// Comment header carried by every output file; config_json is the fully
// resolved run configuration, sufficient to reproduce the file.
struct Provenance {
    std::string command;
    std::string config_json;
    bool with_timestamp = true;
};

std::string format_double(double v); // shortest-ish deterministic, '.' decimal

class CsvFile {
  public:
    CsvFile(const std::string& path, const Provenance& prov,
            const std::vector<std::string>& columns);
    ~CsvFile();
    CsvFile(const CsvFile&) = delete;
    CsvFile& operator=(const CsvFile&) = delete;

    void row(const std::vector<double>& values);
    void raw_row(const std::string& line);

  private:
    std::FILE* f_ = nullptr;
};

void write_density_csv(const std::string& path, const ResolventSolution& sol,
                       const Provenance& prov);
void write_moments_csv(const std::string& path, const MomentTable& analytic,
                       const MomentTable* empirical, const Provenance& prov);
void write_histogram_csv(const std::string& path, const DensityHistogram& hist,
                         const Provenance& prov);
void write_eigenphases_csv(const std::string& path,
                           const std::vector<EigenphaseSample>& samples,
                           const Provenance& prov);
void write_manifest_json(const std::string& path, const std::string& config_json,
                         const std::vector<std::string>& outputs);

} // namespace unidiff::io
