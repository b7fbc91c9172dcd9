#pragma once

#include <string>

#include "taskdiff/aggregate.hpp"

namespace taskdiff {

// Shortest decimal that round-trips a double ("%.17g" trimmed); used for
// every numeric field we emit so output bytes do not depend on thread count.
std::string format_double(double v);

// Write-to-temp-then-rename so readers never observe a partial artifact.
void atomic_write(const std::string& path, const std::string& content);

// "h,psi_h,n_tasks,n_undecided", one row per stratum.
std::string curve_csv(const ResponseCurve& curve);
std::string curve_svg(const ResponseCurve& curve);

std::string aggregate_report_json(const std::string& agent_id, double epsilon,
                                  const WeightScheme& w, double value,
                                  const ResponseCurve& per_h);

struct CodingRow {
    int h = 0;
    double exact = 0.0;
    double approx = 0.0;
    double rel_dev = 0.0;
};

struct CodingTable {
    std::vector<CodingRow> rows;
    int word_size_c = 0;
    double base = 0.0;        // 1 + 2^-c
    double decay_ratio = 0.0; // p(h + c) / p(h) = 1 - 2^-c
};

CodingTable coding_table(const MachineConfig& cfg, int h_max);
std::string coding_csv(const CodingTable& table);
std::string coding_svg(const CodingTable& table);

std::string verify_report_text(const VerifyReport& report);

}  // namespace taskdiff
