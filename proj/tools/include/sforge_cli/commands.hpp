#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sforge::cli {

// process exit codes shared by every subcommand
inline constexpr int kOk = 0;
inline constexpr int kValidationFailure = 1;
inline constexpr int kUsageError = 2;
inline constexpr int kDiverged = 3;

struct SearchOptions {
    std::string problem = "gmm2d";
    std::string scheduler = "rf";   // rf | vp, must match the problem
    int nfe = 10;
    int ref_steps = 100;
    int batch = 512;
    int iters = 300;
    double lr = 0.01;
    std::uint64_t seed = 0;
    int max_order = 0;              // lookback cap per row, 0 = unlimited
    std::string out = "searched.solver";
    std::string loss_out;           // default: <out>.loss.csv
};

struct BenchOptions {
    std::string problem = "gmm2d";
    std::vector<std::string> solvers{"euler"};  // names or schedule file paths
    int nfe_lo = 5, nfe_hi = 10;
    int oracle_steps = 100000;
    int seeds = 16;
    std::string out = "bench.csv";
    bool timing = false;  // off by default so outputs are byte-deterministic
};

struct ValidateOptions {
    std::vector<std::string> files;
    bool paper_tables = false;
};

struct BoundCheckOptions {
    double eta = 0.05;
    int trials = 100;
    std::string schedule;  // file path or "<model_tag>:<nfe>" bundled table
    std::string problem = "gmm2d";
};

struct RespaceOptions {
    std::string family = "reflow";  // reflow | ddpm
    int nfe = 10;
};

int cmd_search(const SearchOptions& opt, std::ostream& log);
int cmd_bench(const BenchOptions& opt, std::ostream& log);
int cmd_validate(const ValidateOptions& opt, std::ostream& log);
int cmd_bound_check(const BoundCheckOptions& opt, std::ostream& log);
int cmd_respace(const RespaceOptions& opt, std::ostream& log);

} // namespace sforge::cli
