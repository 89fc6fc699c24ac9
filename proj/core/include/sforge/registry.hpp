#pragma once

#include <string>
#include <vector>

#include "sforge/solver_schedule.hpp"

namespace sforge {

/// Schedule persistence. One schedule per file, versioned key/value text
/// with bracketed arrays:
///
///   format_version: 1
///   kind: rf
///   model_tag: sit-xl-2
///   nfe: 5
///   provenance: paper_table
///   deltas: [0.0424, 0.1225, 0.2144, 0.3073, 0.3135]
///   coeffs[1]: [-1.17]
///   coeffs[2]: [1.07, -1.83]
///   ...
///
/// Row i of coeffs holds exactly i strictly-lower entries. Optional keys:
/// seed, config_hash, max_order (bracketed int list). Lines starting with
/// '#' are comments. Deltas are renormalized on load so downstream code
/// can assume an exact sum of 1; the factor is kept in provenance.

struct ScheduleParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

SolverSchedule load_schedule(const std::string& path);
void save_schedule(const SolverSchedule& sched, const std::string& path);

/// Bundled-data directory: SOLVER_FORGE_DATA env var if set, else the
/// build-time default.
std::string data_dir();

struct PaperTableId {
    std::string model_tag;  // sit-xl-2 | flowdcn-b-2 | dit-xl-2
    int nfe;
};

/// The 18 published solver tables (3 models x NFE 5..10).
std::vector<PaperTableId> paper_table_ids();

/// Path of a bundled table inside data_dir().
std::string paper_table_path(const std::string& model_tag, int nfe);

struct TableReport {
    std::string name;
    int nfe = 0;
    SchedulerKind kind = SchedulerKind::RectifiedFlow;
    double delta_sum = 0.0;        // pre-normalization
    double max_abs_coeff = 0.0;
    bool order_capped_last_two = false;
    bool smoke_ok = false;         // ran on a smoke fixture with finite output
    bool ok = false;
    std::vector<std::string> errors;
};

/// Load and validate every bundled table; never throws, failures are
/// reported per table.
std::vector<TableReport> validate_paper_tables();

/// Validation report for a single schedule file.
TableReport validate_schedule_file(const std::string& path);

} // namespace sforge
