#include "sforge/registry.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "kv_format.hpp"
#include "sforge/samplers.hpp"

#ifndef SFORGE_BUNDLED_DATA_DIR
#define SFORGE_BUNDLED_DATA_DIR ""
#endif

namespace sforge {

namespace {

constexpr double kDeltaSumTol = 2e-3;  // published tables round to 4 decimals

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string data_dir() {
    if (const char* env = std::getenv("SOLVER_FORGE_DATA"); env && *env) return env;
    return SFORGE_BUNDLED_DATA_DIR;
}

std::vector<PaperTableId> paper_table_ids() {
    std::vector<PaperTableId> ids;
    for (const char* tag : {"sit-xl-2", "flowdcn-b-2", "dit-xl-2"})
        for (int nfe = 5; nfe <= 10; ++nfe) ids.push_back({tag, nfe});
    return ids;
}

std::string paper_table_path(const std::string& model_tag, int nfe) {
    return data_dir() + "/schedules/" + model_tag + "-nfe" + std::to_string(nfe) + ".solver";
}

SolverSchedule load_schedule(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScheduleParseError("cannot open " + path);

    int format_version = -1, nfe = -1;
    std::string kind_str, model_tag, source = "manual", config_hash;
    std::uint64_t seed = 0;
    std::vector<double> deltas;
    std::vector<std::vector<double>> coeffs;
    std::vector<int> max_order;

    std::string line, key, value;
    int lineno = 0;
    try {
        while (std::getline(in, line)) {
            ++lineno;
            if (!kv::parse_line(line, key, value)) continue;
            if (key == "format_version") format_version = std::stoi(value);
            else if (key == "kind") kind_str = value;
            else if (key == "model_tag") model_tag = value;
            else if (key == "nfe") nfe = std::stoi(value);
            else if (key == "provenance") source = value;
            else if (key == "config_hash") config_hash = value;
            else if (key == "seed") seed = std::stoull(value);
            else if (key == "deltas") deltas = kv::number_list(value, key);
            else if (key == "max_order") max_order = kv::int_list(value, key);
            else if (key.rfind("coeffs[", 0) == 0 && key.back() == ']') {
                int row = std::stoi(key.substr(7, key.size() - 8));
                if (row < 1) throw ScheduleParseError(path + ": coeffs row index must be >= 1");
                if (static_cast<int>(coeffs.size()) < row) coeffs.resize(static_cast<std::size_t>(row));
                coeffs[static_cast<std::size_t>(row) - 1] = kv::number_list(value, key);
            } else {
                throw ScheduleParseError(path + ":" + std::to_string(lineno) +
                                         ": unknown key '" + key + "'");
            }
        }
    } catch (const std::runtime_error& e) {
        throw ScheduleParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }

    if (format_version != 1)
        throw ScheduleParseError(path + ": unsupported format_version " +
                                 std::to_string(format_version));
    SchedulerKind kind;
    if (kind_str == "rf") kind = SchedulerKind::RectifiedFlow;
    else if (kind_str == "vp") kind = SchedulerKind::VPLinear;
    else throw ScheduleParseError(path + ": kind must be rf or vp, got '" + kind_str + "'");

    if (nfe < 1) throw ScheduleParseError(path + ": nfe must be >= 1");
    if (static_cast<int>(deltas.size()) != nfe)
        throw ScheduleParseError(path + ": deltas length " + std::to_string(deltas.size()) +
                                 " != nfe " + std::to_string(nfe));
    if (static_cast<int>(coeffs.size()) != nfe - 1)
        throw ScheduleParseError(path + ": expected " + std::to_string(nfe - 1) +
                                 " coefficient rows, got " + std::to_string(coeffs.size()));
    for (int i = 1; i < nfe; ++i)
        if (static_cast<int>(coeffs[static_cast<std::size_t>(i) - 1].size()) != i)
            throw ScheduleParseError(path + ": coeffs[" + std::to_string(i) + "] must have " +
                                     std::to_string(i) + " entries");

    double sum = 0.0;
    for (double d : deltas) {
        if (!(d > 0.0)) throw ScheduleParseError(path + ": deltas must be positive");
        sum += d;
    }
    if (std::abs(sum - 1.0) > kDeltaSumTol)
        throw ScheduleParseError(path + ": deltas sum " + std::to_string(sum) +
                                 " deviates from 1 by more than " + std::to_string(kDeltaSumTol));

    double renorm = 1.0;
    // bit-exact round-trips matter more than renormalizing away rounding
    // noise below double precision
    if (std::abs(sum - 1.0) > 1e-12) {
        renorm = 1.0 / sum;
        for (double& d : deltas) d *= renorm;
        double s2 = 0.0;
        for (double d : deltas) s2 += d;
        deltas.back() += 1.0 - s2;
    }

    SolverSchedule s = schedule_from_parts(kind, std::move(deltas), std::move(coeffs), 1e-9);
    s.model_tag = model_tag;
    s.max_order = max_order;
    s.provenance.source = source;
    s.provenance.config_hash = config_hash;
    s.provenance.seed = seed;
    s.provenance.renorm = renorm;
    return s;
}

void save_schedule(const SolverSchedule& sched, const std::string& path) {
    if (sched.nfe < 1) throw std::invalid_argument("save_schedule: invalid schedule");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_schedule: cannot open " + path + " for writing");
    out << "format_version: 1\n";
    out << "kind: " << to_string(sched.kind) << "\n";
    if (!sched.model_tag.empty()) out << "model_tag: " << sched.model_tag << "\n";
    out << "nfe: " << sched.nfe << "\n";
    out << "provenance: " << sched.provenance.source << "\n";
    if (!sched.provenance.config_hash.empty())
        out << "config_hash: " << sched.provenance.config_hash << "\n";
    if (sched.provenance.seed != 0) out << "seed: " << sched.provenance.seed << "\n";
    if (!sched.max_order.empty()) {
        out << "max_order: [";
        for (std::size_t i = 0; i < sched.max_order.size(); ++i)
            out << (i ? ", " : "") << sched.max_order[i];
        out << "]\n";
    }
    out << "deltas: [";
    for (std::size_t i = 0; i < sched.deltas.size(); ++i)
        out << (i ? ", " : "") << fmt17(sched.deltas[i]);
    out << "]\n";
    for (std::size_t r = 0; r < sched.coeff_rows.size(); ++r) {
        out << "coeffs[" << (r + 1) << "]: [";
        for (std::size_t j = 0; j < sched.coeff_rows[r].size(); ++j)
            out << (j ? ", " : "") << fmt17(sched.coeff_rows[r][j]);
        out << "]\n";
    }
    if (!out) throw std::runtime_error("save_schedule: write failed for " + path);
}

namespace {

// do the last two rows use only the immediately preceding evaluation?
bool detect_last_two_cap(const SolverSchedule& s) {
    if (s.nfe < 3) return false;
    for (int i = s.nfe - 2; i < s.nfe; ++i) {
        for (int j = 0; j < i - 1; ++j)
            if (s.m(i, j) != 0.0) return false;
        if (s.m(i, i - 1) == 0.0) return false;
    }
    return true;
}

TableReport report_for(const std::string& path, const std::string& name) {
    TableReport rep;
    rep.name = name;
    SolverSchedule s;
    try {
        s = load_schedule(path);
    } catch (const std::exception& e) {
        rep.errors.push_back(e.what());
        return rep;
    }
    rep.nfe = s.nfe;
    rep.kind = s.kind;
    rep.delta_sum = s.provenance.renorm == 1.0 ? 1.0 : 1.0 / s.provenance.renorm;
    for (int i = 1; i < s.nfe; ++i)
        for (double c : s.coeff_rows[static_cast<std::size_t>(i) - 1])
            rep.max_abs_coeff = std::max(rep.max_abs_coeff, std::abs(c));
    rep.order_capped_last_two = detect_last_two_cap(s);

    // row sums must be exactly 1 after reconstruction
    for (int i = 0; i < s.nfe; ++i)
        if (!s.row_sums_to_one(i))
            rep.errors.push_back("row " + std::to_string(i) + " does not sum to exactly 1");

    try {
        const std::vector<double> x0{0.25, -0.4};
        if (s.kind == SchedulerKind::RectifiedFlow) {
            auto tr = multistep_rf_sample(builtin_problem("gmm2d").field, x0, s);
            rep.smoke_ok = std::isfinite(tr.states.back()[0]) && std::isfinite(tr.states.back()[1]);
        } else {
            Problem p = builtin_problem("vpgauss");
            auto tr = multistep_vp_sample(p.field, x0, s, p.noise, p.vp_t_min);
            rep.smoke_ok = std::isfinite(tr.states.back()[0]) && std::isfinite(tr.states.back()[1]);
        }
        if (!rep.smoke_ok) rep.errors.push_back("smoke run produced non-finite endpoint");
    } catch (const std::exception& e) {
        rep.errors.push_back(std::string("smoke run failed: ") + e.what());
    }

    rep.ok = rep.errors.empty();
    return rep;
}

} // namespace

TableReport validate_schedule_file(const std::string& path) {
    return report_for(path, path);
}

std::vector<TableReport> validate_paper_tables() {
    std::vector<TableReport> reports;
    for (const auto& id : paper_table_ids())
        reports.push_back(report_for(paper_table_path(id.model_tag, id.nfe),
                                     id.model_tag + "-nfe" + std::to_string(id.nfe)));
    return reports;
}

} // namespace sforge
