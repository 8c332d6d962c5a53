#pragma once
// Structured result of a verification run: one entry per check, carrying the
// worst residual over the sampled points together with a status, plus the
// environment block needed to reproduce the run.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "supiverify/structure.hpp"

namespace sv {

struct CheckEntry {
    std::string id;          // stable machine name
    std::string descriptor;  // which identity the residual measures
    int points = 0;          // samples that fed the residual
    double raw = 0.0;        // worst raw residual
    double normalized = 0.0; // worst normalized residual
    double tolerance = 0.0;
    std::string status;      // pass, fail, skip or indeterminate
    std::string reason;      // set for skip and indeterminate entries
};

struct ReportEnvironment {
    std::uint64_t seed = 42;
    int points = 20;
    int jet_order = 4;
    double tolerance = 1e-8;
    double division_floor = jet_config().division_floor;
    double ln_floor = jet_config().ln_floor;
    std::vector<std::pair<std::string, double>> parameters;
};

struct CheckReport {
    std::string schema = "supiverify-report/1";
    std::string command;
    std::string system;
    std::string scale = "native";
    std::string scale_factor = "1";
    std::string timestamp; // empty when suppressed
    ReportEnvironment environment;
    std::vector<CheckEntry> checks;

    int count(const std::string& status) const {
        int c = 0;
        for (const auto& e : checks)
            if (e.status == status) ++c;
        return c;
    }
    bool all_passed() const { return count("fail") == 0; }
};

// Accumulates the worst residual of one check over points (and over Killing
// tensors where several feed the same entry).
struct ResidualAccumulator {
    double raw = 0.0;
    double normalized = 0.0;
    int points = 0;
    void add(const Residual& r) {
        raw = std::max(raw, r.raw);
        normalized = std::max(normalized, r.normalized);
        ++points;
    }
    void add(double raw_value, double normalized_value) {
        raw = std::max(raw, raw_value);
        normalized = std::max(normalized, normalized_value);
        ++points;
    }
};

inline CheckEntry judged_entry(const std::string& id, const std::string& descriptor,
                               const ResidualAccumulator& acc, double tol) {
    CheckEntry e;
    e.id = id;
    e.descriptor = descriptor;
    e.points = acc.points;
    e.raw = acc.raw;
    e.normalized = acc.normalized;
    e.tolerance = tol;
    e.status = acc.normalized < tol ? "pass" : "fail";
    return e;
}

inline CheckEntry skipped_entry(const std::string& id, const std::string& descriptor,
                                const std::string& reason) {
    CheckEntry e;
    e.id = id;
    e.descriptor = descriptor;
    e.status = "skip";
    e.reason = reason;
    return e;
}

inline CheckEntry informational_entry(const std::string& id, const std::string& descriptor,
                                      const ResidualAccumulator& acc,
                                      const std::string& reason) {
    CheckEntry e;
    e.id = id;
    e.descriptor = descriptor;
    e.points = acc.points;
    e.raw = acc.raw;
    e.normalized = acc.normalized;
    e.status = "indeterminate";
    e.reason = reason;
    return e;
}

inline nlohmann::ordered_json report_to_json(const CheckReport& rep) {
    nlohmann::ordered_json j;
    j["schema"] = rep.schema;
    j["command"] = rep.command;
    j["system"] = rep.system;
    j["scale"] = rep.scale;
    j["scale_factor"] = rep.scale_factor;
    if (!rep.timestamp.empty()) j["timestamp"] = rep.timestamp;
    nlohmann::ordered_json env;
    env["seed"] = rep.environment.seed;
    env["points"] = rep.environment.points;
    env["jet_order"] = rep.environment.jet_order;
    env["tolerance"] = rep.environment.tolerance;
    env["division_floor"] = rep.environment.division_floor;
    env["ln_floor"] = rep.environment.ln_floor;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : rep.environment.parameters) params[k] = v;
    env["parameters"] = params;
    j["environment"] = env;
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& e : rep.checks) {
        nlohmann::ordered_json c;
        c["id"] = e.id;
        c["descriptor"] = e.descriptor;
        c["points"] = e.points;
        c["raw_residual"] = e.raw;
        c["normalized_residual"] = e.normalized;
        c["tolerance"] = e.tolerance;
        c["status"] = e.status;
        if (!e.reason.empty()) c["reason"] = e.reason;
        checks.push_back(c);
    }
    j["checks"] = checks;
    nlohmann::ordered_json summary;
    summary["pass"] = rep.count("pass");
    summary["fail"] = rep.count("fail");
    summary["skip"] = rep.count("skip");
    summary["indeterminate"] = rep.count("indeterminate");
    j["summary"] = summary;
    return j;
}

inline void write_report_file(const CheckReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error("cannot write report to '" + path + "'");
    out << report_to_json(rep).dump(2) << "\n";
    if (!out) throw error("cannot write report to '" + path + "'");
}

// Human summary; residuals with three significant digits.
inline std::string render_report(const CheckReport& rep) {
    std::ostringstream os;
    os << rep.command << " " << rep.system << "  (scale " << rep.scale << ", "
       << rep.environment.points << " points, seed " << rep.environment.seed << ", tol "
       << rep.environment.tolerance << ")\n";
    for (const auto& e : rep.checks) {
        os << "  [" << e.status << "]";
        for (std::size_t k = e.status.size(); k < 14; ++k) os << ' ';
        os << e.id;
        for (std::size_t k = e.id.size(); k < 34; ++k) os << ' ';
        if (e.status == "skip") {
            os << e.reason;
        } else {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2e", e.normalized);
            os << buf;
            if (!e.reason.empty()) os << "  (" << e.reason << ")";
        }
        os << "\n";
    }
    os << rep.count("pass") << " passed, " << rep.count("fail") << " failed, "
       << rep.count("skip") << " skipped, " << rep.count("indeterminate")
       << " informational\n";
    return os.str();
}

} // namespace sv
