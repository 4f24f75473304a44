#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "waveflux/asymptotics.hpp"

namespace waveflux {

/// Fully validated experiment description: geometry, physics, numerics and
/// output paths, with schedule-dependent tau-grid defaults.
struct ExperimentConfig {
    ProbeGeometry geometry;
    double T_final = 1.0;
    LambdaSchedule schedule;
    Numerics numerics;
    double tau_min = 0.0, tau_max = 0.0;  // 0 means schedule default
    int tau_points = 16;
    double fit_window_fraction = 0.6;
    std::string csv_path = "sweep.csv";
    std::string report_path = "report.txt";

    /// Tau range with the schedule defaults filled in. The scaled family
    /// keeps tau*lambda^2 = c fixed, so its default range rescales by 1/c to
    /// hold the probe frequency band and the decay exponents comparable.
    std::pair<double, double> tau_range() const {
        double lo = tau_min, hi = tau_max;
        if (lo > 0.0 && hi > 0.0) return {lo, hi};
        switch (schedule.kind) {
            case LambdaSchedule::Kind::Fixed: return {10.0, 50.0};
            case LambdaSchedule::Kind::InvSqrtTau: return {25.0, 225.0};
            case LambdaSchedule::Kind::ScaledInvSqrtTau:
                return {25.0 / schedule.c, 625.0 / schedule.c};
        }
        return {10.0, 50.0};
    }

    std::vector<double> tau_grid() const {
        auto [lo, hi] = tau_range();
        return geometric_grid(lo, hi, tau_points);
    }
};

namespace detail {

struct RawConfig {
    // section -> key -> (value, line number)
    std::map<std::string, std::map<std::string, std::pair<std::string, int>>> data;
};

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline RawConfig parse_sections(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config line " + std::to_string(lineno) +
                                         ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            raw.data[section];
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (section.empty())
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": key '" + key + "' outside any section");
        if (raw.data[section].count(key))
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": duplicate key '" + key + "'");
        raw.data[section][key] = {val, lineno};
    }
    return raw;
}

/// Consumes keys from one section; whatever is left unconsumed is a typo.
class SectionReader {
public:
    SectionReader(RawConfig& raw, std::string name) : name_(std::move(name)) {
        auto it = raw.data.find(name_);
        if (it != raw.data.end()) entries_ = &it->second;
    }

    std::optional<std::string> take(const std::string& key) {
        if (!entries_) return std::nullopt;
        auto it = entries_->find(key);
        if (it == entries_->end()) return std::nullopt;
        std::string v = it->second.first;
        entries_->erase(it);
        return v;
    }

    double take_double(const std::string& key, double fallback) {
        auto v = take(key);
        if (!v) return fallback;
        std::size_t pos = 0;
        double out;
        try {
            out = std::stod(*v, &pos);
        } catch (const std::exception&) {
            throw std::runtime_error("config [" + name_ + "] " + key +
                                     ": not a number: '" + *v + "'");
        }
        if (pos != v->size())
            throw std::runtime_error("config [" + name_ + "] " + key +
                                     ": trailing garbage in '" + *v + "'");
        return out;
    }

    int take_int(const std::string& key, int fallback) {
        double d = take_double(key, fallback);
        int i = (int)std::lround(d);
        if (d != (double)i)
            throw std::runtime_error("config [" + name_ + "] " + key +
                                     ": expected an integer");
        return i;
    }

    void finish() const {
        if (entries_ && !entries_->empty()) {
            const auto& [key, val] = *entries_->begin();
            throw std::runtime_error("config line " + std::to_string(val.second) +
                                     ": unknown key '" + key + "' in [" + name_ + "]");
        }
    }

private:
    std::string name_;
    std::map<std::string, std::pair<std::string, int>>* entries_ = nullptr;
};

}  // namespace detail

/// Parses the sectioned key-value config format. Unknown sections or keys are
/// errors; all omitted values take documented defaults.
inline ExperimentConfig parse_config(const std::string& text) {
    detail::RawConfig raw = detail::parse_sections(text);
    for (const auto& [name, _] : raw.data)
        if (name != "geometry" && name != "physics" && name != "numerics" &&
            name != "output")
            throw std::runtime_error("config: unknown section [" + name + "]");

    ExperimentConfig cfg;

    detail::SectionReader geo(raw, "geometry");
    double r_omega = geo.take_double("r_omega", 1.0);
    double r_cavity = geo.take_double("r_cavity", 0.4);
    double center_z = geo.take_double("source_center_z", 1.5);
    double radius = geo.take_double("source_radius", 0.2);
    geo.finish();
    cfg.geometry = ProbeGeometry::make(r_omega, r_cavity, Ball{center_z, radius});

    detail::SectionReader phy(raw, "physics");
    cfg.T_final = phy.take_double("T_final", 1.0);
    std::string kind = phy.take("schedule").value_or("fixed");
    double lambda = phy.take_double("lambda", 1.0);
    double c = phy.take_double("c", 1.0);
    phy.finish();
    if (!(cfg.T_final > 0.0))
        throw std::runtime_error("config [physics] T_final: must be positive");
    if (kind == "fixed")
        cfg.schedule = LambdaSchedule::fixed(lambda);
    else if (kind == "inv_sqrt_tau")
        cfg.schedule = LambdaSchedule::inv_sqrt_tau();
    else if (kind == "scaled_inv_sqrt_tau")
        cfg.schedule = LambdaSchedule::scaled_inv_sqrt_tau(c);
    else
        throw std::runtime_error(
            "config [physics] schedule: expected fixed | inv_sqrt_tau | "
            "scaled_inv_sqrt_tau, got '" + kind + "'");

    detail::SectionReader num(raw, "numerics");
    cfg.numerics.radial_points = num.take_int("radial_points", 257);
    cfg.numerics.dt_max = num.take_double("dt_max", 0.02);
    cfg.numerics.max_degree = num.take_int("max_degree", 100);
    cfg.numerics.quad_tol = num.take_double("quad_tol", 1e-10);
    cfg.numerics.window_points = num.take_int("window_points", 400);
    cfg.numerics.reference_subtraction =
        num.take_int("reference_subtraction", 0) != 0;
    cfg.tau_min = num.take_double("tau_min", 0.0);
    cfg.tau_max = num.take_double("tau_max", 0.0);
    cfg.tau_points = num.take_int("tau_points", 16);
    cfg.fit_window_fraction = num.take_double("fit_window_fraction", 0.6);
    num.finish();

    detail::SectionReader out(raw, "output");
    cfg.csv_path = out.take("csv_path").value_or(cfg.csv_path);
    cfg.report_path = out.take("report_path").value_or(cfg.report_path);
    out.finish();

    if (cfg.tau_min > 0.0 || cfg.tau_max > 0.0) {
        if (!(cfg.tau_min > 0.0 && cfg.tau_max > cfg.tau_min))
            throw std::runtime_error(
                "config [numerics]: need 0 < tau_min < tau_max when either is set");
    }
    if (cfg.tau_points < 8)
        throw std::runtime_error("config [numerics] tau_points: must be >= 8");
    if (!(cfg.numerics.quad_tol >= 1e-14 && cfg.numerics.quad_tol <= 1e-6))
        throw std::runtime_error(
            "config [numerics] quad_tol: must lie in [1e-14, 1e-6]");
    if (!(cfg.fit_window_fraction > 0.0 && cfg.fit_window_fraction <= 1.0))
        throw std::runtime_error(
            "config [numerics] fit_window_fraction: must lie in (0, 1]");
    if (cfg.numerics.radial_points < 33)
        throw std::runtime_error("config [numerics] radial_points: must be >= 33");
    if (!(cfg.numerics.dt_max > 0.0))
        throw std::runtime_error("config [numerics] dt_max: must be positive");
    if (cfg.numerics.max_degree < 1)
        throw std::runtime_error("config [numerics] max_degree: must be >= 1");
    return cfg;
}

}  // namespace waveflux
