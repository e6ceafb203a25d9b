#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "nvpd/calibration.hpp"
#include "nvpd/dynamics.hpp"
#include "nvpd/model.hpp"

namespace nvpd {

inline constexpr const char* kToolVersion = "0.1.0";

// "<number> <unit>" with the unit matched exactly; throws ValidationError naming the key.
double parse_quantity(const std::string& text, const std::string& expected_unit, const std::string& key);
std::string format_quantity(double v, const std::string& unit);
std::string format_double(double v);

// Preset table ------------------------------------------------------------------------------
std::filesystem::path default_presets_path();
std::map<std::string, RatePreset> load_presets(const std::filesystem::path& file);
RatePreset preset_by_name(const std::string& name, const std::filesystem::path& file = {});

// Config --------------------------------------------------------------------------------------
SimConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
SimConfig load_config(const std::filesystem::path& path);   // "default" loads the shipped default
SimConfig default_config();
std::string config_to_json(const SimConfig& c);             // canonical, pretty-printed
std::uint64_t config_hash(const SimConfig& c, const std::string& extra = {});
std::string hex16(std::uint64_t h);

// Tabular results -----------------------------------------------------------------------------
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

Table observables_table(const std::vector<std::tuple<double, bool, Observables, double>>& rows);
Table sweep_table(const SweepResult& sweep);
Table trajectory_table(const Trajectory& tr);
Table fit_table(const FitResult& fit);

std::string to_csv(const Table& t);
std::string to_json(const Table& t);

enum class OutputFormat { CSV, JSON };

struct RunManifest {
    std::string config_json;
    std::string tool_version = kToolVersion;
    std::string preset_provenance;
    double runtime_s = 0;
    std::vector<std::string> outputs;
};

// Writes one table per named entry as <stem>_<name>.<ext>; returns file names relative to dir.
std::vector<std::string> emit_results(const std::vector<std::pair<std::string, Table>>& tables, OutputFormat fmt,
                                      const std::filesystem::path& dir, const std::string& stem);
std::string write_manifest(const RunManifest& m, const std::filesystem::path& dir, const std::string& stem);
std::string write_text(const std::filesystem::path& dir, const std::string& name, const std::string& content);

// Input files ---------------------------------------------------------------------------------
ExperimentalCurve load_curve(const std::filesystem::path& path, CurveKind kind);
std::vector<std::pair<double, double>> load_spectrum(const std::filesystem::path& path);
std::string fit_result_json(const FitResult& fit);

CurveKind parse_curve_kind(const std::string& s);
const char* to_string(CurveKind k);

} // namespace nvpd
