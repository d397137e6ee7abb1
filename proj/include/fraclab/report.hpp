#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fraclab/convergence.hpp"

namespace fraclab {

/// CSV body of a study report: header row, one row per level.
std::string report_csv(const ConvergenceReport& rep);

/// Human-readable verdict block.
std::string report_summary(const ConvergenceReport& rep);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Static SVG line plot of the series (shared axes, legend, log-free).
std::string svg_plot(const std::string& title, std::span<const PlotSeries> series);

PlotSeries report_series(const ConvergenceReport& rep, const std::string& column);

/// FNV-1a 64-bit content digest used by the run manifest.
std::uint64_t fnv1a(std::string_view data);

/// Write-temp-then-rename so partial files never appear under the final name.
void atomic_write(const std::filesystem::path& path, const std::string& content);

struct ManifestEntry {
    std::string file;
    std::uint64_t digest = 0;
    std::size_t bytes = 0;
};

struct RunManifest {
    std::string tool_version;
    std::string config_echo;   // canonical config with every default materialized
    std::uint64_t config_hash = 0;
    std::vector<ManifestEntry> files;
    std::vector<std::pair<std::string, double>> timings_seconds;
    std::vector<std::string> errors;

    /// Register a file: writes it atomically under dir and records the digest.
    void emit(const std::filesystem::path& dir, const std::string& name,
              const std::string& content);

    std::string to_json() const;
};

}  // namespace fraclab
