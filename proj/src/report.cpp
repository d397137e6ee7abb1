#include "fraclab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "fraclab/error.hpp"

namespace fraclab {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string report_csv(const ConvergenceReport& rep) {
    std::string out;
    for (size_t j = 0; j < rep.columns.size(); ++j) {
        if (j) out += ',';
        out += rep.columns[j];
    }
    out += '\n';
    for (const auto& row : rep.rows) {
        for (size_t j = 0; j < row.size(); ++j) {
            if (j) out += ',';
            out += std::isnan(row[j]) ? "" : fmt(row[j]);
        }
        out += '\n';
    }
    return out;
}

std::string report_summary(const ConvergenceReport& rep) {
    std::string out = "study: " + rep.study + "\n";
    out += std::string("overall: ") + (rep.pass ? "PASS" : "FAIL") + "\n";
    for (const auto& v : rep.verdicts) out += v + "\n";
    return out;
}

PlotSeries report_series(const ConvergenceReport& rep, const std::string& column) {
    const auto it = std::find(rep.columns.begin(), rep.columns.end(), column);
    if (it == rep.columns.end())
        throw ConfigError("report has no column '" + column + "'");
    const size_t j = static_cast<size_t>(it - rep.columns.begin());
    PlotSeries s;
    s.label = column;
    for (const auto& row : rep.rows) {
        if (std::isnan(row[j])) continue;
        s.x.push_back(row[0]);
        s.y.push_back(row[j]);
    }
    return s;
}

std::string svg_plot(const std::string& title, std::span<const PlotSeries> series) {
    const int W = 640, H = 420;
    const int ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (double x : s.x) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
        for (double y : s.y) {
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
    }
    if (ymin > ymax) {
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + (std::abs(ymin) > 0 ? std::abs(ymin) : 1.0);

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                            "#8c564b", "#17becf", "#7f7f7f"};
    std::string svg;
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\">\n",
                  W, H, W, H);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%d\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
                  "text-anchor=\"middle\">%s</text>\n",
                  W / 2, title.c_str());
    svg += buf;
    // Axes.
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", ml,
                  H - mb, W - mr, H - mb);
    svg += buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", ml,
                  mt, ml, H - mb);
    svg += buf;
    // Ticks.
    for (int k = 0; k <= 4; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 4.0;
        const double yv = ymin + (ymax - ymin) * k / 4.0;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%d\" font-family=\"sans-serif\" font-size=\"11\" "
                      "text-anchor=\"middle\">%.4g</text>\n",
                      px(xv), H - mb + 18, xv);
        svg += buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%d\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"11\" "
                      "text-anchor=\"end\">%.4g</text>\n",
                      ml - 6, py(yv) + 4, yv);
        svg += buf;
    }
    // Series + legend.
    for (size_t s = 0; s < series.size(); ++s) {
        const auto& ser = series[s];
        const char* color = colors[s % 8];
        std::string pts;
        for (size_t i = 0; i < ser.x.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(ser.x[i]), py(ser.y[i]));
            pts += buf;
        }
        std::snprintf(buf, sizeof buf,
                      "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" "
                      "points=\"%s\"/>\n",
                      color, pts.c_str());
        svg += buf;
        for (size_t i = 0; i < ser.x.size(); ++i) {
            std::snprintf(buf, sizeof buf,
                          "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\"/>\n",
                          px(ser.x[i]), py(ser.y[i]), color);
            svg += buf;
        }
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%d\" y=\"%zu\" font-family=\"sans-serif\" font-size=\"12\" "
                      "fill=\"%s\">%s</text>\n",
                      W - mr - 150, mt + 16 * (s + 1), color, ser.label.c_str());
        svg += buf;
    }
    svg += "</svg>\n";
    return svg;
}

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ConfigError("cannot open '" + tmp.string() + "' for writing");
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os) throw SolverError("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

void RunManifest::emit(const std::filesystem::path& dir, const std::string& name,
                       const std::string& content) {
    std::filesystem::create_directories(dir);
    atomic_write(dir / name, content);
    files.push_back({name, fnv1a(content), content.size()});
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["tool_version"] = tool_version;
    j["config"] = nlohmann::json::parse(config_echo);
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_hash));
    j["config_hash"] = hash;
    auto files_json = nlohmann::json::array();
    for (const auto& f : files) {
        char digest[24];
        std::snprintf(digest, sizeof digest, "%016llx",
                      static_cast<unsigned long long>(f.digest));
        files_json.push_back({{"file", f.file}, {"digest", digest}, {"bytes", f.bytes}});
    }
    j["files"] = files_json;
    auto timings = nlohmann::json::object();
    for (const auto& [k, v] : timings_seconds) timings[k] = v;
    j["timings_seconds"] = timings;
    j["errors"] = errors;
    return j.dump(2) + "\n";
}

}  // namespace fraclab
