#include "eft/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace eft {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
};

std::string cell_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();  // shortest round-trip representation, deterministic
}

void write_table(const Table& table, const std::filesystem::path& path, OutputFormat format) {
    std::ofstream out(path);
    if (format == OutputFormat::Csv) {
        for (std::size_t i = 0; i < table.columns.size(); ++i) {
            out << (i ? "," : "") << table.columns[i];
        }
        out << "\n";
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << (i ? "," : "") << cell_text(row[i]);
            }
            out << "\n";
        }
    } else {
        json records = json::array();
        for (const auto& row : table.rows) {
            json rec;
            for (std::size_t i = 0; i < row.size(); ++i) rec[table.columns[i]] = row[i];
            records.push_back(std::move(rec));
        }
        out << records.dump(2) << "\n";
    }
}

Table three_peak_table(const json& results) {
    Table t;
    t.columns = {"theta_deg", "slot", "time_ns", "probability_analytic", "count", "fraction"};
    const char* slots[3] = {"early", "central", "late"};
    for (const auto& run : results.at("runs")) {
        for (int k = 0; k < 3; ++k) {
            t.rows.push_back({run.at("theta_deg"), slots[k], run.at("times_ns")[k],
                              run.at("analytic_probabilities")[k], run.at("counts")[k],
                              run.at("fractions")[k]});
        }
    }
    return t;
}

Table envelope_table(const json& results) {
    Table t;
    t.columns = {"delta_um", "visibility"};
    for (const auto& p : results.at("curve")) t.rows.push_back({p[0], p[1]});
    return t;
}

Table sweep_table(const json& results) {
    Table t;
    t.columns = {"fiber_m",  "input_state",        "channel_error_rate", "theta_deg",
                 "efficiency_analytic", "efficiency_mc", "error_analytic", "error_mc",
                 "kept",     "photons"};
    for (const auto& row : results.at("table")) {
        t.rows.push_back({row.at("fiber_m"), row.at("input_state"),
                          row.at("channel_error_rate"), row.at("theta_deg"),
                          row.at("efficiency_analytic"), row.at("efficiency_mc"),
                          row.at("error_analytic"), row.at("error_mc"), row.at("kept"),
                          row.at("photons")});
    }
    return t;
}

Table trace_table(const json& trace) {
    Table t;
    t.columns = {"time_s", "phase_error_rad", "error_rate"};
    for (const auto& s : trace.at("samples")) t.rows.push_back({s[0], s[1], s[2]});
    return t;
}

Table chsh_table(const json& results) {
    Table t;
    t.columns = {"repetition", "eft_enabled", "S", "sigma_S", "mean_efficiency"};
    for (const auto& rec : results.at("records")) {
        t.rows.push_back({rec.at("repetition"), rec.at("eft_enabled"), rec.at("S"),
                          rec.at("sigma_S"), rec.at("mean_efficiency")});
    }
    return t;
}

// ---------------------------------------------------------------------------
// Minimal SVG charts
// ---------------------------------------------------------------------------

constexpr int kW = 640, kH = 400;
constexpr int kMargin = 50;

struct Scale {
    double xmin, xmax, ymin, ymax;
    double px(double x) const {
        return kMargin + (x - xmin) / (xmax - xmin) * (kW - 2 * kMargin);
    }
    double py(double y) const {
        return kH - kMargin - (y - ymin) / (ymax - ymin) * (kH - 2 * kMargin);
    }
};

void svg_open(std::ostream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << title << "</text>\n";
}

void svg_axes(std::ostream& out, const Scale& s, const std::string& xlabel,
              const std::string& ylabel) {
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\"" << kW - kMargin
        << "\" y2=\"" << kH - kMargin << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
        << "\" y2=\"" << kH - kMargin << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10
        << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
    out << "<text x=\"15\" y=\"" << kH / 2 << "\" font-size=\"12\" text-anchor=\"middle\" "
        << "transform=\"rotate(-90 15 " << kH / 2 << ")\">" << ylabel << "</text>\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", s.xmin);
    out << "<text x=\"" << kMargin << "\" y=\"" << kH - kMargin + 15
        << "\" font-size=\"10\" text-anchor=\"middle\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.3g", s.xmax);
    out << "<text x=\"" << kW - kMargin << "\" y=\"" << kH - kMargin + 15
        << "\" font-size=\"10\" text-anchor=\"middle\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.3g", s.ymin);
    out << "<text x=\"" << kMargin - 5 << "\" y=\"" << kH - kMargin
        << "\" font-size=\"10\" text-anchor=\"end\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.3g", s.ymax);
    out << "<text x=\"" << kMargin - 5 << "\" y=\"" << kMargin + 4
        << "\" font-size=\"10\" text-anchor=\"end\">" << buf << "</text>\n";
}

void svg_polyline(std::ostream& out, const Scale& s,
                  const std::vector<std::pair<double, double>>& pts, const char* color) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto& [x, y] : pts) out << s.px(x) << "," << s.py(y) << " ";
    out << "\"/>\n";
}

void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<std::pair<std::string,
                                                  std::vector<std::pair<double, double>>>>&
                          series) {
    double xmin = 1e300, xmax = -1e300, ymin = 0.0, ymax = -1e300;
    for (const auto& [name, pts] : series) {
        for (const auto& [x, y] : pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    const Scale s{xmin, xmax, ymin, ymax};
    const char* colors[] = {"#c0392b", "#27ae60", "#2980b9", "#8e44ad", "#d68910", "#16a085"};

    std::ofstream out(path);
    svg_open(out, title);
    svg_axes(out, s, xlabel, ylabel);
    int idx = 0;
    for (const auto& [name, pts] : series) {
        const char* color = colors[idx % 6];
        svg_polyline(out, s, pts, color);
        out << "<text x=\"" << kW - kMargin - 5 << "\" y=\"" << kMargin + 14 * (idx + 1)
            << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << color << "\">" << name
            << "</text>\n";
        ++idx;
    }
    out << "</svg>\n";
}

void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<std::string>& labels,
                     const std::vector<double>& values,
                     const std::vector<double>& reference_lines) {
    double ymax = 0.0;
    for (double v : values) ymax = std::max(ymax, v);
    for (double v : reference_lines) ymax = std::max(ymax, v);
    if (ymax <= 0.0) ymax = 1.0;
    const Scale s{0.0, static_cast<double>(values.size()), 0.0, 1.05 * ymax};

    std::ofstream out(path);
    svg_open(out, title);
    svg_axes(out, s, "", "");
    const double slot = (kW - 2.0 * kMargin) / static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = kMargin + slot * static_cast<double>(i) + 0.15 * slot;
        const double y = s.py(values[i]);
        out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << 0.7 * slot
            << "\" height=\"" << (kH - kMargin - y) << "\" fill=\"#2980b9\"/>\n";
        out << "<text x=\"" << x + 0.35 * slot << "\" y=\"" << kH - kMargin + 15
            << "\" font-size=\"9\" text-anchor=\"middle\">" << labels[i] << "</text>\n";
    }
    for (double ref : reference_lines) {
        const double y = s.py(ref);
        out << "<line x1=\"" << kMargin << "\" y1=\"" << y << "\" x2=\"" << kW - kMargin
            << "\" y2=\"" << y << "\" stroke=\"#7f8c8d\" stroke-dasharray=\"6,4\"/>\n";
    }
    out << "</svg>\n";
}

std::vector<std::pair<double, double>> trace_points(const json& trace, int stride) {
    std::vector<std::pair<double, double>> pts;
    const auto& samples = trace.at("samples");
    for (std::size_t i = 0; i < samples.size(); i += static_cast<std::size_t>(stride)) {
        pts.emplace_back(samples[i][0].get<double>(), samples[i][2].get<double>());
    }
    return pts;
}

void write_svgs(const ExperimentScenario& sc, const RunReport& report,
                const std::filesystem::path& dir) {
    const json& r = report.results;
    switch (sc.kind) {
        case ScenarioKind::ThreePeak: {
            std::vector<std::string> labels;
            std::vector<double> values;
            const char* slots[3] = {"early", "central", "late"};
            for (const auto& run : r.at("runs")) {
                for (int k = 0; k < 3; ++k) {
                    labels.push_back("t=" + std::to_string(
                                         static_cast<int>(run.at("theta_deg").get<double>())) +
                                     " " + slots[k]);
                    values.push_back(run.at("fractions")[k].get<double>());
                }
            }
            write_bar_chart(dir / "histogram.svg", "arrival-time peaks", labels, values, {});
            break;
        }
        case ScenarioKind::EnvelopeScan: {
            std::vector<std::pair<double, double>> pts;
            for (const auto& p : r.at("curve"))
                pts.emplace_back(p[0].get<double>(), p[1].get<double>());
            write_line_chart(dir / "envelope.svg", "interference envelope", "delta (um)",
                             "visibility", {{"visibility", pts}});
            break;
        }
        case ScenarioKind::BfeSweep: {
            std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series;
            const double first_fiber = r.at("table")[0].at("fiber_m").get<double>();
            for (const auto& row : r.at("table")) {
                if (row.at("fiber_m").get<double>() != first_fiber) continue;
                const std::string state = row.at("input_state").get<std::string>();
                auto it = std::find_if(series.begin(), series.end(),
                                       [&](const auto& s) { return s.first == "err " + state; });
                if (it == series.end()) {
                    series.push_back({"err " + state, {}});
                    it = series.end() - 1;
                }
                if (!row.at("error_mc").is_null()) {
                    it->second.emplace_back(row.at("channel_error_rate").get<double>(),
                                            row.at("error_mc").get<double>());
                }
            }
            std::vector<std::pair<double, double>> eff;
            for (const auto& row : r.at("table")) {
                if (row.at("fiber_m").get<double>() != first_fiber) continue;
                if (row.at("input_state") != r.at("table")[0].at("input_state")) continue;
                eff.emplace_back(row.at("channel_error_rate").get<double>(),
                                 row.at("efficiency_mc").get<double>());
            }
            series.push_back({"efficiency", eff});
            write_line_chart(dir / "sweep.svg", "error rates and efficiency after the protocol",
                             "channel error rate", "rate", series);
            break;
        }
        case ScenarioKind::LockRun: {
            const auto& traces = r.at("traces");
            write_line_chart(dir / "lock.svg", "post-selected error rate", "time (s)",
                             "error rate",
                             {{"no protocol", trace_points(traces.at("no_eft"), 10)},
                              {"unlocked", trace_points(traces.at("eft_unlocked"), 10)},
                              {"locked", trace_points(traces.at("eft_locked"), 10)}});
            break;
        }
        case ScenarioKind::Chsh: {
            std::vector<std::string> labels;
            std::vector<double> values;
            for (const auto& rec : r.at("records")) {
                const bool eft = rec.at("eft_enabled").get<bool>();
                labels.push_back(std::string(eft ? "on" : "off") + " r" +
                                 rec.at("repetition").dump());
                values.push_back(rec.at("S").get<double>());
            }
            write_bar_chart(dir / "s_values.svg", "CHSH S per repetition", labels, values,
                            {2.0, 2.0 * std::sqrt(2.0)});
            break;
        }
    }
}

}  // namespace

std::filesystem::path write_outputs(const ExperimentScenario& sc, const RunReport& report,
                                    const std::filesystem::path& out_root,
                                    OutputFormat format, bool svg) {
    const std::filesystem::path dir = out_root / sc.name;
    std::filesystem::create_directories(dir);

    {
        std::ofstream out(dir / "report.json");
        out << report.to_json().dump(2) << "\n";
    }

    const char* ext = (format == OutputFormat::Csv) ? ".csv" : ".json";
    const json& r = report.results;
    switch (sc.kind) {
        case ScenarioKind::ThreePeak:
            write_table(three_peak_table(r), dir / ("histogram" + std::string(ext)), format);
            break;
        case ScenarioKind::EnvelopeScan:
            write_table(envelope_table(r), dir / ("histogram" + std::string(ext)), format);
            break;
        case ScenarioKind::BfeSweep:
            write_table(sweep_table(r), dir / ("histogram" + std::string(ext)), format);
            break;
        case ScenarioKind::LockRun:
            write_table(trace_table(r.at("traces").at("eft_locked")),
                        dir / ("histogram" + std::string(ext)), format);
            write_table(trace_table(r.at("traces").at("no_eft")),
                        dir / ("trace_no_eft" + std::string(ext)), format);
            write_table(trace_table(r.at("traces").at("eft_unlocked")),
                        dir / ("trace_eft_unlocked" + std::string(ext)), format);
            break;
        case ScenarioKind::Chsh:
            write_table(chsh_table(r), dir / ("histogram" + std::string(ext)), format);
            break;
    }

    if (svg) write_svgs(sc, report, dir);
    return dir;
}

}  // namespace eft
