#include "taskdiff/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace taskdiff {

using nlohmann::json;

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    for (int prec = 1; prec <= 17; ++prec) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return "0";  // unreachable
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write " + tmp);
        f << content;
        f.flush();
        if (!f) throw ConfigError("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ConfigError("cannot rename " + tmp + " to " + path);
}

std::string curve_csv(const ResponseCurve& curve) {
    std::ostringstream os;
    os << "h,psi_h,n_tasks,n_undecided\n";
    for (const auto& [h, pt] : curve.points)
        os << format_double(h) << ',' << format_double(pt.psi) << ',' << pt.n_tasks << ','
           << pt.n_undecided << '\n';
    return os.str();
}

namespace {

struct SvgFrame {
    double x0, x1, y0, y1;  // data ranges
    static constexpr int width = 640, height = 400, margin = 48;

    double px(double x) const {
        return margin + (x - x0) / (x1 > x0 ? x1 - x0 : 1.0) * (width - 2 * margin);
    }
    double py(double y) const {
        return height - margin - (y - y0) / (y1 > y0 ? y1 - y0 : 1.0) * (height - 2 * margin);
    }
};

void svg_header(std::ostringstream& os, const SvgFrame& f, const std::string& title,
                const std::string& x_label, const std::string& y_label) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
       << f.height << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<line x1=\"" << f.margin << "\" y1=\"" << f.height - f.margin << "\" x2=\""
       << f.width - f.margin << "\" y2=\"" << f.height - f.margin
       << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << f.margin << "\" y1=\"" << f.margin << "\" x2=\"" << f.margin
       << "\" y2=\"" << f.height - f.margin << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << f.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
          "font-family=\"monospace\" font-size=\"14\">"
       << title << "</text>\n"
       << "<text x=\"" << f.width / 2 << "\" y=\"" << f.height - 8
       << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">" << x_label
       << "</text>\n"
       << "<text x=\"14\" y=\"" << f.height / 2
       << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\" "
          "transform=\"rotate(-90 14 "
       << f.height / 2 << ")\">" << y_label << "</text>\n";
}

void svg_polyline(std::ostringstream& os, const SvgFrame& f,
                  const std::vector<std::pair<double, double>>& pts,
                  const std::string& color) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) os << format_double(f.px(x)) << ',' << format_double(f.py(y)) << ' ';
    os << "\"/>\n";
    for (const auto& [x, y] : pts)
        os << "<circle cx=\"" << format_double(f.px(x)) << "\" cy=\"" << format_double(f.py(y))
           << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
}

void svg_ticks(std::ostringstream& os, const SvgFrame& f) {
    for (double t : {0.0, 0.5, 1.0}) {
        const double x = f.x0 + t * (f.x1 - f.x0);
        const double y = f.y0 + t * (f.y1 - f.y0);
        os << "<text x=\"" << format_double(f.px(x)) << "\" y=\"" << f.height - f.margin + 16
           << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"10\">"
           << format_double(x) << "</text>\n"
           << "<text x=\"" << f.margin - 6 << "\" y=\"" << format_double(f.py(y) + 3)
           << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">"
           << format_double(y) << "</text>\n";
    }
}

}  // namespace

std::string curve_svg(const ResponseCurve& curve) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [h, pt] : curve.points)
        if (std::isfinite(h)) pts.emplace_back(h, pt.psi);
    SvgFrame f{0, 1, 0, 1};
    if (!pts.empty()) {
        f.x0 = pts.front().first;
        f.x1 = pts.back().first;
        if (f.x1 == f.x0) f.x1 = f.x0 + 1;
    }
    std::ostringstream os;
    svg_header(os, f, "response curve (epsilon=" + format_double(curve.epsilon) + ")",
               "difficulty h (bits)", "psi_h");
    svg_ticks(os, f);
    svg_polyline(os, f, pts, "steelblue");
    os << "</svg>\n";
    return os.str();
}

std::string aggregate_report_json(const std::string& agent_id, double epsilon,
                                  const WeightScheme& w, double value,
                                  const ResponseCurve& per_h) {
    json slices = json::array();
    for (const auto& [h, pt] : per_h.points)
        slices.push_back({{"h", std::isinf(h) ? json("inf") : json(h)},
                          {"psi_h", pt.psi},
                          {"n_tasks", pt.n_tasks},
                          {"n_undecided", pt.n_undecided}});
    json j{{"agent_id", agent_id},
           {"epsilon", epsilon},
           {"weight_scheme", w.name()},
           {"value", value},
           {"per_h", slices},
           {"n_censored", per_h.n_censored}};
    return j.dump(2) + "\n";
}

CodingTable coding_table(const MachineConfig& cfg, int h_max) {
    CodingTable table;
    table.word_size_c = cfg.word_size_c;
    table.base = coding_base(cfg);
    table.decay_ratio = 1.0 - std::ldexp(1.0, -cfg.word_size_c);
    for (int h = cfg.word_size_c; h <= h_max; h += cfg.word_size_c) {
        CodingRow row;
        row.h = h;
        row.exact = coding_pmf(h, cfg);
        row.approx = coding_pmf_approx(h, cfg);
        row.rel_dev = row.exact > 0 ? (row.approx - row.exact) / row.exact : 0.0;
        table.rows.push_back(row);
    }
    return table;
}

std::string coding_csv(const CodingTable& table) {
    std::ostringstream os;
    os << "h,p_exact,p_approx,rel_dev\n";
    for (const CodingRow& r : table.rows)
        os << r.h << ',' << format_double(r.exact) << ',' << format_double(r.approx) << ','
           << format_double(r.rel_dev) << '\n';
    return os.str();
}

std::string coding_svg(const CodingTable& table) {
    std::vector<std::pair<double, double>> exact, approx;
    double ymin = 0.0, ymax = 1.0;
    for (const CodingRow& r : table.rows) {
        const double le = std::log2(r.exact), la = std::log2(r.approx);
        exact.emplace_back(r.h, le);
        approx.emplace_back(r.h, la);
        ymin = std::min({ymin, le, la});
        ymax = std::max({ymax, le, la});
    }
    SvgFrame f{static_cast<double>(table.rows.empty() ? 0 : table.rows.front().h),
               static_cast<double>(table.rows.empty() ? 1 : table.rows.back().h), ymin, ymax};
    if (f.x1 == f.x0) f.x1 = f.x0 + 1;
    std::ostringstream os;
    svg_header(os, f,
               "coding pmf, c=" + std::to_string(table.word_size_c) +
                   " (b=" + format_double(table.base) + ")",
               "length h (bits)", "log2 p(h)");
    svg_ticks(os, f);
    svg_polyline(os, f, exact, "steelblue");
    svg_polyline(os, f, approx, "indianred");
    os << "<text x=\"" << f.width - f.margin << "\" y=\"" << f.margin + 14
       << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\" "
          "fill=\"steelblue\">exact</text>\n"
       << "<text x=\"" << f.width - f.margin << "\" y=\"" << f.margin + 28
       << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\" "
          "fill=\"indianred\">approx</text>\n"
       << "</svg>\n";
    return os.str();
}

std::string verify_report_text(const VerifyReport& report) {
    std::ostringstream os;
    for (const VerifyCheck& c : report.checks)
        os << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    if (!report.warning.empty()) os << "warning: " << report.warning << '\n';
    os << (report.all_passed ? "OK" : "FAILED") << '\n';
    return os.str();
}

}  // namespace taskdiff
