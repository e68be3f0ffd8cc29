#include "rsflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace rsflow {

namespace {

constexpr double kWidth = 640.0;
constexpr double kPanelHeight = 280.0;
constexpr double kMargin = 56.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!(lo <= hi)) lo = 0.0, hi = 1.0;
        if (hi == lo) hi = lo + 1.0;
    }
};

// One panel with axes, tick labels at the ends and a polyline through (xs, ys).
std::string panel(const std::vector<double>& xs, const std::vector<double>& ys, double top, const std::string& xlabel,
                  const std::string& ylabel, const std::string& colour, bool log_y) {
    Range rx, ry;
    std::vector<double> yv(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
        yv[i] = log_y ? (ys[i] > 0.0 ? std::log10(ys[i]) : std::numeric_limits<double>::quiet_NaN()) : ys[i];
        rx.add(xs[i]);
        ry.add(yv[i]);
    }
    rx.settle();
    ry.settle();
    const double x0 = kMargin, x1 = kWidth - 16.0;
    const double y0 = top + kPanelHeight - 40.0, y1 = top + 16.0;
    auto px = [&](double v) { return x0 + (v - rx.lo) / (rx.hi - rx.lo) * (x1 - x0); };
    auto py = [&](double v) { return y0 - (v - ry.lo) / (ry.hi - ry.lo) * (y0 - y1); };

    std::string s;
    s += "<rect x=\"" + num(x0) + "\" y=\"" + num(y1) + "\" width=\"" + num(x1 - x0) + "\" height=\"" +
         num(y0 - y1) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    s += "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (std::isfinite(yv[i]) && std::isfinite(xs[i])) s += num(px(xs[i])) + "," + num(py(yv[i])) + " ";
    s += "\"/>\n";
    auto ytick = [&](double v) { return log_y ? label(std::pow(10.0, v)) : label(v); };
    s += "<text x=\"" + num(x0) + "\" y=\"" + num(y0 + 16) + "\" font-size=\"11\">" + label(rx.lo) + "</text>\n";
    s += "<text x=\"" + num(x1) + "\" y=\"" + num(y0 + 16) + "\" font-size=\"11\" text-anchor=\"end\">" +
         label(rx.hi) + "</text>\n";
    s += "<text x=\"" + num(x0 - 4) + "\" y=\"" + num(y0) + "\" font-size=\"11\" text-anchor=\"end\">" +
         ytick(ry.lo) + "</text>\n";
    s += "<text x=\"" + num(x0 - 4) + "\" y=\"" + num(y1 + 10) + "\" font-size=\"11\" text-anchor=\"end\">" +
         ytick(ry.hi) + "</text>\n";
    s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(y0 + 30) + "\" font-size=\"12\" text-anchor=\"middle\">" +
         escape(xlabel) + "</text>\n";
    s += "<text x=\"14\" y=\"" + num((y0 + y1) / 2) + "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
         num((y0 + y1) / 2) + ")\">" + escape(ylabel) + "</text>\n";
    return s;
}

std::string document(double height, const std::string& title, const std::string& body) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(height) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) + "\">\n<rect width=\"100%\" height=\"100%\" "
           "fill=\"white\"/>\n<text x=\"" + num(kWidth / 2) + "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">" +
           escape(title) + "</text>\n" + body + "</svg>\n";
}

}  // namespace

std::string profile_svg(const WarpedMetric& g, const std::string& title) {
    auto s = arclength(g);
    std::vector<double> psi = g.psi;
    if (!g.grid.closed()) {
        s.push_back(total_length(g));
        psi.push_back(g.psi.front());
    }
    return document(kPanelHeight + 24, title + " (t = " + label(g.time) + ")",
                    panel(s, psi, 24, "s", "psi", "#1f5fa8", false));
}

std::string summary_svg(const std::vector<StepDiagnostics>& rows, const std::string& title) {
    std::vector<double> t, min_psi, max_k;
    for (const auto& d : rows) {
        t.push_back(d.t);
        min_psi.push_back(d.min_psi);
        max_k.push_back(d.max_k);
    }
    return document(2 * kPanelHeight + 24, title,
                    panel(t, min_psi, 24, "t", "min psi", "#1f5fa8", false) +
                        panel(t, max_k, 24 + kPanelHeight, "t", "max |K| (log)", "#b03a2e", true));
}

}  // namespace rsflow
