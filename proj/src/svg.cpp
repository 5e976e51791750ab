#include "plasmode/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "plasmode/errors.hpp"

namespace plasmode {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 56.0;

const char* kPalette[] = {"#4878a8", "#c05b4d", "#6a9a58", "#8a6db1", "#b08a3e", "#5aa0a0"};
constexpr int kPaletteSize = 6;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape_text(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

// Linear map from data space to the pixel plot area.
struct Axis {
    double lo, hi, px_lo, px_hi;
    double operator()(double v) const {
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

void pad_range(double& lo, double& hi) {
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    } else {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
}

std::vector<double> ticks(double lo, double hi, int target = 6) {
    const double span = hi - lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * mult >= raw) {
            step = mag * mult;
            break;
        }
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step)
        out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    return out;
}

struct SvgDoc {
    std::ostringstream body;

    void open(const std::string& title) {
        body << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth)
             << "\" height=\"" << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' '
             << num(kHeight) << "\">\n"
             << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
             << "<text x=\"" << num(kWidth / 2)
             << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                "font-size=\"16\" fill=\"#222\">"
             << escape_text(title) << "</text>\n";
    }

    void axes(const Axis& x, const Axis& y, const std::string& x_label,
              const std::string& y_label) {
        body << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kHeight - kBottom)
             << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\"" << num(kHeight - kBottom)
             << "\" stroke=\"#444\"/>\n"
             << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\""
             << num(kLeft) << "\" y2=\"" << num(kHeight - kBottom) << "\" stroke=\"#444\"/>\n";
        for (double t : ticks(x.lo, x.hi)) {
            const double px = x(t);
            body << "<line x1=\"" << num(px) << "\" y1=\"" << num(kHeight - kBottom)
                 << "\" x2=\"" << num(px) << "\" y2=\"" << num(kHeight - kBottom + 5)
                 << "\" stroke=\"#444\"/>\n"
                 << "<text x=\"" << num(px) << "\" y=\"" << num(kHeight - kBottom + 18)
                 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
                    "fill=\"#333\">"
                 << num(t) << "</text>\n";
        }
        for (double t : ticks(y.lo, y.hi)) {
            const double py = y(t);
            body << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py) << "\" x2=\""
                 << num(kLeft) << "\" y2=\"" << num(py) << "\" stroke=\"#444\"/>\n"
                 << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py + 4)
                 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
                    "fill=\"#333\">"
                 << num(t) << "</text>\n";
        }
        if (!x_label.empty())
            body << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\""
                 << num(kHeight - 12)
                 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
                    "fill=\"#222\">"
                 << escape_text(x_label) << "</text>\n";
        if (!y_label.empty())
            body << "<text x=\"18\" y=\"" << num((kTop + kHeight - kBottom) / 2)
                 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
                    "fill=\"#222\" transform=\"rotate(-90 18 "
                 << num((kTop + kHeight - kBottom) / 2) << ")\">" << escape_text(y_label)
                 << "</text>\n";
    }

    void legend(const std::vector<std::string>& labels) {
        double lx = kLeft + 12.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double ly = kTop + 8.0 + 18.0 * static_cast<double>(i);
            body << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" width=\"12\" "
                 << "height=\"12\" fill=\"" << kPalette[i % kPaletteSize]
                 << "\" fill-opacity=\"0.6\"/>\n"
                 << "<text x=\"" << num(lx + 17) << "\" y=\"" << num(ly + 10)
                 << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\">"
                 << escape_text(labels[i]) << "</text>\n";
        }
    }

    void save(const std::filesystem::path& path) {
        body << "</svg>\n";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + path.string());
        out << body.str();
        if (!out.flush()) throw IoError("write failed: " + path.string());
    }
};

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted[0];
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

void svg_histogram_overlay(const std::vector<double>& bin_edges,
                           const std::vector<std::vector<long>>& counts,
                           const std::vector<std::string>& labels, const std::string& title,
                           const std::filesystem::path& path) {
    if (bin_edges.size() < 2) throw InvalidArgument("histogram needs at least one bin");
    if (counts.empty() || counts.size() != labels.size())
        throw InvalidArgument("histogram series and labels must match and be nonempty");
    const std::size_t bins = bin_edges.size() - 1;
    std::vector<std::vector<double>> props(counts.size());
    double ymax = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        if (counts[s].size() != bins) throw InvalidArgument("histogram counts/edges mismatch");
        long total = 0;
        for (long c : counts[s]) total += c;
        props[s].resize(bins);
        for (std::size_t k = 0; k < bins; ++k) {
            props[s][k] = total > 0 ? static_cast<double>(counts[s][k]) /
                                          static_cast<double>(total)
                                    : 0.0;
            ymax = std::max(ymax, props[s][k]);
        }
    }
    if (ymax == 0.0) ymax = 1.0;

    Axis x{bin_edges.front(), bin_edges.back(), kLeft, kWidth - kRight};
    Axis y{0.0, ymax * 1.08, kHeight - kBottom, kTop};

    SvgDoc doc;
    doc.open(title);
    doc.axes(x, y, "outcome value", "proportion");
    for (std::size_t s = 0; s < props.size(); ++s) {
        for (std::size_t k = 0; k < bins; ++k) {
            if (props[s][k] <= 0.0) continue;
            const double x0 = x(bin_edges[k]);
            const double x1 = x(bin_edges[k + 1]);
            const double y1 = y(props[s][k]);
            doc.body << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\""
                     << num(x1 - x0) << "\" height=\"" << num(kHeight - kBottom - y1)
                     << "\" fill=\"" << kPalette[s % kPaletteSize]
                     << "\" fill-opacity=\"0.45\" stroke=\"" << kPalette[s % kPaletteSize]
                     << "\" stroke-width=\"1\"/>\n";
        }
    }
    doc.legend(labels);
    doc.save(path);
}

void svg_boxplot(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                 const std::string& title, const std::string& y_label,
                 const std::filesystem::path& path) {
    if (groups.empty()) throw InvalidArgument("boxplot needs at least one group");
    double lo = groups[0].second.at(0), hi = lo;
    for (const auto& [label, values] : groups) {
        if (values.empty()) throw InvalidArgument("boxplot group '" + label + "' is empty");
        for (double v : values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    pad_range(lo, hi);

    const double n = static_cast<double>(groups.size());
    Axis x{0.0, n, kLeft, kWidth - kRight};
    Axis y{lo, hi, kHeight - kBottom, kTop};

    SvgDoc doc;
    doc.open(title);
    doc.axes(x, y, "", y_label);

    for (std::size_t g = 0; g < groups.size(); ++g) {
        std::vector<double> v = groups[g].second;
        std::sort(v.begin(), v.end());
        const double q1 = quantile(v, 0.25);
        const double q2 = quantile(v, 0.5);
        const double q3 = quantile(v, 0.75);
        const double iqr = q3 - q1;
        double wlo = q1, whi = q3;
        for (double t : v) {
            if (t >= q1 - 1.5 * iqr) {
                wlo = t;
                break;
            }
        }
        for (auto it = v.rbegin(); it != v.rend(); ++it) {
            if (*it <= q3 + 1.5 * iqr) {
                whi = *it;
                break;
            }
        }

        const double cx = x(static_cast<double>(g) + 0.5);
        const double half = 0.28 * (x(1.0) - x(0.0));
        const char* color = kPalette[g % kPaletteSize];

        doc.body << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(wlo)) << "\" x2=\""
                 << num(cx) << "\" y2=\"" << num(y(whi)) << "\" stroke=\"#555\"/>\n";
        for (double w : {wlo, whi})
            doc.body << "<line x1=\"" << num(cx - half / 2) << "\" y1=\"" << num(y(w))
                     << "\" x2=\"" << num(cx + half / 2) << "\" y2=\"" << num(y(w))
                     << "\" stroke=\"#555\"/>\n";
        doc.body << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(y(q3)) << "\" width=\""
                 << num(2 * half) << "\" height=\"" << num(y(q1) - y(q3)) << "\" fill=\""
                 << color << "\" fill-opacity=\"0.5\" stroke=\"" << color << "\"/>\n"
                 << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(y(q2)) << "\" x2=\""
                 << num(cx + half) << "\" y2=\"" << num(y(q2)) << "\" stroke=\"" << color
                 << "\" stroke-width=\"2\"/>\n";
        for (double t : v)
            if (t < q1 - 1.5 * iqr || t > q3 + 1.5 * iqr)
                doc.body << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(y(t))
                         << "\" r=\"2.5\" fill=\"none\" stroke=\"#555\"/>\n";
        doc.body << "<text x=\"" << num(cx) << "\" y=\"" << num(kHeight - kBottom + 34)
                 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
                    "fill=\"#222\">"
                 << escape_text(groups[g].first) << "</text>\n";
    }
    doc.save(path);
}

void svg_line_chart(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                    const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::filesystem::path& path) {
    if (series.empty()) throw InvalidArgument("line chart needs at least one series");
    std::size_t len = 0;
    double lo = series[0].second.at(0), hi = lo;
    for (const auto& [label, values] : series) {
        if (values.empty()) throw InvalidArgument("line series '" + label + "' is empty");
        len = std::max(len, values.size());
        for (double v : values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    pad_range(lo, hi);

    Axis x{1.0, static_cast<double>(std::max<std::size_t>(len, 2)), kLeft, kWidth - kRight};
    Axis y{lo, hi, kHeight - kBottom, kTop};

    SvgDoc doc;
    doc.open(title);
    doc.axes(x, y, x_label, y_label);
    std::vector<std::string> labels;
    for (std::size_t s = 0; s < series.size(); ++s) {
        labels.push_back(series[s].first);
        doc.body << "<polyline fill=\"none\" stroke=\"" << kPalette[s % kPaletteSize]
                 << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].second.size(); ++i) {
            if (i) doc.body << ' ';
            doc.body << num(x(static_cast<double>(i + 1))) << ','
                     << num(y(series[s].second[i]));
        }
        doc.body << "\"/>\n";
    }
    doc.legend(labels);
    doc.save(path);
}

}  // namespace plasmode
