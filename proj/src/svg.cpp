#include "microdim/svg.hpp"

#include "microdim/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace microdim::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!std::isfinite(lo)) lo = 0, hi = 1;
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.04 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

class Canvas {
public:
    Canvas(Range x, Range y, const Axes& axes) : x_(x), y_(y) {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        out_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out_ << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(axes.title)
             << "</text>\n";
        out_ << "<text x=\"" << kLeft + plot_w() / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
             << escape(axes.x_label) << "</text>\n";
        out_ << "<text transform=\"translate(16," << kTop + plot_h() / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
             << escape(axes.y_label) << "</text>\n";
        out_ << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w() << "\" height=\"" << plot_h()
             << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int t = 0; t <= 5; ++t) {
            const double xv = x_.lo + (x_.hi - x_.lo) * t / 5.0;
            const double yv = y_.lo + (y_.hi - y_.lo) * t / 5.0;
            out_ << "<text x=\"" << px(xv) << "\" y=\"" << kTop + plot_h() + 16 << "\" text-anchor=\"middle\">" << num(xv)
                 << "</text>\n";
            out_ << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num(yv)
                 << "</text>\n";
        }
    }

    double px(double v) const { return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * plot_w(); }
    double py(double v) const { return kTop + plot_h() - (v - y_.lo) / (y_.hi - y_.lo) * plot_h(); }
    std::ostringstream& out() { return out_; }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    static double plot_w() { return kWidth - kLeft - kRight; }
    static double plot_h() { return kHeight - kTop - kBottom; }

    Range x_, y_;
    std::ostringstream out_;
};

// blue -> red ramp for t in [0, 1]
std::string ramp(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(30 + 200 * t));
    const int b = static_cast<int>(std::lround(230 - 200 * t));
    std::ostringstream os;
    os << "rgb(" << r << ",60," << b << ")";
    return os.str();
}

} // namespace

std::string line_plot(const std::vector<Series>& series, const Axes& axes) {
    Range xr, yr;
    for (const auto& s : series) {
        for (double v : s.x) xr.add(v);
        for (double v : s.y) yr.add(v);
    }
    xr.finish();
    yr.finish();
    Canvas c(xr, yr, axes);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = kPalette[i % std::size(kPalette)];
        c.out() << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            if (std::isfinite(s.y[k])) c.out() << c.px(s.x[k]) << ',' << c.py(s.y[k]) << ' ';
        }
        c.out() << "\"/>\n";
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            if (!std::isfinite(s.y[k])) continue;
            c.out() << "<circle cx=\"" << c.px(s.x[k]) << "\" cy=\"" << c.py(s.y[k]) << "\" r=\"3\" fill=\"" << color
                    << "\"/>\n";
        }
        c.out() << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 16 + 15 * static_cast<double>(i) << "\" fill=\""
                << color << "\">" << escape(s.label) << "</text>\n";
    }
    return c.finish();
}

std::string scatter(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& color,
                    const Axes& axes) {
    Range xr, yr, cr;
    for (double v : x) xr.add(v);
    for (double v : y) yr.add(v);
    for (double v : color) cr.add(v);
    xr.finish();
    yr.finish();
    Canvas c(xr, yr, axes);
    const bool shaded = !color.empty() && std::isfinite(cr.lo) && cr.hi > cr.lo;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        const std::string fill = shaded ? ramp((color[i] - cr.lo) / (cr.hi - cr.lo)) : std::string(kPalette[0]);
        c.out() << "<circle cx=\"" << c.px(x[i]) << "\" cy=\"" << c.py(y[i]) << "\" r=\"2.2\" fill=\"" << fill
                << "\"/>\n";
    }
    return c.finish();
}

std::string histogram(const std::vector<double>& edges, const std::vector<double>& counts, const Axes& axes) {
    Range xr, yr;
    for (double e : edges) xr.add(e);
    yr.add(0.0);
    for (double v : counts) yr.add(v);
    xr.finish();
    yr.finish();
    Canvas c(xr, yr, axes);
    for (std::size_t i = 0; i < counts.size() && i + 1 < edges.size(); ++i) {
        const double x0 = c.px(edges[i]), x1 = c.px(edges[i + 1]);
        const double y0 = c.py(counts[i]), base = c.py(0.0);
        c.out() << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << std::max(x1 - x0, 0.5) << "\" height=\""
                << std::max(base - y0, 0.0) << "\" fill=\"" << kPalette[0] << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
    return c.finish();
}

} // namespace microdim::svg
