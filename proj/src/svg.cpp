#include "relflow/svg.hpp"
#include "relflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace relflow {

SvgPlot::SvgPlot(int width, int height) : width_(width), height_(height) {}

void SvgPlot::add_curve(const std::vector<double>& xs, const std::vector<double>& ys,
                        const std::string& label, const std::string& color) {
    if (xs.size() != ys.size())
        throw ValidationError("curve needs matching x/y lengths");
    curves_.push_back(Curve{xs, ys, label, color});
}

std::string SvgPlot::render() const {
    const double ml = 56, mr = 16, mt = 36, mb = 40;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
    double y0 = x0, y1 = -x0;
    for (const Curve& c : curves_)
        for (std::size_t i = 0; i < c.xs.size(); ++i) {
            if (!std::isfinite(c.xs[i]) || !std::isfinite(c.ys[i]))
                continue;
            x0 = std::min(x0, c.xs[i]);
            x1 = std::max(x1, c.xs[i]);
            y0 = std::min(y0, c.ys[i]);
            y1 = std::max(y1, c.ys[i]);
        }
    if (!(x1 > x0)) {
        x0 = 0;
        x1 = 1;
    }
    if (!(y1 > y0)) {
        y0 = 0;
        y1 = 1;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    const double pw = width_ - ml - mr, ph = height_ - mt - mb;
    const auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    const auto py = [&](double y) { return mt + (y1 - y) / (y1 - y0) * ph; };

    std::ostringstream os;
    char buf[160];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
       << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                  "stroke=\"#444\"/>\n",
                  ml, mt, pw, ph);
    os << buf;
    if (!title_.empty())
        os << "<text x=\"" << ml << "\" y=\"22\" font-family=\"monospace\" font-size=\"14\">"
           << title_ << "</text>\n";
    // axis tick labels at the corners
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"monospace\" font-size=\"11\">"
                  "%.4g</text>\n",
                  ml - 4, mt + ph + 16, x0);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"monospace\" font-size=\"11\" "
                  "text-anchor=\"end\">%.4g</text>\n",
                  ml + pw, mt + ph + 16, x1);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"monospace\" font-size=\"11\" "
                  "text-anchor=\"end\">%.4g</text>\n",
                  ml - 6, mt + 10, y1);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-family=\"monospace\" font-size=\"11\" "
                  "text-anchor=\"end\">%.4g</text>\n",
                  ml - 6, mt + ph, y0);
    os << buf;

    int legend_row = 0;
    for (const Curve& c : curves_) {
        os << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.4\" points=\"";
        for (std::size_t i = 0; i < c.xs.size(); ++i) {
            if (!std::isfinite(c.xs[i]) || !std::isfinite(c.ys[i]))
                continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(c.xs[i]), py(c.ys[i]));
            os << buf;
        }
        os << "\"/>\n";
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-family=\"monospace\" font-size=\"12\" "
                      "fill=\"%s\">%s</text>\n",
                      ml + pw - 170.0, mt + 16.0 + 16.0 * legend_row, c.color.c_str(),
                      c.label.c_str());
        os << buf;
        ++legend_row;
    }
    os << "</svg>\n";
    return os.str();
}

void SvgPlot::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ValidationError("cannot open output file: " + path);
    out << render();
}

} // namespace relflow
