#ifndef RELFLOW_SVG_HPP
#define RELFLOW_SVG_HPP

#include <string>
#include <vector>

namespace relflow {

/// Minimal static line plot writer: fixed viewport, axes box, labelled
/// polylines. Output is deterministic for identical inputs.
class SvgPlot {
public:
    SvgPlot(int width = 720, int height = 460);

    void add_curve(const std::vector<double>& xs, const std::vector<double>& ys,
                   const std::string& label, const std::string& color);
    void set_title(const std::string& title) { title_ = title; }

    std::string render() const;
    void write(const std::string& path) const;

private:
    struct Curve {
        std::vector<double> xs, ys;
        std::string label, color;
    };
    int width_, height_;
    std::string title_;
    std::vector<Curve> curves_;
};

} // namespace relflow

#endif
