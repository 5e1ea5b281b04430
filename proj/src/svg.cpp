#include "hdp/svg.hpp"

#include "hdp/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace hdp {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

}  // namespace

std::string render_svg(const MazeMap& map, const std::vector<PlotPanel>& panels,
                       double pixels_per_cell) {
    if (panels.empty()) throw ConfigError("render_svg: no panels");
    const double scale = pixels_per_cell / map.cell_size;
    const double panel_w = map.width * map.cell_size * scale;
    const double panel_h = map.height * map.cell_size * scale;
    const double margin = 8.0;
    const double title_h = 18.0;
    const double total_w = panels.size() * (panel_w + margin) + margin;
    const double total_h = panel_h + 2 * margin + title_h;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(total_w) << "\" height=\""
        << fmt(total_h) << "\" viewBox=\"0 0 " << fmt(total_w) << " " << fmt(total_h) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const PlotPanel& panel = panels[p];
        const double ox = margin + p * (panel_w + margin);
        const double oy = margin + title_h;
        auto wx = [&](double x) { return ox + x * scale; };
        // SVG y grows downward; flip so world y grows upward.
        auto wy = [&](double y) { return oy + panel_h - y * scale; };

        if (!panel.title.empty())
            out << "<text x=\"" << fmt(ox) << "\" y=\"" << fmt(margin + 12.0)
                << "\" font-family=\"monospace\" font-size=\"12\">" << panel.title << "</text>\n";

        for (int cy = 0; cy < map.height; ++cy)
            for (int cx = 0; cx < map.width; ++cx) {
                const bool wall = map.occupied(cx, cy);
                out << "<rect x=\"" << fmt(wx(cx * map.cell_size)) << "\" y=\""
                    << fmt(wy((cy + 1) * map.cell_size)) << "\" width=\""
                    << fmt(map.cell_size * scale) << "\" height=\"" << fmt(map.cell_size * scale)
                    << "\" fill=\"" << (wall ? "#37474f" : "#eceff1")
                    << "\" stroke=\"#b0bec5\" stroke-width=\"0.5\"/>\n";
            }

        if (panel.trajectory != nullptr && panel.trajectory->rows() > 0) {
            out << "<polyline fill=\"none\" stroke=\"#1565c0\" stroke-width=\"2\" points=\"";
            for (Eigen::Index t = 0; t < panel.trajectory->rows(); ++t)
                out << fmt(wx((*panel.trajectory)(t, 0))) << ","
                    << fmt(wy((*panel.trajectory)(t, 1))) << " ";
            out << "\"/>\n";
        }

        for (const Eigen::Vector2d& w : panel.waypoints)
            out << "<circle cx=\"" << fmt(wx(w.x())) << "\" cy=\"" << fmt(wy(w.y()))
                << "\" r=\"4\" fill=\"#ff8f00\" fill-opacity=\"0.85\"/>\n";

        if (panel.mark_endpoints) {
            out << "<circle cx=\"" << fmt(wx(panel.start.x())) << "\" cy=\""
                << fmt(wy(panel.start.y())) << "\" r=\"5\" fill=\"#2e7d32\"/>\n";
            out << "<circle cx=\"" << fmt(wx(panel.goal.x())) << "\" cy=\""
                << fmt(wy(panel.goal.y())) << "\" r=\"5\" fill=\"#c62828\"/>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

void write_svg(const std::string& svg, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("svg: cannot open for writing: " + path);
    out << svg;
}

}  // namespace hdp
