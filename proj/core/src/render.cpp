#include "saliency/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace saliency {

namespace {

struct Grid {
    std::size_t h = 0, w = 0;
    std::vector<double> v;
};

// Channel-sum reduction to a 2-D grid; rank-1 maps render as a single row.
Grid reduce_to_grid(const SaliencyMap& map) {
    const Tensor& t = map.scores;
    Grid g;
    if (t.rank() == 1) {
        g.h = 1;
        g.w = t.shape[0];
        g.v = t.data;
    } else if (t.rank() == 2) {
        g.h = t.shape[0];
        g.w = t.shape[1];
        g.v = t.data;
    } else if (t.rank() == 3) {
        const std::size_t ch = t.shape[0];
        g.h = t.shape[1];
        g.w = t.shape[2];
        g.v.assign(g.h * g.w, 0.0);
        for (std::size_t c = 0; c < ch; ++c) {
            for (std::size_t i = 0; i < g.h * g.w; ++i) {
                g.v[i] += t.data[c * g.h * g.w + i];
            }
        }
    } else {
        throw Error("render: cannot reduce rank-" + std::to_string(t.rank()) + " map to image");
    }
    return g;
}

unsigned char shade(double magnitude, double max_abs) {
    const long s = std::lround(255.0 * magnitude / max_abs);
    return static_cast<unsigned char>(255 - std::clamp(s, 0L, 255L));
}

} // namespace

void render_heatmap(const SaliencyMap& map, HeatmapStyle style, const std::string& path) {
    ensure_finite(map.scores, "render_heatmap");
    const Grid grid = reduce_to_grid(map);
    double max_abs = 0.0;
    for (double v : grid.v) max_abs = std::max(max_abs, std::abs(v));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("render: cannot open " + path + " for writing");

    if (style == HeatmapStyle::Diverging) {
        out << "P6\n" << grid.w << " " << grid.h << "\n255\n";
        std::vector<unsigned char> rgb(grid.v.size() * 3, 255);
        if (max_abs > 0.0) {
            for (std::size_t i = 0; i < grid.v.size(); ++i) {
                const double v = grid.v[i];
                if (v > 0.0) {
                    const unsigned char g = shade(v, max_abs);
                    rgb[3 * i + 1] = g;
                    rgb[3 * i + 2] = g;
                } else if (v < 0.0) {
                    const unsigned char g = shade(-v, max_abs);
                    rgb[3 * i + 0] = g;
                    rgb[3 * i + 1] = g;
                }
            }
        }
        out.write(reinterpret_cast<const char*>(rgb.data()),
                  static_cast<std::streamsize>(rgb.size()));
    } else {
        out << "P5\n" << grid.w << " " << grid.h << "\n255\n";
        std::vector<unsigned char> gray(grid.v.size(), 255);
        if (max_abs > 0.0) {
            for (std::size_t i = 0; i < grid.v.size(); ++i) {
                gray[i] = shade(std::abs(grid.v[i]), max_abs);
            }
        }
        out.write(reinterpret_cast<const char*>(gray.data()),
                  static_cast<std::streamsize>(gray.size()));
    }
    if (!out) throw Error("render: write failed for " + path);
}

void write_theory_svg(const std::vector<std::pair<double, TheoryResult>>& rows,
                      const std::string& path) {
    if (rows.empty()) throw Error("render: no rows to plot");
    const double width = 640, height = 420, margin = 60;

    double x_lo = rows.front().first, x_hi = rows.front().first;
    double y_lo = 0.0, y_hi = 0.0;
    for (const auto& [delta, r] : rows) {
        x_lo = std::min(x_lo, delta);
        x_hi = std::max(x_hi, delta);
        y_lo = std::min({y_lo, r.c1.mean - 3 * r.c1.stderr_, r.c2.mean - 3 * r.c2.stderr_});
        y_hi = std::max({y_hi, r.c1.mean + 3 * r.c1.stderr_, r.c2.mean + 3 * r.c2.stderr_});
    }
    if (x_hi == x_lo) x_hi = x_lo + 1.0;
    if (y_hi == y_lo) y_hi = y_lo + 1.0;

    auto px = [&](double x) { return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin); };
    auto py = [&](double y) {
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin);
    };

    std::ofstream out(path);
    if (!out) throw Error("render: cannot open " + path + " for writing");
    out.precision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
        << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";

    const char* colors[2] = {"#c0392b", "#2c3e9e"};
    for (int series = 0; series < 2; ++series) {
        out << "<polyline fill=\"none\" stroke=\"" << colors[series] << "\" stroke-width=\"2\" points=\"";
        for (const auto& [delta, r] : rows) {
            const TheoryStat& s = series == 0 ? r.c1 : r.c2;
            out << px(delta) << "," << py(s.mean) << " ";
        }
        out << "\"/>\n";
        for (const auto& [delta, r] : rows) {
            const TheoryStat& s = series == 0 ? r.c1 : r.c2;
            out << "<line x1=\"" << px(delta) << "\" y1=\"" << py(s.mean - s.stderr_)
                << "\" x2=\"" << px(delta) << "\" y2=\"" << py(s.mean + s.stderr_)
                << "\" stroke=\"" << colors[series] << "\"/>\n";
        }
    }
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - margin / 3
        << "\" text-anchor=\"middle\">delta</text>\n";
    out << "<text x=\"" << width - margin << "\" y=\"" << margin / 2
        << "\" text-anchor=\"end\" fill=\"" << colors[0] << "\">c1</text>\n";
    out << "<text x=\"" << width - margin << "\" y=\"" << margin / 2 + 18
        << "\" text-anchor=\"end\" fill=\"" << colors[1] << "\">c2</text>\n";
    out << "</svg>\n";
}

} // namespace saliency
