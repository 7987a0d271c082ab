#pragma once

// Static SVG figure of one run: cell grid, pre-cracks, emergent edges and
// active cells.

#include <cstdio>
#include <sstream>
#include <string>

#include "damage.hpp"
#include "geometry.hpp"
#include "grid.hpp"

namespace msfrac {

struct SvgStyle {
  double width_px = 640.0;
  double margin_px = 16.0;
  double legend_px = 56.0;
};

namespace detail {

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace detail

inline std::string render_svg(const CrackState& state, const DamageReport& report, const Mesh& mesh,
                              const CellLattice& lattice, const SvgStyle& style = {}) {
  using detail::fmt;
  const Domain& d = lattice.domain;
  const double scale = (style.width_px - 2.0 * style.margin_px) / d.width;
  const double plot_h = d.height * scale;
  const double total_h = plot_h + 2.0 * style.margin_px + style.legend_px;
  const auto px = [&](double x) { return style.margin_px + (x - d.origin.x()) * scale; };
  const auto py = [&](double y) { return style.margin_px + (d.origin.y() + d.height - y) * scale; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(style.width_px) << "\" height=\"" << fmt(total_h)
     << "\" viewBox=\"0 0 " << fmt(style.width_px) << " " << fmt(total_h) << "\">\n"
     << "<style>\n"
     << "  .domain { fill: none; stroke: #333333; stroke-width: 1.5; }\n"
     << "  .cell { fill: none; stroke: #cccccc; stroke-width: 0.5; }\n"
     << "  .active { fill: #e6550d; fill-opacity: 0.3; stroke: none; }\n"
     << "  .precrack { stroke: #08519c; stroke-width: 2; stroke-linecap: round; }\n"
     << "  .emergent { stroke: #cb181d; stroke-width: 2; stroke-linecap: round; }\n"
     << "  text { font-family: sans-serif; font-size: 13px; fill: #222222; }\n"
     << "</style>\n";

  os << "<rect class=\"domain\" x=\"" << fmt(px(d.origin.x())) << "\" y=\"" << fmt(py(d.origin.y() + d.height))
     << "\" width=\"" << fmt(d.width * scale) << "\" height=\"" << fmt(plot_h) << "\"/>\n";

  const double side = lattice.epsilon * scale;
  os << "<g id=\"active-cells\">\n";
  for (std::size_t k : report.active) {
    const Vec2 z = lattice.origin(k);
    os << "<rect class=\"active\" x=\"" << fmt(px(z.x())) << "\" y=\"" << fmt(py(z.y() + lattice.epsilon))
       << "\" width=\"" << fmt(side) << "\" height=\"" << fmt(side) << "\"/>\n";
  }
  os << "</g>\n<g id=\"cells\">\n";
  for (std::size_t k = 0; k < lattice.size(); ++k) {
    const Vec2 z = lattice.origin(k);
    os << "<rect class=\"cell\" x=\"" << fmt(px(z.x())) << "\" y=\"" << fmt(py(z.y() + lattice.epsilon))
       << "\" width=\"" << fmt(side) << "\" height=\"" << fmt(side) << "\"/>\n";
  }
  os << "</g>\n";

  const auto edges = [&](const EdgeSet& set, const char* cls, const char* id) {
    os << "<g id=\"" << id << "\">\n";
    for (std::size_t e : set) {
      const Vec2& a = mesh.nodes[mesh.edges[e].nodes[0]];
      const Vec2& b = mesh.nodes[mesh.edges[e].nodes[1]];
      os << "<line class=\"" << cls << "\" x1=\"" << fmt(px(a.x())) << "\" y1=\"" << fmt(py(a.y())) << "\" x2=\""
         << fmt(px(b.x())) << "\" y2=\"" << fmt(py(b.y())) << "\"/>\n";
    }
    os << "</g>\n";
  };
  edges(state.precrack, "precrack", "precracks");
  edges(state.emergent, "emergent", "emergent");

  const double y0 = plot_h + 2.0 * style.margin_px;
  const double x0 = style.margin_px;
  os << "<g id=\"legend\">\n"
     << "<line class=\"precrack\" x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0 + 6) << "\" x2=\"" << fmt(x0 + 24)
     << "\" y2=\"" << fmt(y0 + 6) << "\"/>\n"
     << "<text x=\"" << fmt(x0 + 30) << "\" y=\"" << fmt(y0 + 10) << "\">pre-crack</text>\n"
     << "<line class=\"emergent\" x1=\"" << fmt(x0 + 120) << "\" y1=\"" << fmt(y0 + 6) << "\" x2=\""
     << fmt(x0 + 144) << "\" y2=\"" << fmt(y0 + 6) << "\"/>\n"
     << "<text x=\"" << fmt(x0 + 150) << "\" y=\"" << fmt(y0 + 10) << "\">emergent crack</text>\n"
     << "<rect class=\"legend-active\" fill=\"#e6550d\" fill-opacity=\"0.3\" x=\"" << fmt(x0 + 280) << "\" y=\""
     << fmt(y0) << "\" width=\"14\" height=\"12\"/>\n"
     << "<text x=\"" << fmt(x0 + 300) << "\" y=\"" << fmt(y0 + 10) << "\">active cell</text>\n"
     << "</g>\n";
  os << "<text id=\"caption\" x=\"" << fmt(x0) << "\" y=\"" << fmt(y0 + 36) << "\">eps = " << fmt(report.epsilon)
     << ", l = " << fmt(report.l) << ", M(eps, l) = " << report.m_count << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace msfrac
