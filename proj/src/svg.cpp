#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "rrbias/errors.hpp"
#include "rrbias/map_io.hpp"

namespace rrbias {
namespace {

constexpr double kClip = 2.0;  // colour scale saturates at |log RR| = 2
constexpr double kLeft = 70.0;
constexpr double kTop = 50.0;
constexpr double kPanel = 360.0;
constexpr double kPanelGap = 90.0;
constexpr double kLegendX = kLeft + kPanel + 30.0;
constexpr double kWidth = kLegendX + 190.0;
constexpr double kHeight = kTop + 2.0 * kPanel + kPanelGap + 70.0;

struct Rgb {
  int r, g, b;
};

constexpr Rgb kNegative{33, 102, 172};
constexpr Rgb kMidpoint{247, 247, 247};
constexpr Rgb kPositive{178, 24, 43};
constexpr Rgb kUndefined{189, 189, 189};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

Rgb mix(Rgb a, Rgb b, double f) {
  auto lerp = [f](int x, int y) {
    return static_cast<int>(std::lround(x + (y - x) * f));
  };
  return {lerp(a.r, b.r), lerp(a.g, b.g), lerp(a.b, b.b)};
}

Rgb diverging(double v) {
  if (std::isnan(v)) return kUndefined;
  const double f = std::clamp(v / kClip, -1.0, 1.0);
  return f < 0.0 ? mix(kMidpoint, kNegative, -f) : mix(kMidpoint, kPositive, f);
}

const char* category_colour(Direction d) {
  switch (d) {
    case Direction::kUnbiased: return "#d9d9d9";
    case Direction::kBiased: return "#d73027";
    case Direction::kNullConsistent: return "#ffffff";
    case Direction::kIndeterminate: return "#fee090";
  }
  return "#000000";
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::fabs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

class Canvas {
 public:
  void add(const std::string& s) {
    body_ += s;
    body_ += '\n';
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& extra = "") {
    add("<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
        num(h) + "\" fill=\"" + fill + "\"" + extra + "/>");
  }

  void text(double x, double y, const std::string& s, const std::string& extra = "") {
    add("<text x=\"" + num(x) + "\" y=\"" + num(y) + "\"" + extra + ">" + s + "</text>");
  }

  const std::string& body() const { return body_; }

 private:
  std::string body_;
};

// Axis ticks at both ends and at zero when it lies inside the range.
void axes(Canvas& c, const MapResult& map, double top) {
  const GridSpec& g = map.grid;
  const std::size_t nb = g.beta_count(), ng = g.gamma_count();
  const double cw = kPanel / static_cast<double>(nb);
  const double ch = kPanel / static_cast<double>(ng);

  c.rect(kLeft, top, kPanel, kPanel, "none", " stroke=\"#000000\" stroke-width=\"1\"");

  auto beta_ticks = std::vector<std::size_t>{0, nb - 1};
  auto gamma_ticks = std::vector<std::size_t>{0, ng - 1};
  for (std::size_t i = 0; i < nb; ++i) {
    if (std::fabs(g.beta_at(i)) < 1e-9 * std::max(1.0, g.beta_step)) beta_ticks.push_back(i);
  }
  for (std::size_t i = 0; i < ng; ++i) {
    if (std::fabs(g.gamma_at(i)) < 1e-9 * std::max(1.0, g.gamma_step)) gamma_ticks.push_back(i);
  }
  std::sort(beta_ticks.begin(), beta_ticks.end());
  beta_ticks.erase(std::unique(beta_ticks.begin(), beta_ticks.end()), beta_ticks.end());
  std::sort(gamma_ticks.begin(), gamma_ticks.end());
  gamma_ticks.erase(std::unique(gamma_ticks.begin(), gamma_ticks.end()), gamma_ticks.end());

  for (std::size_t i : beta_ticks) {
    const double x = kLeft + (static_cast<double>(i) + 0.5) * cw;
    c.add("<line x1=\"" + num(x) + "\" y1=\"" + num(top + kPanel) + "\" x2=\"" + num(x) +
          "\" y2=\"" + num(top + kPanel + 5) + "\" stroke=\"#000000\"/>");
    c.text(x, top + kPanel + 18, tick_label(g.beta_at(i)), " text-anchor=\"middle\"");
  }
  for (std::size_t i : gamma_ticks) {
    const double y = top + (static_cast<double>(ng - 1 - i) + 0.5) * ch;
    c.add("<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft) +
          "\" y2=\"" + num(y) + "\" stroke=\"#000000\"/>");
    c.text(kLeft - 8, y + 4, tick_label(g.gamma_at(i)), " text-anchor=\"end\"");
  }
  c.text(kLeft + kPanel / 2, top + kPanel + 36, "β", " text-anchor=\"middle\" font-size=\"14\"");
  c.text(kLeft - 45, top + kPanel / 2, "γ", " text-anchor=\"middle\" font-size=\"14\"");
}

void triangle(Canvas& c, double cx, double cy, double r, bool up) {
  const double s = up ? -1.0 : 1.0;
  c.add("<polygon points=\"" + num(cx) + "," + num(cy + s * r) + " " + num(cx - r) + "," +
        num(cy - s * r) + " " + num(cx + r) + "," + num(cy - s * r) +
        "\" fill=\"#000000\" class=\"" + (up ? "over" : "under") + "\"/>");
}

}  // namespace

std::string render_heatmap_svg(const MapResult& map) {
  const GridSpec& g = map.grid;
  const std::size_t nb = g.beta_count(), ng = g.gamma_count();
  if (map.cells.size() != nb * ng) throw Error("svg: map cells do not cover the grid");
  const double cw = kPanel / static_cast<double>(nb);
  const double ch = kPanel / static_cast<double>(ng);
  const double top1 = kTop;
  const double top2 = kTop + kPanel + kPanelGap;

  Canvas c;
  c.text(kLeft, top1 - 12, "log RR", " font-size=\"14\"");
  c.text(kLeft, top2 - 12, "direction", " font-size=\"14\"");

  c.add("<g class=\"logrr\">");
  for (std::size_t ib = 0; ib < nb; ++ib) {
    for (std::size_t ig = 0; ig < ng; ++ig) {
      const CellResult& cell = map.at(ib, ig);
      const double x = kLeft + static_cast<double>(ib) * cw;
      const double y = top1 + static_cast<double>(ng - 1 - ig) * ch;
      c.rect(x, y, cw, ch, hex(diverging(cell.mean_log_rr)));
    }
  }
  // Over/under markers go on top of all cells.
  for (std::size_t ib = 0; ib < nb; ++ib) {
    for (std::size_t ig = 0; ig < ng; ++ig) {
      const double v = map.at(ib, ig).mean_log_rr;
      if (std::isnan(v) || std::fabs(v) <= kClip) continue;
      const double cx = kLeft + (static_cast<double>(ib) + 0.5) * cw;
      const double cy = top1 + (static_cast<double>(ng - 1 - ig) + 0.5) * ch;
      triangle(c, cx, cy, 0.22 * std::min(cw, ch), v > 0.0);
    }
  }
  c.add("</g>");
  axes(c, map, top1);

  c.add("<g class=\"direction\">");
  for (std::size_t ib = 0; ib < nb; ++ib) {
    for (std::size_t ig = 0; ig < ng; ++ig) {
      const CellResult& cell = map.at(ib, ig);
      const double x = kLeft + static_cast<double>(ib) * cw;
      const double y = top2 + static_cast<double>(ng - 1 - ig) * ch;
      c.rect(x, y, cw, ch, category_colour(cell.classification));
    }
  }
  c.add("</g>");
  axes(c, map, top2);

  // Colour bar.
  c.add("<defs><linearGradient id=\"div\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">"
        "<stop offset=\"0\" stop-color=\"" + hex(kNegative) + "\"/>"
        "<stop offset=\"0.5\" stop-color=\"" + hex(kMidpoint) + "\"/>"
        "<stop offset=\"1\" stop-color=\"" + hex(kPositive) + "\"/>"
        "</linearGradient></defs>");
  const double bar_h = 200.0;
  c.rect(kLegendX, top1 + 20, 18, bar_h, "url(#div)", " stroke=\"#000000\"");
  c.text(kLegendX + 24, top1 + 24, "≥ 2");
  c.text(kLegendX + 24, top1 + 24 + bar_h / 2, "0");
  c.text(kLegendX + 24, top1 + 24 + bar_h, "≤ −2");
  triangle(c, kLegendX + 9, top1 + bar_h + 45, 6, true);
  c.text(kLegendX + 24, top1 + bar_h + 49, "above 2 (clipped)");
  triangle(c, kLegendX + 9, top1 + bar_h + 65, 6, false);
  c.text(kLegendX + 24, top1 + bar_h + 69, "below −2 (clipped)");
  c.rect(kLegendX, top1 + bar_h + 79, 18, 12, hex(kUndefined));
  c.text(kLegendX + 24, top1 + bar_h + 89, "undefined");

  double y = top2 + 20;
  for (Direction d : {Direction::kUnbiased, Direction::kBiased, Direction::kNullConsistent,
                      Direction::kIndeterminate}) {
    c.rect(kLegendX, y, 18, 12, category_colour(d), " stroke=\"#000000\"");
    c.text(kLegendX + 24, y + 11, to_string(d));
    y += 22;
  }

  const std::string fp = fingerprint_hex(map.fingerprint);
  c.text(kLeft, kHeight - 20,
         std::string("mode ") + to_string(map.mode) + "  seed " + std::to_string(map.master_seed) +
             "  fingerprint " + fp,
         " font-size=\"10\" class=\"fingerprint\"");

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<metadata>rrbias " + std::string(kToolVersion) + " fingerprint=" + fp + " mode=" +
         to_string(map.mode) + " seed=" + std::to_string(map.master_seed) + "</metadata>\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" fill=\"#ffffff\"/>\n";
  out += c.body();
  out += "</svg>\n";
  return out;
}

void write_heatmap_svg(const MapResult& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << render_heatmap_svg(map);
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace rrbias
