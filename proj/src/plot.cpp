#include "cbfbt/plot.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cbfbt {
namespace {

constexpr double kScale = 14.0;  // px per metre
constexpr double kPad = 30.0;    // px
constexpr int kLegendCap = 10;   // switch events listed per agent

const char* kPalette[] = {"#268bd2", "#d33682", "#859900", "#b58900", "#6c71c4", "#2aa198"};

const char* agent_color(size_t i) { return kPalette[i % (sizeof(kPalette) / sizeof(*kPalette))]; }

struct Mapper {
  double min_x, max_y;
  double px(double x) const { return kPad + (x - min_x) * kScale; }
  double py(double y) const { return kPad + (max_y - y) * kScale; }  // svg y grows downward
};

std::string f(double v) { return format_double(v); }

}  // namespace

void emit_plot(const Scenario& scenario, const RunResult& result, const std::string& path) {
  const WorldState& w = result.final_world;
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  auto grow = [&](double x, double y, double r = 0.0) {
    min_x = std::min(min_x, x - r);
    max_x = std::max(max_x, x + r);
    min_y = std::min(min_y, y - r);
    max_y = std::max(max_y, y + r);
  };
  for (const auto& r : result.rows) grow(r.x, r.y);
  for (const auto& o : w.obstacles) grow(o.center.x(), o.center.y(), o.radius + w.params.m_p);
  for (const auto& c : w.chargers) grow(c.position.x(), c.position.y(), w.params.r_dock);
  for (const auto& plan : *scenario.plans)
    for (const auto& p : plan) grow(p.x(), p.y());
  if (!(min_x <= max_x)) {
    min_x = min_y = 0.0;
    max_x = max_y = 1.0;
  }
  grow(min_x, min_y, 1.0);  // breathing room around the data

  Mapper m{min_x, max_y};
  double width = (max_x - min_x) * kScale + 2 * kPad;
  double height = (max_y - min_y) * kScale + 2 * kPad;

  // collect capped per-agent action switch events for the legend
  std::vector<std::vector<std::string>> legend(w.agents.size());
  std::vector<long> extra(w.agents.size(), 0);
  {
    std::vector<std::string> last(w.agents.size());
    std::vector<bool> seen(w.agents.size(), false);
    double dt = w.params.dt;
    for (const auto& r : result.rows) {
      size_t i = static_cast<size_t>(r.agent);
      if (seen[i] && r.action != last[i]) {
        if (static_cast<int>(legend[i].size()) < kLegendCap)
          legend[i].push_back("t=" + f(static_cast<double>(r.tick) * dt) + "  " + last[i] +
                              " -> " + r.action);
        else
          ++extra[i];
      }
      last[i] = r.action;
      seen[i] = true;
    }
  }
  double legend_px = 320.0;

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f(width + legend_px)
    << "\" height=\"" << f(height) << "\" viewBox=\"0 0 " << f(width + legend_px) << ' '
    << f(height) << "\" data-format-version=\"1\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  s << "<text x=\"" << f(kPad) << "\" y=\"18\" font-family=\"monospace\" font-size=\"13\">"
    << result.scenario << "  [" << to_string(result.metrics.status)
    << ", ticks=" << result.metrics.ticks << "]</text>\n";

  for (const auto& o : w.obstacles) {
    double cx = m.px(o.center.x()), cy = m.py(o.center.y());
    s << "<circle cx=\"" << f(cx) << "\" cy=\"" << f(cy) << "\" r=\"" << f(o.radius * kScale)
      << "\" fill=\"#444444\"/>\n";
    s << "<circle cx=\"" << f(cx) << "\" cy=\"" << f(cy) << "\" r=\""
      << f((o.radius + w.params.m_s) * kScale)
      << "\" fill=\"none\" stroke=\"#dc322f\" stroke-dasharray=\"4 3\"/>\n";
    s << "<circle cx=\"" << f(cx) << "\" cy=\"" << f(cy) << "\" r=\""
      << f((o.radius + w.params.m_p) * kScale)
      << "\" fill=\"none\" stroke=\"#cb4b16\" stroke-dasharray=\"1 4\"/>\n";
  }
  for (const auto& c : w.chargers) {
    double cx = m.px(c.position.x()), cy = m.py(c.position.y());
    s << "<rect x=\"" << f(cx - 4) << "\" y=\"" << f(cy - 4)
      << "\" width=\"8\" height=\"8\" fill=\"#2aa198\"/>\n";
    s << "<circle cx=\"" << f(cx) << "\" cy=\"" << f(cy) << "\" r=\""
      << f(w.params.r_dock * kScale)
      << "\" fill=\"none\" stroke=\"#2aa198\" stroke-dasharray=\"3 3\"/>\n";
  }

  for (size_t i = 0; i < scenario.plans->size(); ++i) {
    const Plan& plan = (*scenario.plans)[i];
    if (plan.empty()) continue;
    s << "<polyline fill=\"none\" stroke=\"" << agent_color(i)
      << "\" stroke-opacity=\"0.25\" stroke-dasharray=\"2 5\" points=\"";
    for (const auto& p : plan) s << f(m.px(p.x())) << ',' << f(m.py(p.y())) << ' ';
    s << "\"/>\n";
    for (const auto& p : plan)
      s << "<circle cx=\"" << f(m.px(p.x())) << "\" cy=\"" << f(m.py(p.y()))
        << "\" r=\"2.5\" fill=\"none\" stroke=\"" << agent_color(i)
        << "\" stroke-opacity=\"0.5\"/>\n";
  }

  for (size_t i = 0; i < w.agents.size(); ++i) {
    s << "<polyline fill=\"none\" stroke=\"" << agent_color(i)
      << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : result.rows)
      if (static_cast<size_t>(r.agent) == i) s << f(m.px(r.x)) << ',' << f(m.py(r.y)) << ' ';
    s << "\"/>\n";
  }
  for (size_t i = 0; i < w.agents.size(); ++i) {
    const LogRow* first = nullptr;
    for (const auto& r : result.rows)
      if (static_cast<size_t>(r.agent) == i) {
        first = &r;
        break;
      }
    if (first)
      s << "<circle cx=\"" << f(m.px(first->x)) << "\" cy=\"" << f(m.py(first->y))
        << "\" r=\"3.5\" fill=\"" << agent_color(i) << "\"/>\n";
    double fx = m.px(w.agents[i].x.x()), fy = m.py(w.agents[i].x.y());
    s << "<circle cx=\"" << f(fx) << "\" cy=\"" << f(fy) << "\" r=\"4\" fill=\"none\" stroke=\""
      << agent_color(i) << "\" stroke-width=\"2\"/>\n";
    s << "<circle cx=\"" << f(fx) << "\" cy=\"" << f(fy) << "\" r=\""
      << f(w.params.m_s * kScale) << "\" fill=\"" << agent_color(i)
      << "\" fill-opacity=\"0.08\" stroke=\"" << agent_color(i)
      << "\" stroke-dasharray=\"5 4\" stroke-opacity=\"0.6\"/>\n";
  }

  double ly = 36.0;
  double lx = width + 10.0;
  for (size_t i = 0; i < w.agents.size(); ++i) {
    s << "<text x=\"" << f(lx) << "\" y=\"" << f(ly) << "\" font-family=\"monospace\""
      << " font-size=\"12\" fill=\"" << agent_color(i) << "\">agent " << i << "  ("
      << result.metrics.agents[i].action_switches << " switches, final b="
      << f(w.agents[i].b) << ")</text>\n";
    ly += 15.0;
    for (const auto& line : legend[i]) {
      s << "<text x=\"" << f(lx + 10) << "\" y=\"" << f(ly)
        << "\" font-family=\"monospace\" font-size=\"10\" fill=\"#586e75\">" << line
        << "</text>\n";
      ly += 12.0;
    }
    if (extra[i] > 0) {
      s << "<text x=\"" << f(lx + 10) << "\" y=\"" << f(ly)
        << "\" font-family=\"monospace\" font-size=\"10\" fill=\"#93a1a1\">(+" << extra[i]
        << " more)</text>\n";
      ly += 12.0;
    }
    ly += 6.0;
  }
  s << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << s.str();
}

}  // namespace cbfbt
