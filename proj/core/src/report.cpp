#include "epr/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "epr/image_io.hpp"

namespace epr {

namespace fs = std::filesystem;

ReportFormat parse_report_format(const std::string& name) {
  if (name == "md" || name == "markdown") return ReportFormat::md;
  if (name == "csv") return ReportFormat::csv;
  throw std::invalid_argument("unknown report format '" + name + "' (expected md or csv)");
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs) {
  if (runs.empty()) throw std::invalid_argument("no runs to summarize");
  struct Acc {
    SummaryRow row;
    std::vector<double> acc, bwt, info, secs, loc;
  };
  std::vector<Acc> groups;
  for (const RunRecord& r : runs) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Acc& g) {
      return g.row.method == r.method && g.row.n_sc == r.n_sc && g.row.epf == r.epf;
    });
    if (it == groups.end()) {
      groups.push_back({});
      it = groups.end() - 1;
      it->row.method = r.method;
      it->row.n_sc = r.n_sc;
      it->row.epf = r.epf;
    }
    ++it->row.runs;
    if (!r.ok || !r.acc) {
      ++it->row.failed;
      continue;
    }
    it->acc.push_back(*r.acc);
    if (r.bwt) it->bwt.push_back(*r.bwt);
    if (r.informativeness) it->info.push_back(*r.informativeness);
    if (r.localization) it->loc.push_back(*r.localization);
    it->secs.push_back(r.train_seconds);
  }
  std::vector<SummaryRow> rows;
  for (auto& g : groups) {
    g.row.acc = mean_std(g.acc);
    g.row.bwt = mean_std(g.bwt);
    g.row.informativeness = mean_std(g.info);
    g.row.train_seconds = mean_std(g.secs);
    g.row.localization = mean_std(g.loc);
    rows.push_back(g.row);
  }
  return rows;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string pct(const MeanStd& m) {
  if (m.n == 0) return "n/a";
  return fmt("%.2f", 100.0 * m.mean) + " ± " + fmt("%.2f", 100.0 * m.std);
}

std::string exact(const MeanStd& m, double MeanStd::*field) {
  return m.n == 0 ? std::string() : fmt("%.17g", m.*field);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

const char* const kCsvHeader =
    "method,n_sc,epf,runs,failed,acc_mean,acc_std,bwt_mean,bwt_std,informativeness_mean,informativeness_std,"
    "train_seconds_mean,train_seconds_std,localization_mean,localization_std";

}  // namespace

std::string render_report(const std::vector<SummaryRow>& rows, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
      out << r.method << ',' << r.n_sc << ',' << r.epf << ',' << r.runs << ',' << r.failed;
      for (const MeanStd* m : {&r.acc, &r.bwt, &r.informativeness, &r.train_seconds, &r.localization}) {
        out << ',' << exact(*m, &MeanStd::mean) << ',' << exact(*m, &MeanStd::std);
      }
      out << '\n';
    }
    return out.str();
  }

  const bool info = std::any_of(rows.begin(), rows.end(), [](const SummaryRow& r) { return r.informativeness.n; });
  out << "| Method | n_sc | EPF | ACC (%) | BWT (%) |" << (info ? " Buffer ACC (%) |" : "") << " Time (s) | Seeds |\n";
  out << "|---|---|---|---|---|" << (info ? "---|" : "") << "---|---|\n";
  for (const auto& r : rows) {
    out << "| " << r.method << " | " << (r.n_sc.empty() ? "-" : r.n_sc) << " | "
        << (r.epf ? std::to_string(r.epf) : "-") << " | " << pct(r.acc) << " | " << pct(r.bwt) << " | ";
    if (info) out << pct(r.informativeness) << " | ";
    out << (r.train_seconds.n ? fmt("%.1f", r.train_seconds.mean) : "n/a") << " | ";
    out << r.runs - r.failed << '/' << r.runs << (r.failed ? " (gaps)" : "") << " |\n";
  }
  return out.str();
}

std::string emit_report(const std::vector<fs::path>& run_dirs, ReportFormat format) {
  if (run_dirs.empty()) throw std::invalid_argument("no run directories given");
  std::vector<RunRecord> runs;
  for (const auto& d : run_dirs) runs.push_back(load_run_record(d));
  return render_report(summarize(runs), format);
}

std::vector<SummaryRow> parse_summary_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("not a summary csv");
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 15) throw std::runtime_error("summary csv row has " + std::to_string(c.size()) + " cells");
    SummaryRow r;
    r.method = c[0];
    r.n_sc = c[1];
    r.epf = std::stoi(c[2]);
    r.runs = std::stoul(c[3]);
    r.failed = std::stoul(c[4]);
    MeanStd* fields[] = {&r.acc, &r.bwt, &r.informativeness, &r.train_seconds, &r.localization};
    for (int k = 0; k < 5; ++k) {
      const std::string& mean = c[static_cast<std::size_t>(5 + 2 * k)];
      if (mean.empty()) continue;
      fields[k]->mean = std::stod(mean);
      fields[k]->std = std::stod(c[static_cast<std::size_t>(6 + 2 * k)]);
      fields[k]->n = r.runs - r.failed;
    }
    rows.push_back(r);
  }
  return rows;
}

PlotData collect_plot_data(const std::vector<RunRecord>& runs) {
  const auto rows = summarize(runs);
  PlotData pd;

  // Best EPF per (method, n_sc).
  std::map<std::string, std::map<double, const SummaryRow*>> best;
  std::vector<std::string> method_order;
  for (const auto& r : rows) {
    if (r.n_sc.empty() || r.acc.n == 0) continue;
    if (std::find(method_order.begin(), method_order.end(), r.method) == method_order.end()) {
      method_order.push_back(r.method);
    }
    const double x = SlotRatio::parse(r.n_sc).value();
    const SummaryRow*& slot = best[r.method][x];
    if (!slot || r.acc.mean > slot->acc.mean) slot = &r;
  }
  for (const auto& m : method_order) {
    PlotSeries s{m, {}};
    for (const auto& [x, row] : best[m]) s.points.push_back({x, row->acc.mean, row->acc.std});
    pd.memory_sweep.push_back(std::move(s));
  }

  std::vector<std::pair<std::string, std::string>> epf_keys;
  for (const auto& r : rows) {
    if (r.epf == 0 || r.acc.n == 0) continue;
    const auto key = std::make_pair(r.method, r.n_sc);
    if (std::find(epf_keys.begin(), epf_keys.end(), key) == epf_keys.end()) epf_keys.push_back(key);
  }
  for (const auto& [method, nsc] : epf_keys) {
    PlotSeries s{method + " n_sc=" + nsc, {}};
    for (const auto& r : rows) {
      if (r.method == method && r.n_sc == nsc && r.acc.n) s.points.push_back({double(r.epf), r.acc.mean, r.acc.std});
    }
    std::sort(s.points.begin(), s.points.end(), [](const PlotPoint& a, const PlotPoint& b) { return a.x < b.x; });
    pd.epf_sweep.push_back(std::move(s));
  }

  for (const auto& r : rows) {
    std::string label = r.method;
    if (!r.n_sc.empty()) label += " n_sc=" + r.n_sc;
    if (r.epf) label += " EPF=" + std::to_string(r.epf);
    if (r.informativeness.n) pd.informativeness.push_back({label, r.informativeness.mean, r.informativeness.std});
    if (r.train_seconds.n) pd.timing.push_back({label, r.train_seconds.mean, r.train_seconds.std});
  }
  return pd;
}

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr std::array<Rgb, 8> kColors{{{31, 119, 180},
                                      {214, 39, 40},
                                      {44, 160, 44},
                                      {255, 127, 14},
                                      {148, 103, 189},
                                      {140, 86, 75},
                                      {227, 119, 194},
                                      {23, 190, 207}}};
constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrey{200, 200, 200};

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

// Primitive list rendered both to SVG and to a raster.
class Figure {
 public:
  Figure(int w, int h) : w_(w), h_(h) {}

  void line(double x0, double y0, double x1, double y1, Rgb c, double width = 1.0) {
    svg_ << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y1 << "\" stroke=\""
         << hex(c) << "\" stroke-width=\"" << width << "\"/>\n";
    lines_.push_back({x0, y0, x1, y1, c, width});
  }
  void rect(double x, double y, double w, double h, Rgb c) {
    svg_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h << "\" fill=\""
         << hex(c) << "\"/>\n";
    rects_.push_back({x, y, w, h, c});
  }
  void dot(double x, double y, double r, Rgb c) {
    svg_ << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << r << "\" fill=\"" << hex(c) << "\"/>\n";
    dots_.push_back({x, y, r, c});
  }
  void text(double x, double y, const std::string& s, int size = 12, const char* anchor = "start", double rotate = 0) {
    svg_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
         << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\"";
    if (rotate != 0) svg_ << " transform=\"rotate(" << rotate << ' ' << x << ' ' << y << ")\"";
    svg_ << '>' << escape(s) << "</text>\n";
  }

  void save(const fs::path& svg_path, const fs::path& png_path) const {
    std::ofstream out(svg_path);
    if (!out) throw std::runtime_error("cannot write " + svg_path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << svg_.str() << "</svg>\n";
    write_png(png_path, raster());
  }

 private:
  struct L {
    double x0, y0, x1, y1;
    Rgb c;
    double w;
  };
  struct R {
    double x, y, w, h;
    Rgb c;
  };
  struct D {
    double x, y, r;
    Rgb c;
  };

  static std::string escape(const std::string& s) {
    std::string o;
    for (char ch : s) {
      if (ch == '<') {
        o += "&lt;";
      } else if (ch == '>') {
        o += "&gt;";
      } else if (ch == '&') {
        o += "&amp;";
      } else {
        o += ch;
      }
    }
    return o;
  }

  RgbImage raster() const {
    RgbImage img(h_, w_, 255);
    auto put = [&](int x, int y, Rgb c) {
      if (x >= 0 && y >= 0 && x < w_ && y < h_) img.set(y, x, c.r, c.g, c.b);
    };
    for (const R& r : rects_) {
      for (int y = int(std::lround(r.y)); y < int(std::lround(r.y + r.h)); ++y) {
        for (int x = int(std::lround(r.x)); x < int(std::lround(r.x + r.w)); ++x) put(x, y, r.c);
      }
    }
    for (const L& l : lines_) {
      const double len = std::max(std::abs(l.x1 - l.x0), std::abs(l.y1 - l.y0));
      const int steps = std::max(1, int(std::ceil(len)));
      const int half = std::max(0, int(std::lround(l.w / 2.0)) - 1);
      for (int i = 0; i <= steps; ++i) {
        const double t = double(i) / steps;
        const int x = int(std::lround(l.x0 + t * (l.x1 - l.x0)));
        const int y = int(std::lround(l.y0 + t * (l.y1 - l.y0)));
        for (int dy = -half; dy <= half; ++dy) {
          for (int dx = -half; dx <= half; ++dx) put(x + dx, y + dy, l.c);
        }
      }
    }
    for (const D& d : dots_) {
      const int r = int(std::ceil(d.r));
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (dx * dx + dy * dy <= d.r * d.r) put(int(std::lround(d.x)) + dx, int(std::lround(d.y)) + dy, d.c);
        }
      }
    }
    return img;
  }

  int w_, h_;
  std::ostringstream svg_;
  std::vector<L> lines_;
  std::vector<R> rects_;
  std::vector<D> dots_;
};

constexpr int kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 200, kTop = 40, kBottom = 60;

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void axes(Figure& f, const std::string& title, const std::string& xlabel, const std::string& ylabel, double ymin,
          double ymax, bool y_percent) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  f.text((x0 + x1) / 2, 24, title, 15, "middle");
  f.text((x0 + x1) / 2, kHeight - 18, xlabel, 12, "middle");
  f.text(20, (y0 + y1) / 2, ylabel, 12, "middle", -90);
  for (int i = 0; i <= 5; ++i) {
    const double v = ymin + (ymax - ymin) * i / 5.0;
    const double y = y0 - (y0 - y1) * i / 5.0;
    f.line(x0, y, x1, y, kGrey, 1);
    f.text(x0 - 6, y + 4, tick_label(y_percent ? std::round(100 * v * 10) / 10 : v), 11, "end");
  }
  f.line(x0, y0, x1, y0, kBlack, 1.5);
  f.line(x0, y0, x0, y1, kBlack, 1.5);
}

void line_plot(const std::vector<PlotSeries>& series, const std::string& title, const std::string& xlabel,
               const fs::path& stem, std::vector<fs::path>& written) {
  if (series.empty()) return;
  std::vector<double> xs;
  for (const auto& s : series) {
    for (const auto& p : s.points) xs.push_back(p.x);
  }
  if (xs.empty()) return;
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  // Categorical x placement keeps uneven sweeps (0.5, 0.75, 1, 2) readable.
  auto xpos = [&](double x) {
    const auto i = std::lower_bound(xs.begin(), xs.end(), x) - xs.begin();
    const double span = kWidth - kRight - kLeft;
    return kLeft + span * (double(i) + 0.5) / double(xs.size());
  };
  auto ypos = [&](double v) { return kHeight - kBottom - (kHeight - kBottom - kTop) * std::clamp(v, 0.0, 1.0); };

  Figure f(kWidth, kHeight);
  axes(f, title, xlabel, "ACC (%)", 0.0, 1.0, true);
  for (double x : xs) f.text(xpos(x), kHeight - kBottom + 16, tick_label(x), 11, "middle");
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Rgb c = kColors[k % kColors.size()];
    const auto& pts = series[k].points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      f.line(xpos(pts[i].x), ypos(pts[i].y), xpos(pts[i + 1].x), ypos(pts[i + 1].y), c, 2);
    }
    for (const auto& p : pts) {
      if (p.err > 0) f.line(xpos(p.x), ypos(p.y - p.err), xpos(p.x), ypos(p.y + p.err), c, 1);
      f.dot(xpos(p.x), ypos(p.y), 4, c);
    }
    const double ly = kTop + 10 + 20.0 * double(k);
    f.rect(kWidth - kRight + 15, ly - 6, 14, 4, c);
    f.text(kWidth - kRight + 35, ly, series[k].name, 11);
  }
  f.save(fs::path(stem).replace_extension(".svg"), fs::path(stem).replace_extension(".png"));
  written.push_back(fs::path(stem).replace_extension(".svg"));
  written.push_back(fs::path(stem).replace_extension(".png"));
}

void bar_plot(const std::vector<BarEntry>& bars, const std::string& title, const std::string& ylabel,
              bool percent, const fs::path& stem, std::vector<fs::path>& written) {
  if (bars.empty()) return;
  double ymax = 1.0;
  if (!percent) {
    ymax = 0.0;
    for (const auto& b : bars) ymax = std::max(ymax, b.value + b.err);
    ymax = ymax > 0 ? ymax * 1.1 : 1.0;
  }
  auto ypos = [&](double v) { return kHeight - kBottom - (kHeight - kBottom - kTop) * std::clamp(v / ymax, 0.0, 1.0); };
  Figure f(kWidth, kHeight);
  axes(f, title, "", ylabel, 0.0, ymax, percent);
  const double span = kWidth - kRight - kLeft;
  const double slot = span / double(bars.size());
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const Rgb c = kColors[k % kColors.size()];
    const double x = kLeft + slot * double(k) + slot * 0.15;
    const double w = slot * 0.7;
    f.rect(x, ypos(bars[k].value), w, kHeight - kBottom - ypos(bars[k].value), c);
    if (bars[k].err > 0) {
      f.line(x + w / 2, ypos(bars[k].value - bars[k].err), x + w / 2, ypos(bars[k].value + bars[k].err), kBlack, 1);
    }
    const double ly = kTop + 10 + 20.0 * double(k);
    f.rect(kWidth - kRight + 15, ly - 8, 10, 10, c);
    f.text(kWidth - kRight + 30, ly, bars[k].label, 11);
  }
  f.save(fs::path(stem).replace_extension(".svg"), fs::path(stem).replace_extension(".png"));
  written.push_back(fs::path(stem).replace_extension(".svg"));
  written.push_back(fs::path(stem).replace_extension(".png"));
}

}  // namespace

std::vector<fs::path> emit_plots(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw std::invalid_argument("no run directories given");
  std::vector<RunRecord> runs;
  for (const auto& d : run_dirs) runs.push_back(load_run_record(d));
  const PlotData pd = collect_plot_data(runs);
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  line_plot(pd.memory_sweep, "ACC vs memory size", "memory slots per class (n_sc)", out_dir / "memory_sweep", written);
  line_plot(pd.epf_sweep, "ACC vs experience packing factor", "EPF", out_dir / "epf_sweep", written);
  bar_plot(pd.informativeness, "Joint training on buffer contents", "test ACC (%)", true,
           out_dir / "informativeness", written);
  bar_plot(pd.timing, "Total training time", "seconds", false, out_dir / "timing", written);
  return written;
}

int render_memory_sheet(const fs::path& snapshot_dir, const fs::path& png, int full_size) {
  std::ifstream in(snapshot_dir / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json in " + snapshot_dir.string());
  const nlohmann::json manifest = nlohmann::json::parse(in);
  if (!manifest.is_array() || manifest.empty()) throw std::runtime_error("memory snapshot is empty");

  std::vector<RgbImage> tiles;
  std::vector<std::array<int, 2>> corners;
  int tile = 0;
  for (const auto& e : manifest) {
    tiles.push_back(read_png(snapshot_dir / e.at("file").get<std::string>()));
    corners.push_back({e.value("x_cord", 0), e.value("y_cord", 0)});
    tile = std::max({tile, tiles.back().rows, tiles.back().cols, full_size});
  }
  const int n = static_cast<int>(tiles.size());
  const int cols = static_cast<int>(std::ceil(std::sqrt(double(n))));
  const int rows = (n + cols - 1) / cols;
  constexpr int gap = 2;
  RgbImage sheet(rows * (tile + gap) + gap, cols * (tile + gap) + gap, 255);
  for (int k = 0; k < n; ++k) {
    const int top = gap + (k / cols) * (tile + gap);
    const int left = gap + (k % cols) * (tile + gap);
    const RgbImage& t = tiles[static_cast<std::size_t>(k)];
    int ox = 0, oy = 0;
    if (full_size > 0) {
      for (int r = 0; r < tile; ++r) {
        for (int c = 0; c < tile; ++c) sheet.set(top + r, left + c, 0, 0, 0);
      }
      ox = corners[static_cast<std::size_t>(k)][0];
      oy = corners[static_cast<std::size_t>(k)][1];
    }
    for (int r = 0; r < t.rows && ox + r < tile; ++r) {
      for (int c = 0; c < t.cols && oy + c < tile; ++c) {
        const std::size_t i = (static_cast<std::size_t>(r) * t.cols + c) * 3;
        sheet.set(top + ox + r, left + oy + c, t.rgb[i], t.rgb[i + 1], t.rgb[i + 2]);
      }
    }
  }
  write_png(png, sheet);
  return n;
}

}  // namespace epr
