#include "mfgc/svg.hpp"

#include "mfgc/csv.hpp"
#include "mfgc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mfgc {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMargin = 64;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Series {
  std::string label;
  std::vector<double> x, y;
};

void render(const std::string& path, const std::string& title,
            const std::string& x_label, const std::string& y_label,
            const std::vector<Series>& series, bool logx, bool logy,
            const std::string& annotation) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return logy ? std::log10(v) : v; };
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((logx && s.x[i] <= 0) || (logy && s.y[i] <= 0)) continue;
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  }
  if (xmin > xmax || ymin > ymax) throw Error("emit_plots: no plottable data");
  if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }

  auto px = [&](double v) {
    return kMargin + (tx(v) - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin);
  };
  auto py = [&](double v) {
    return kHeight - kMargin - (ty(v) - ymin) / (ymax - ymin) * (kHeight - 2 * kMargin);
  };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};

  std::ofstream out(path);
  if (!out) throw Error("emit_plots: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-size=\"16\">" << title << "</text>\n";
  // axes
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label
      << (logx ? " (log)" : "") << "</text>\n";
  out << "<text x=\"18\" y=\"" << kHeight / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 "
      << kHeight / 2 << ")\">" << y_label << (logy ? " (log)" : "") << "</text>\n";
  // corner tick labels
  out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 16
      << "\" font-size=\"10\">" << fmt(logx ? std::pow(10, xmin) : xmin) << "</text>\n";
  out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 16
      << "\" text-anchor=\"end\" font-size=\"10\">"
      << fmt(logx ? std::pow(10, xmax) : xmax) << "</text>\n";
  out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin
      << "\" text-anchor=\"end\" font-size=\"10\">"
      << fmt(logy ? std::pow(10, ymin) : ymin) << "</text>\n";
  out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin
      << "\" text-anchor=\"end\" font-size=\"10\">"
      << fmt(logy ? std::pow(10, ymax) : ymax) << "</text>\n";

  int color_idx = 0;
  int legend_y = kMargin;
  for (const Series& s : series) {
    const char* color = colors[color_idx % 5];
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((logx && s.x[i] <= 0) || (logy && s.y[i] <= 0)) continue;
      pts << px(s.x[i]) << "," << py(s.y[i]) << " ";
      out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    out << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
        << "\"/>\n";
    if (!s.label.empty()) {
      out << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << legend_y
          << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">"
          << s.label << "</text>\n";
      legend_y += 14;
    }
    ++color_idx;
  }
  if (!annotation.empty()) {
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kMargin + 16
        << "\" text-anchor=\"middle\" font-size=\"12\">" << annotation << "</text>\n";
  }
  out << "</svg>\n";
}

std::string index_class(int i, int j, int k, int l) {
  // class label from the distinctness pattern of the 1-based indices
  std::vector<int> idx;
  for (int v : {i, j, k, l})
    if (v > 0) idx.push_back(v);
  std::vector<int> uniq = idx;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::ostringstream label;
  label << "order" << idx.size() << "_distinct" << uniq.size();
  return label.str();
}

}  // namespace

std::vector<std::string> emit_plots(const std::string& csv_path, const std::string& kind,
                                    const std::string& out_dir) {
  CsvTable table = read_csv(csv_path);
  if (table.rows.empty()) throw Error("emit_plots: empty table in " + csv_path);
  std::vector<std::string> written;

  if (kind == "decay") {
    int cn = table.column("N");
    int ci = table.column("i"), cj = table.column("j");
    int ck = table.column("k"), cl = table.column("l");
    int cnorm = table.column("norm");
    if (cn < 0 || cnorm < 0) throw Error("emit_plots: not a decay table");
    std::map<std::string, Series> groups;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      std::string cls = index_class(
          ci >= 0 ? static_cast<int>(table.number(r, ci)) : 0,
          cj >= 0 ? static_cast<int>(table.number(r, cj)) : 0,
          ck >= 0 ? static_cast<int>(table.number(r, ck)) : 0,
          cl >= 0 ? static_cast<int>(table.number(r, cl)) : 0);
      Series& s = groups[cls];
      s.label = cls;
      s.x.push_back(table.number(r, cn));
      s.y.push_back(table.number(r, cnorm));
    }
    for (auto& [cls, series] : groups) {
      // keep the max norm per N within the class
      std::map<double, double> agg;
      for (std::size_t i = 0; i < series.x.size(); ++i) {
        auto [it, fresh] = agg.try_emplace(series.x[i], series.y[i]);
        if (!fresh) it->second = std::max(it->second, series.y[i]);
      }
      Series reduced;
      reduced.label = cls;
      for (auto& [x, y] : agg) {
        reduced.x.push_back(x);
        reduced.y.push_back(y);
      }
      std::string path = out_dir + "/decay_" + cls + ".svg";
      std::string annotation;
      if (reduced.x.size() >= 2) {
        try {
          annotation = "fitted slope " + fmt(loglog_slope(reduced.x, reduced.y));
        } catch (const Error&) {
        }
      }
      render(path, "derivative decay: " + cls, "N", "max norm", {reduced}, true, true,
             annotation);
      written.push_back(path);
    }
    return written;
  }

  if (kind == "residual") {
    int cn = table.column("N");
    int cres = table.column("residual");
    if (cn < 0 || cres < 0) throw Error("emit_plots: not a residual table");
    std::map<double, std::vector<double>> per_n;
    for (std::size_t r = 0; r < table.rows.size(); ++r)
      per_n[table.number(r, cn)].push_back(std::abs(table.number(r, cres)));
    Series s;
    s.label = "median |residual|";
    for (auto& [n, vals] : per_n) {
      std::sort(vals.begin(), vals.end());
      s.x.push_back(n);
      s.y.push_back(vals[vals.size() / 2]);
    }
    std::string path = out_dir + "/residual.svg";
    render(path, "master-equation residual", "N", "median |residual|", {s}, false, true,
           "");
    return {path};
  }

  if (kind == "convergence") {
    int cn = table.column("N");
    int cerr = table.column("err");
    if (cn < 0 || cerr < 0) throw Error("emit_plots: not a convergence table");
    Series s;
    s.label = "max error";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      s.x.push_back(table.number(r, cn));
      s.y.push_back(table.number(r, cerr));
    }
    std::string annotation;
    if (s.x.size() >= 2) annotation = "fitted slope " + fmt(loglog_slope(s.x, s.y));
    std::string path = out_dir + "/convergence.svg";
    render(path, "value convergence", "N", "max error", {s}, true, true, annotation);
    return {path};
  }

  throw UnknownKind("emit_plots: unknown kind " + kind);
}

}  // namespace mfgc
