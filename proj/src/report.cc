//
// Copyright 2026 The dputil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "absl/strings/str_format.h"
#include "dputil/harness.h"

namespace dputil {
namespace {

namespace fs = std::filesystem;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                    "#d62728", "#9467bd", "#8c564b"};

double MetricValue(const MetricRow& m, const std::string& metric) {
  if (metric == "utility_loss") return m.utility_loss;
  if (metric == "privacy_leakage") return m.privacy_leakage;
  if (metric == "true_revealed") return static_cast<double>(m.true_revealed);
  if (metric == "acc_private") return m.acc_private;
  if (metric == "tpr") return m.tpr;
  if (metric == "fpr") return m.fpr;
  return std::nan("");
}

std::string EscapeXml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string SafeName(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') {
      c = '_';
    }
  }
  return out;
}

}  // namespace

std::vector<PlotPoint> AggregateMetric(const SweepResult& result,
                                       const std::string& dataset,
                                       const std::string& arch,
                                       const std::string& metric) {
  // Keep first-seen mechanism order so plots follow the config.
  std::vector<std::string> mechanisms;
  std::map<std::pair<std::string, double>, std::vector<double>> groups;
  for (const SweepRow& row : result.rows) {
    if (!row.ok || row.dataset != dataset || row.arch != arch) continue;
    if (std::find(mechanisms.begin(), mechanisms.end(), row.mechanism) ==
        mechanisms.end()) {
      mechanisms.push_back(row.mechanism);
    }
    groups[{row.mechanism, row.epsilon}].push_back(
        MetricValue(row.metrics, metric));
  }
  std::vector<PlotPoint> points;
  for (const std::string& mech : mechanisms) {
    for (const auto& [key, values] : groups) {
      if (key.first != mech) continue;
      points.push_back({mech, key.second, Summarize(values), values.size()});
    }
  }
  return points;
}

std::string SvgLineChart(const std::string& title, const std::string& y_label,
                         const std::vector<PlotPoint>& points) {
  constexpr double kWidth = 640, kHeight = 420;
  constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  if (!points.empty()) {
    x_min = y_min = std::numeric_limits<double>::infinity();
    x_max = y_max = -std::numeric_limits<double>::infinity();
    for (const PlotPoint& p : points) {
      const double lx = std::log10(p.epsilon);
      x_min = std::min(x_min, lx);
      x_max = std::max(x_max, lx);
      y_min = std::min(y_min, p.value.mean - p.value.stddev);
      y_max = std::max(y_max, p.value.mean + p.value.stddev);
    }
    if (x_max - x_min < 1e-12) {
      x_min -= 1;
      x_max += 1;
    }
    if (y_max - y_min < 1e-12) {
      y_min -= 0.5;
      y_max += 0.5;
    }
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
  }
  auto sx = [&](double eps) {
    return kLeft + (std::log10(eps) - x_min) / (x_max - x_min) * plot_w;
  };
  auto sy = [&](double v) {
    return kTop + (1.0 - (v - y_min) / (y_max - y_min)) * plot_h;
  };

  std::string svg = absl::StrFormat(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n"
      "<text x=\"%g\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">%s"
      "</text>\n",
      static_cast<int>(kWidth), static_cast<int>(kHeight), kLeft + plot_w / 2,
      EscapeXml(title));
  svg += absl::StrFormat(
      "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
      "stroke=\"black\"/>\n",
      kLeft, kTop, plot_w, plot_h);
  for (int e = static_cast<int>(std::ceil(x_min));
       e <= static_cast<int>(std::floor(x_max)); ++e) {
    const double x = kLeft + (e - x_min) / (x_max - x_min) * plot_w;
    svg += absl::StrFormat(
        "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#ddd\"/>\n"
        "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">1e%d</text>\n",
        x, kTop, x, kTop + plot_h, x, kTop + plot_h + 16, e);
  }
  for (int t = 0; t <= 4; ++t) {
    const double v = y_min + (y_max - y_min) * t / 4.0;
    svg += absl::StrFormat(
        "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.3g</text>\n",
        kLeft - 6, sy(v) + 4, v);
  }
  svg += absl::StrFormat(
      "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">epsilon (log10)</text>\n"
      "<text x=\"16\" y=\"%g\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 16 %g)\">%s</text>\n",
      kLeft + plot_w / 2, kHeight - 16, kTop + plot_h / 2, kTop + plot_h / 2,
      EscapeXml(y_label));

  std::vector<std::string> series;
  for (const PlotPoint& p : points) {
    if (std::find(series.begin(), series.end(), p.mechanism) == series.end()) {
      series.push_back(p.mechanism);
    }
  }
  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    std::vector<const PlotPoint*> line;
    for (const PlotPoint& p : points) {
      if (p.mechanism == series[s]) line.push_back(&p);
    }
    std::sort(line.begin(), line.end(),
              [](auto* a, auto* b) { return a->epsilon < b->epsilon; });
    std::string path;
    for (const PlotPoint* p : line) {
      path += absl::StrFormat("%s%g,%g", path.empty() ? "" : " ",
                              sx(p->epsilon), sy(p->value.mean));
    }
    svg += absl::StrFormat(
        "<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" "
        "stroke-width=\"2\"/>\n",
        path, color);
    for (const PlotPoint* p : line) {
      const double x = sx(p->epsilon);
      svg += absl::StrFormat(
          "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\"/>\n"
          "<circle cx=\"%g\" cy=\"%g\" r=\"3\" fill=\"%s\"/>\n",
          x, sy(p->value.mean - p->value.stddev), x,
          sy(p->value.mean + p->value.stddev), color, x, sy(p->value.mean),
          color);
    }
    const double ly = kTop + 10 + 18 * static_cast<double>(s);
    svg += absl::StrFormat(
        "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" "
        "stroke-width=\"2\"/>\n<text x=\"%g\" y=\"%g\">%s</text>\n",
        kLeft + plot_w + 12, ly, kLeft + plot_w + 32, ly, color,
        kLeft + plot_w + 38, ly + 4, EscapeXml(series[s]));
  }
  svg += "</svg>\n";
  return svg;
}

absl::StatusOr<std::vector<std::string>> EmitPlots(const SweepResult& result,
                                                   const std::string& dir) {
  if (std::none_of(result.rows.begin(), result.rows.end(),
                   [](const SweepRow& r) { return r.ok; })) {
    return absl::FailedPreconditionError(
        "empty report: the results contain no successful rows");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    return absl::PermissionDeniedError(
        absl::StrFormat("cannot create %s: %s", dir, ec.message()));
  }
  std::set<std::pair<std::string, std::string>> groups;
  for (const SweepRow& row : result.rows) groups.insert({row.dataset, row.arch});

  std::vector<std::string> written;
  auto write = [&written](const fs::path& path,
                          const std::string& text) -> absl::Status {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
      return absl::PermissionDeniedError(
          absl::StrFormat("cannot write %s", path.string()));
    }
    written.push_back(path.string());
    return absl::OkStatus();
  };
  for (const auto& [dataset, arch] : groups) {
    for (const char* metric : kPlottedMetrics) {
      const auto points = AggregateMetric(result, dataset, arch, metric);
      const std::string stem =
          absl::StrFormat("%s_%s_%s", metric, SafeName(dataset), arch);
      const std::string title =
          absl::StrFormat("%s: %s (%s)", metric, dataset, arch);
      if (auto s = write(fs::path(dir) / (stem + ".svg"),
                         SvgLineChart(title, metric, points));
          !s.ok()) {
        return s;
      }
      std::string csv = "mechanism,epsilon,mean,stddev,count\n";
      for (const PlotPoint& p : points) {
        csv += absl::StrFormat("%s,%.17g,%.17g,%.17g,%d\n", p.mechanism,
                               p.epsilon, p.value.mean, p.value.stddev,
                               p.count);
      }
      if (auto s = write(fs::path(dir) / (stem + ".csv"), csv); !s.ok()) {
        return s;
      }
    }
  }
  return written;
}

}  // namespace dputil
