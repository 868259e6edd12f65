#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "evossl/harness.hpp"
#include "evossl/stats.hpp"

namespace fs = std::filesystem;

namespace evossl {

namespace {

// ------------------------------------------------------------------ SVG ---

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

std::string svg_line_chart(const std::string& title,
                           const std::vector<Series>& series) {
  const double width = 640, height = 400;
  const double ml = 60, mr = 140, mt = 40, mb = 45;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + (ymin == 0 ? 1.0 : std::fabs(ymin) * 0.1);
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << width / 2 << "' y='20' text-anchor='middle' "
         "font-family='sans-serif' font-size='14'>"
      << title << "</text>\n";
  svg << "<line x1='" << ml << "' y1='" << mt + ph << "' x2='" << ml + pw
      << "' y2='" << mt + ph << "' stroke='black'/>\n";
  svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
      << mt + ph << "' stroke='black'/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double xv = xmin + (xmax - xmin) * tick / 4.0;
    const double yv = ymin + (ymax - ymin) * tick / 4.0;
    svg << "<text x='" << px(xv) << "' y='" << mt + ph + 18
        << "' text-anchor='middle' font-family='sans-serif' font-size='10'>"
        << xv << "</text>\n";
    svg << "<text x='" << ml - 6 << "' y='" << py(yv) + 3
        << "' text-anchor='end' font-family='sans-serif' font-size='10'>" << yv
        << "</text>\n";
  }
  int color = 0;
  for (const auto& s : series) {
    const char* c = kPalette[color % 8];
    svg << "<polyline fill='none' stroke='" << c << "' stroke-width='1.5' points='";
    for (const auto& [x, y] : s.points) svg << px(x) << "," << py(y) << " ";
    svg << "'/>\n";
    svg << "<text x='" << ml + pw + 8 << "' y='" << mt + 14 + 16 * color
        << "' font-family='sans-serif' font-size='11' fill='" << c << "'>"
        << s.label << "</text>\n";
    ++color;
  }
  svg << "</svg>\n";
  return svg.str();
}

struct BoxStat {
  std::string label;
  double min = 0, q1 = 0, med = 0, q3 = 0, max = 0;
};

std::string svg_box_plot(const std::string& title,
                         const std::vector<BoxStat>& boxes) {
  const double width = std::max<std::size_t>(360, 90 * boxes.size() + 120);
  const double height = 400;
  const double ml = 60, mr = 20, mt = 40, mb = 80;
  double ymin = 1e300, ymax = -1e300;
  for (const auto& b : boxes) {
    ymin = std::min(ymin, b.min);
    ymax = std::max(ymax, b.max);
  }
  if (ymin > ymax) {
    ymin = 0;
    ymax = 1;
  }
  if (ymax == ymin) ymax = ymin + (ymin == 0 ? 1.0 : std::fabs(ymin) * 0.1);
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << width / 2 << "' y='20' text-anchor='middle' "
         "font-family='sans-serif' font-size='14'>"
      << title << "</text>\n";
  svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
      << mt + ph << "' stroke='black'/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double yv = ymin + (ymax - ymin) * tick / 4.0;
    svg << "<text x='" << ml - 6 << "' y='" << py(yv) + 3
        << "' text-anchor='end' font-family='sans-serif' font-size='10'>" << yv
        << "</text>\n";
  }
  const double slot = pw / static_cast<double>(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const double cx = ml + slot * (static_cast<double>(i) + 0.5);
    const double half = std::min(28.0, slot * 0.3);
    const char* c = kPalette[i % 8];
    svg << "<line x1='" << cx << "' y1='" << py(b.min) << "' x2='" << cx
        << "' y2='" << py(b.q1) << "' stroke='black'/>\n";
    svg << "<line x1='" << cx << "' y1='" << py(b.q3) << "' x2='" << cx
        << "' y2='" << py(b.max) << "' stroke='black'/>\n";
    svg << "<rect x='" << cx - half << "' y='" << py(b.q3) << "' width='"
        << 2 * half << "' height='" << std::max(1.0, py(b.q1) - py(b.q3))
        << "' fill='" << c << "' fill-opacity='0.45' stroke='black'/>\n";
    svg << "<line x1='" << cx - half << "' y1='" << py(b.med) << "' x2='"
        << cx + half << "' y2='" << py(b.med)
        << "' stroke='black' stroke-width='2'/>\n";
    svg << "<text x='" << cx << "' y='" << mt + ph + 16
        << "' text-anchor='middle' font-family='sans-serif' font-size='10' "
           "transform='rotate(35 "
        << cx << " " << mt + ph + 16 << ")'>" << b.label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

// ----------------------------------------------------------------- data ---

double metric_of(const RunSummary& s, const std::string& metric) {
  if (metric == "macro_f1") return s.test_macro_f1;
  if (metric == "accuracy") return s.test_accuracy;
  if (metric == "optimism") return s.optimism;
  if (metric == "pseudo_added") return s.pseudo_added;
  if (metric == "ttt") return s.ttt;
  if (metric == "gtt") return static_cast<double>(s.gtt);
  throw std::logic_error("unknown metric " + metric);
}

}  // namespace

int cmd_report(const std::string& runs_dir) {
  const fs::path dir = runs_dir;
  const fs::path runs_path = dir / "runs.jsonl";
  std::vector<RunSummary> rows;
  {
    std::ifstream in(runs_path);
    if (!in) {
      std::cerr << "report: " << runs_path.string() << " not found\n";
      return 1;
    }
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      rows.push_back(summary_from_json(nlohmann::json::parse(line)));
    }
  }
  if (rows.empty()) {
    std::cerr << "report: no runs in " << runs_path.string() << "\n";
    return 1;
  }
  const fs::path report_dir = dir / "report";
  fs::create_directories(report_dir);

  std::set<std::string> methods;
  std::set<std::string> lfs;
  std::map<std::string, int> dataset_classes;
  for (const auto& r : rows) {
    methods.insert(r.method);
    lfs.insert(lf_label(r.lf));
    dataset_classes[r.dataset] = r.num_classes;
  }
  const std::vector<std::string> candidates = [&] {
    std::vector<std::string> c;
    for (const auto& m : {"ccssl", "eassl"})
      if (methods.count(m)) c.push_back(m);
    return c;
  }();
  const bool have_baselines =
      methods.count("st") && methods.count("ls") && methods.count("hco");

  // Wins per metric (only meaningful with the full baseline roster).
  std::map<std::string, WinTable> wins;  // metric -> table
  if (have_baselines && !candidates.empty()) {
    for (const std::string metric : {"macro_f1", "accuracy"}) {
      CellMap cells;
      for (const auto& r : rows)
        cells[{r.dataset, lf_label(r.lf)}][r.method][r.seed] =
            metric_of(r, metric);
      wins[metric] = count_wins(cells, candidates, {"st", "ls", "hco"}, 0.01, 3);
    }
  }

  // Descriptive statistics over per-dataset medians, split by class count.
  {
    std::ofstream csv(report_dir / "descriptive_stats.csv");
    csv << "metric,class_split,lf,method,n_datasets,min,median,iqr,max,wins\n";
    for (const std::string metric : {"macro_f1", "accuracy"}) {
      for (const bool multiclass : {false, true}) {
        for (const auto& lf : lfs) {
          for (const auto& method : methods) {
            // dataset -> seed scores
            std::map<std::string, std::vector<double>> per_dataset;
            for (const auto& r : rows) {
              if (r.method != method || lf_label(r.lf) != lf) continue;
              if ((dataset_classes[r.dataset] > 2) != multiclass) continue;
              per_dataset[r.dataset].push_back(metric_of(r, metric));
            }
            if (per_dataset.empty()) continue;
            std::vector<double> medians;
            for (auto& [ds, scores] : per_dataset)
              medians.push_back(median(scores));
            int win_count = -1;
            if (wins.count(metric)) {
              const auto it = wins[metric].win_counts.find({method, lf});
              if (it != wins[metric].win_counts.end()) {
                win_count = 0;
                // Restrict the count to this class split.
                for (const auto& [key, ms] : wins[metric].cell_winners) {
                  if (key.second != lf) continue;
                  if ((dataset_classes[key.first] > 2) != multiclass) continue;
                  win_count += static_cast<int>(
                      std::count(ms.begin(), ms.end(), method));
                }
              }
            }
            csv << metric << "," << (multiclass ? "multiclass" : "binary")
                << "," << lf << "," << method << "," << medians.size() << ","
                << quantile(medians, 0.0) << "," << median(medians) << ","
                << iqr(medians) << "," << quantile(medians, 1.0) << ",";
            if (win_count >= 0)
              csv << win_count;
            else
              csv << "-";
            csv << "\n";
          }
        }
      }
    }
  }

  // Per-dataset median(IQR) tables with significance shading flags.
  for (const std::string metric : {"macro_f1", "accuracy"}) {
    std::ofstream csv(report_dir / ("per_dataset_" + metric + ".csv"));
    csv << "dataset,num_classes,lf,method,median,iqr,n_seeds,significant\n";
    std::map<std::tuple<std::string, std::string, std::string>,
             std::vector<double>>
        cell;  // (dataset, lf, method) -> seed scores
    for (const auto& r : rows)
      cell[{r.dataset, lf_label(r.lf), r.method}].push_back(
          metric_of(r, metric));
    for (auto& [key, scores] : cell) {
      const auto& [dataset, lf, method] = key;
      bool significant = false;
      if (wins.count(metric)) {
        const auto it = wins[metric].cell_winners.find({dataset, lf});
        if (it != wins[metric].cell_winners.end())
          significant = std::count(it->second.begin(), it->second.end(),
                                   method) > 0;
      }
      csv << dataset << "," << dataset_classes[dataset] << "," << lf << ","
          << method << "," << median(scores) << "," << iqr(scores) << ","
          << scores.size() << "," << (significant ? 1 : 0) << "\n";
    }
  }

  // Trajectory plots: median best-so-far fitness and diversity by generation.
  {
    struct TrajPoint {
      std::map<int, std::vector<double>> best, jaccard, numeric, boolean_;
    };
    std::map<std::string, TrajPoint> by_method;
    const fs::path traj_dir = dir / "trajectories";
    if (fs::exists(traj_dir)) {
      for (const auto& entry : fs::directory_iterator(traj_dir)) {
        if (entry.path().extension() != ".jsonl") continue;
        std::ifstream in(entry.path());
        std::string line, method;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          const nlohmann::json j = nlohmann::json::parse(line);
          if (j.value("type", "") == "header") {
            method = j.value("method", "unknown");
          } else if (j.value("type", "") == "generation") {
            auto& tp = by_method[method];
            const int gen = j.at("gen").get<int>();
            tp.best[gen].push_back(j.at("best_so_far_F").get<double>());
            const auto& div = j.at("diversity");
            tp.jaccard[gen].push_back(div.at("maskJaccard").get<double>());
            tp.numeric[gen].push_back(div.at("policyNumeric").get<double>());
            tp.boolean_[gen].push_back(div.at("policyBoolean").get<double>());
          }
        }
      }
    }
    if (!by_method.empty()) {
      std::ofstream csv(report_dir / "trajectories.csv");
      csv << "method,gen,median_best_so_far,median_maskJaccard,"
             "median_policyNumeric,median_policyBoolean,n_runs\n";
      std::vector<Series> fitness_series;
      std::map<std::string, std::vector<Series>> diversity_series;
      for (auto& [method, tp] : by_method) {
        Series fit_s{method, {}};
        Series jac_s{method, {}}, num_s{method, {}}, boo_s{method, {}};
        for (auto& [gen, values] : tp.best) {
          const double med = median(values);
          csv << method << "," << gen << "," << med << ","
              << median(tp.jaccard[gen]) << "," << median(tp.numeric[gen])
              << "," << median(tp.boolean_[gen]) << "," << values.size()
              << "\n";
          fit_s.points.push_back({static_cast<double>(gen), med});
          jac_s.points.push_back({static_cast<double>(gen), median(tp.jaccard[gen])});
          num_s.points.push_back({static_cast<double>(gen), median(tp.numeric[gen])});
          boo_s.points.push_back({static_cast<double>(gen), median(tp.boolean_[gen])});
        }
        fitness_series.push_back(std::move(fit_s));
        diversity_series["maskJaccard"].push_back(std::move(jac_s));
        diversity_series["policyNumeric"].push_back(std::move(num_s));
        diversity_series["policyBoolean"].push_back(std::move(boo_s));
      }
      write_text(report_dir / "fitness_trajectory.svg",
                 svg_line_chart("median best-so-far fitness per generation",
                                fitness_series));
      for (const auto& [name, series] : diversity_series)
        write_text(report_dir / ("diversity_" + name + ".svg"),
                   svg_line_chart("median " + name + " per generation", series));
    }
  }

  // Box-plot data for the diagnostic metrics.
  {
    std::ofstream csv(report_dir / "boxplot_data.csv");
    csv << "metric,method,lf,n,min,q1,median,q3,max\n";
    for (const std::string metric : {"ttt", "gtt", "pseudo_added", "optimism"}) {
      std::vector<BoxStat> boxes;
      for (const auto& method : methods) {
        const bool search_only = metric == "ttt" || metric == "gtt";
        if (search_only && method != "ccssl" && method != "eassl") continue;
        for (const auto& lf : lfs) {
          std::vector<double> values;
          for (const auto& r : rows) {
            if (r.method != method || lf_label(r.lf) != lf) continue;
            if (search_only && !r.has_target_cost) continue;
            values.push_back(metric_of(r, metric));
          }
          if (values.empty()) continue;
          BoxStat b;
          b.label = method + "@" + lf;
          b.min = quantile(values, 0.0);
          b.q1 = quantile(values, 0.25);
          b.med = median(values);
          b.q3 = quantile(values, 0.75);
          b.max = quantile(values, 1.0);
          csv << metric << "," << method << "," << lf << "," << values.size()
              << "," << b.min << "," << b.q1 << "," << b.med << "," << b.q3
              << "," << b.max << "\n";
          boxes.push_back(std::move(b));
        }
      }
      if (!boxes.empty())
        write_text(report_dir / ("box_" + metric + ".svg"),
                   svg_box_plot(metric + " distribution", boxes));
    }
  }

  const nlohmann::json meta{
      {"quartiles", "linear interpolation between order statistics"},
      {"iqr_convention",
       "descriptive tables: Q3-Q1 over per-dataset medians of seed scores; "
       "per-dataset tables: Q3-Q1 over seed scores"},
      {"win_criterion",
       "paired Wilcoxon vs each of st/ls/hco at alpha=0.01 with Bonferroni "
       "divisor 3, requiring the greater median"},
      {"rows", rows.size()}};
  write_text(report_dir / "report_meta.json", meta.dump(2) + "\n");

  std::cout << "report written to " << report_dir.string() << "\n";
  return 0;
}

}  // namespace evossl
