#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "sparselab/csv.hpp"
#include "sparselab/experiments.hpp"
#include "sparselab/rng.hpp"
#include "sparselab/svg_chart.hpp"
#include "sparselab/theory.hpp"

namespace sparselab {

namespace {

struct MetricField {
  const char* metric;
  const char* split;
  double MetricRow::* field;
};

constexpr MetricField kSeriesFields[] = {
    {"mcc", "id", &MetricRow::mcc_id},   {"mcc", "ood", &MetricRow::mcc_ood},
    {"auc", "id", &MetricRow::auc_id},   {"auc", "ood", &MetricRow::auc_ood},
    {"acc", "id", &MetricRow::acc_id},   {"acc", "ood", &MetricRow::acc_ood},
};

const std::vector<std::pair<const char*, double MetricRow::*>>& metric_columns() {
  static const std::vector<std::pair<const char*, double MetricRow::*>> cols = {
      {"mcc_id", &MetricRow::mcc_id},
      {"mcc_ood", &MetricRow::mcc_ood},
      {"auc_id", &MetricRow::auc_id},
      {"auc_ood", &MetricRow::auc_ood},
      {"acc_id", &MetricRow::acc_id},
      {"acc_ood", &MetricRow::acc_ood},
      {"support_precision", &MetricRow::support_precision},
      {"support_recall", &MetricRow::support_recall},
      {"support_f1", &MetricRow::support_f1},
      {"mean_active", &MetricRow::mean_active},
      {"dict_cosine", &MetricRow::dict_cosine},
      {"dict_norm_ratio", &MetricRow::dict_norm_ratio},
  };
  return cols;
}

void sort_records(std::vector<ExperimentRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const ExperimentRecord& a, const ExperimentRecord& b) {
              if (a.experiment != b.experiment) return a.experiment < b.experiment;
              const size_t n = std::min(a.grid.size(), b.grid.size());
              for (size_t i = 0; i < n; ++i) {
                if (a.grid[i].second != b.grid[i].second)
                  return a.grid[i].second < b.grid[i].second;
              }
              if (a.method != b.method) return a.method < b.method;
              if (a.sae_kind != b.sae_kind) return a.sae_kind < b.sae_kind;
              return a.seed < b.seed;
            });
}

std::string series_label(const ExperimentRecord& rec,
                         const std::set<std::string>& varying_keys) {
  std::string label = rec.method;
  if (!rec.sae_kind.empty() && rec.method != "sae_" + rec.sae_kind)
    label += "(" + rec.sae_kind + ")";
  for (size_t i = 1; i < rec.grid.size(); ++i) {
    if (varying_keys.count(rec.grid[i].first))
      label += " " + rec.grid[i].first + "=" + fmt_g(rec.grid[i].second, 6);
  }
  return label;
}

void emit_series(const std::vector<ExperimentRecord>& records,
                 const std::filesystem::path& out_dir, const std::string& format) {
  if (records.empty()) return;
  const std::string& experiment = records.front().experiment;
  const std::string x_key = records.front().grid.empty() ? "index"
                                                         : records.front().grid[0].first;

  // Grid keys (beyond x) that take more than one value get folded into the
  // series label so sweeps with several cells stay separated.
  std::set<std::string> varying;
  {
    std::map<std::string, std::set<double>> values;
    for (const auto& rec : records)
      for (size_t i = 1; i < rec.grid.size(); ++i)
        values[rec.grid[i].first].insert(rec.grid[i].second);
    for (const auto& [key, vals] : values)
      if (vals.size() > 1) varying.insert(key);
  }

  const bool do_svg = format.find("svg") != std::string::npos;
  for (const auto& mf : kSeriesFields) {
    // (series label -> x -> values over seeds)
    std::map<std::string, std::map<double, std::vector<double>>> groups;
    for (const auto& rec : records) {
      if (rec.method == "skipped") continue;
      const double v = rec.metrics.*(mf.field);
      if (!std::isfinite(v)) continue;
      const double x = rec.grid.empty() ? 0.0 : rec.grid[0].second;
      groups[series_label(rec, varying)][x].push_back(v);
    }
    if (groups.empty()) continue;

    const std::string stem =
        experiment + "_" + mf.metric + "_" + mf.split;
    CsvTable table;
    table.header = {x_key, "series", "mean", "lo", "hi", "n_seeds"};
    std::vector<ChartSeries> chart;
    for (const auto& [label, xs] : groups) {
      ChartSeries cs;
      cs.label = label;
      for (const auto& [x, vals] : xs) {
        double mean = 0, lo = vals.front(), hi = vals.front();
        for (double v : vals) {
          mean += v;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        mean /= static_cast<double>(vals.size());
        table.rows.push_back({fmt_g17(x), label, fmt_g17(mean), fmt_g17(lo),
                              fmt_g17(hi), std::to_string(vals.size())});
        cs.x.push_back(x);
        cs.y.push_back(mean);
        cs.y_lo.push_back(lo);
        cs.y_hi.push_back(hi);
      }
      chart.push_back(std::move(cs));
    }
    write_csv(out_dir / (stem + ".csv"), table);
    if (do_svg) {
      ChartSpec spec;
      spec.title = experiment + ": " + mf.metric + " (" + mf.split + ")";
      spec.x_label = x_key;
      spec.y_label = std::string(mf.metric) + " (" + mf.split + ")";
      spec.log_x = (x_key == "p" || x_key == "lambda");
      spec.clamp_unit_y = true;
      write_svg_line_chart(out_dir / (stem + ".svg"), spec, chart);
    }
  }
}

}  // namespace

void emit_report(std::vector<ExperimentRecord> records,
                 const std::filesystem::path& out_dir, const std::string& format) {
  if (records.empty()) throw std::invalid_argument("emit_report: no records");
  std::filesystem::create_directories(out_dir);
  sort_records(records);
  const std::string& experiment = records.front().experiment;

  // Flattened records. Wall time goes to the timing log only, so reruns with
  // the same config and master seed are byte-identical.
  CsvTable table;
  table.header = {"experiment"};
  for (const auto& [key, value] : records.front().grid) table.header.push_back(key);
  table.header.insert(table.header.end(), {"method", "sae_kind", "seed"});
  for (const auto& [name, field] : metric_columns()) table.header.push_back(name);

  std::ofstream timing(out_dir / (experiment + "_timing.log"));
  for (const auto& rec : records) {
    if (rec.grid.size() != records.front().grid.size())
      throw std::logic_error("emit_report: inconsistent grid keys");
    std::vector<std::string> row{rec.experiment};
    for (const auto& [key, value] : rec.grid) row.push_back(fmt_g17(value));
    row.push_back(rec.method);
    row.push_back(rec.sae_kind);
    row.push_back(std::to_string(rec.seed));
    for (const auto& [name, field] : metric_columns())
      row.push_back(fmt_g17(rec.metrics.*field));
    table.rows.push_back(std::move(row));

    timing << rec.method;
    if (!rec.sae_kind.empty()) timing << '(' << rec.sae_kind << ')';
    timing << ' ';
    for (const auto& [key, value] : rec.grid)
      timing << key << '=' << fmt_g(value, 6) << ' ';
    timing << "seed=" << rec.seed << " seconds=" << fmt_g(rec.wall_time, 6) << '\n';
  }
  write_csv(out_dir / (experiment + "_records.csv"), table);
  emit_series(records, out_dir, format);
}

void report_from_csv(const std::filesystem::path& records_csv,
                     const std::filesystem::path& out_dir,
                     const std::string& format) {
  const CsvTable table = read_csv(records_csv);
  if (table.header.empty() || table.header.front() != "experiment")
    throw std::invalid_argument("report: not a records CSV: " + records_csv.string());
  size_t method_col = 0;
  for (size_t i = 1; i < table.header.size(); ++i) {
    if (table.header[i] == "method") {
      method_col = i;
      break;
    }
  }
  if (method_col == 0 || method_col + 2 >= table.header.size())
    throw std::invalid_argument("report: malformed records CSV header");

  std::vector<ExperimentRecord> records;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::invalid_argument("report: ragged records CSV");
    ExperimentRecord rec;
    rec.experiment = row[0];
    for (size_t i = 1; i < method_col; ++i)
      rec.grid.emplace_back(table.header[i], std::stod(row[i]));
    rec.method = row[method_col];
    rec.sae_kind = row[method_col + 1];
    rec.seed = std::stoull(row[method_col + 2]);
    size_t col = method_col + 3;
    for (const auto& [name, field] : metric_columns()) {
      if (col >= row.size()) break;
      rec.metrics.*field = std::stod(row[col]);
      ++col;
    }
    records.push_back(std::move(rec));
  }
  std::filesystem::create_directories(out_dir);
  sort_records(records);
  emit_series(records, out_dir, format);
}

void run_theory_grid(const ExperimentConfig& cfg) {
  const int n = cfg.theory_grid_points;
  if (n < 2) throw std::invalid_argument("theory-grid: need at least 2 grid points");
  std::filesystem::create_directories(cfg.out_dir);

  // Multipliers of pi chosen so every (phi, theta) pair stays at least 0.02
  // rad away from the validity boundaries and the phi+theta = pi pole.
  const double lo = 0.52, hi = 0.98;
  std::vector<double> mult(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    mult[static_cast<size_t>(i)] = lo + (hi - lo) * i / (n - 1);

  CsvTable table;
  table.header = {"phi", "theta", "case", "acc_analytic", "acc_simulated", "n"};
  std::map<double, ChartSeries> series;
  constexpr double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      ToyGeometry g{mult[static_cast<size_t>(i)] * pi,
                    mult[static_cast<size_t>(j)] * pi};
      const CaseResult c = classify_case(g);
      const double analytic = analytic_ood_accuracy(g);
      const std::uint64_t seed = seed_combine(
          seed_combine(seed_combine(cfg.master_seed, "theory"),
                       static_cast<std::uint64_t>(i)),
          static_cast<std::uint64_t>(j));
      const double simulated = simulate_ood_accuracy(g, cfg.theory_mc_samples, seed);
      table.rows.push_back({fmt_g17(g.phi), fmt_g17(g.theta),
                            c.value == ToyCase::Case1 ? "1" : "2",
                            fmt_g17(analytic), fmt_g17(simulated),
                            std::to_string(cfg.theory_mc_samples)});
      ChartSeries& cs = series[g.theta];
      if (cs.label.empty()) cs.label = "theta=" + fmt_g(g.theta, 4);
      cs.x.push_back(g.phi);
      cs.y.push_back(analytic);
    }
  }
  const std::filesystem::path out_dir(cfg.out_dir);
  write_csv(out_dir / "theory_grid.csv", table);
  if (cfg.format.find("svg") != std::string::npos) {
    ChartSpec spec;
    spec.title = "toy-model OOD accuracy (analytic)";
    spec.x_label = "phi (rad)";
    spec.y_label = "accuracy";
    spec.clamp_unit_y = true;
    std::vector<ChartSeries> chart;
    for (auto& [theta, cs] : series) chart.push_back(std::move(cs));
    write_svg_line_chart(out_dir / "theory_grid.svg", spec, chart);
  }
}

}  // namespace sparselab
