#include "caprob/report.h"

#include "caprob/error.h"
#include "caprob/rng.h"
#include "caprob/stats.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace caprob {

namespace fs = std::filesystem;

namespace {

std::string num(double v, int digits = 12) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool parse_size(const std::string& s, long long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtoll(s.c_str(), &end, 10);
  return *end == '\0' && out >= 0;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

const char* units_name(EntropyUnits u) { return u == EntropyUnits::Discrete ? "discrete" : "differential"; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path.string() + "'");
}

// Reference medians, shown for comparison only.
const std::vector<double> kRefEpsilon{0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
const std::vector<double> kRefSa{23.1, 18.3, 13.7, 8.3, 6.2, 5.0};
const std::vector<double> kRefSm{12.7, 11.6, 10.4, 7.4, 4.9, 3.9};

std::vector<std::string> slack_sources(const SweepResult& r) {
  std::vector<std::string> out;
  bool analytic = false;
  std::set<std::string> est;
  for (const auto& c : r.cells) {
    if (c.slack_analytic) analytic = true;
    for (const auto& [name, _] : c.slack_estimated) est.insert(name);
  }
  if (analytic) out.push_back("analytic");
  out.insert(out.end(), est.begin(), est.end());
  return out;
}

const SlackRecord* record_for(const CellResult& c, const std::string& source) {
  if (source == "analytic") return c.slack_analytic ? &*c.slack_analytic : nullptr;
  auto it = c.slack_estimated.find(source);
  return it == c.slack_estimated.end() ? nullptr : &it->second;
}

}  // namespace

// ----------------------------------------------------------- feature dumps

FeatureDump parse_feature_dump(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::MalformedHeader, "empty feature dump");
  const auto head = split(strip_cr(line), ',');
  long long n = 0, d = 0;
  if (head.size() != 3 || !parse_size(head[0], n) || !parse_size(head[1], d) || d < 1) {
    throw Error(ErrorKind::MalformedHeader, "expected 'n,d,label', got '" + strip_cr(line) + "'");
  }
  FeatureDump dump;
  dump.label = head[2];
  dump.values.resize(n, d);
  long long row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    if (row >= n) {
      throw Error(ErrorKind::RowCountMismatch, "more than n=" + std::to_string(n) + " rows");
    }
    const auto cells = split(line, ',');
    if (static_cast<long long>(cells.size()) != d) {
      throw Error(ErrorKind::RowLengthMismatch, "row " + std::to_string(row) + " has " +
                                                    std::to_string(cells.size()) + " values, expected " +
                                                    std::to_string(d));
    }
    for (long long c = 0; c < d; ++c) {
      const std::string& s = cells[static_cast<std::size_t>(c)];
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || *end != '\0' || !std::isfinite(v)) {
        throw Error(ErrorKind::NonFiniteValue, "row " + std::to_string(row) + ", col " + std::to_string(c) +
                                                   ": '" + s + "'");
      }
      dump.values(row, c) = v;
    }
    ++row;
  }
  if (row != n) {
    throw Error(ErrorKind::RowCountMismatch, "header says n=" + std::to_string(n) + ", found " +
                                                 std::to_string(row) + " rows");
  }
  return dump;
}

FeatureDump read_feature_dump(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_feature_dump(ss.str());
}

void write_feature_dump(const fs::path& path, const FeatureDump& dump) {
  if (dump.label.find_first_of(",\n") != std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, "label may not contain ',' or newlines");
  }
  std::ostringstream out;
  out << dump.values.rows() << ',' << dump.values.cols() << ',' << dump.label << '\n';
  for (Eigen::Index i = 0; i < dump.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < dump.values.cols(); ++j) {
      if (!std::isfinite(dump.values(i, j))) {
        throw Error(ErrorKind::NonFiniteValue, "row " + std::to_string(i) + ", col " + std::to_string(j));
      }
      if (j) out << ',';
      out << num(dump.values(i, j), 17);
    }
    out << '\n';
  }
  write_text(path, out.str());
}

// ------------------------------------------------------------------ cells

void write_cells_csv(std::ostream& out, const SweepResult& r) {
  std::set<std::string> extra_keys;
  for (const auto& c : r.cells) {
    for (const auto& [k, _] : c.extras) extra_keys.insert(k);
  }
  std::vector<std::string> cols = r.axis_names;
  for (const char* c : {"replicate", "seed", "source", "cap", "rob_coupling", "leak", "task_entropy",
                        "channel", "rob", "slack", "violated", "entropy_units"}) {
    cols.emplace_back(c);
  }
  for (const auto& k : extra_keys) cols.push_back("x_" + k);

  out << "# schema: " << kCellsSchema << "; sweep: " << r.name << '\n';
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';

  auto row = [&](const CellResult& c, const std::string& source, const SlackRecord* rec) {
    for (const auto& a : r.axis_names) out << num(c.id.at(a)) << ',';
    out << c.id.replicate << ',' << c.id.seed << ',' << source;
    if (rec) {
      const auto& t = rec->terms;
      out << ',' << num(t.cap) << ',' << num(t.rob_coupling) << ',' << num(t.leak) << ','
          << num(t.task_entropy) << ',' << num(t.channel) << ',' << num(rec->rob) << ','
          << num(rec->slack) << ',' << (rec->violated ? 1 : 0) << ',' << units_name(t.entropy_units);
    } else {
      out << ",,,,,,,,,";
    }
    for (const auto& k : extra_keys) {
      out << ',';
      auto it = c.extras.find(k);
      if (it != c.extras.end()) out << num(it->second);
    }
    out << '\n';
  };

  for (const auto& c : r.cells) {
    if (!c.slack_analytic && c.slack_estimated.empty()) {
      row(c, "-", nullptr);
      continue;
    }
    if (c.slack_analytic) row(c, "analytic", &*c.slack_analytic);
    for (const auto& [name, rec] : c.slack_estimated) row(c, name, &rec);
  }
}

// ---------------------------------------------------------------- summary

void write_summary_md(std::ostream& out, const SweepResult& r, const RunConfig& config) {
  out << "# " << r.name << "\n\n";
  out << "- command: " << config.command << "\n";
  out << "- preset: " << config.preset << "\n";
  out << "- run id: " << run_id(config) << "\n";
  out << "- cells: " << r.cells.size() << "\n";
  out << "- violations: " << r.violations << "\n\n";

  if (!r.summary.empty()) {
    out << "## Summary\n\n| key | value |\n|---|---|\n";
    for (const auto& [k, v] : r.summary) out << "| " << k << " | " << num(v, 6) << " |\n";
    out << '\n';
  }

  const auto sources = slack_sources(r);
  const bool has_eps = std::find(r.axis_names.begin(), r.axis_names.end(), "epsilon") != r.axis_names.end();
  if (!sources.empty() && has_eps) {
    std::set<double> eps_values;
    for (const auto& c : r.cells) eps_values.insert(c.id.at("epsilon"));
    out << "## Slack by epsilon (median [IQR], nats)\n\n| epsilon |";
    for (const auto& s : sources) out << ' ' << s << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < sources.size(); ++i) out << "---|";
    out << '\n';
    for (double e : eps_values) {
      out << "| " << num(e, 6) << " |";
      for (const auto& s : sources) {
        std::vector<double> v;
        for (const auto& c : r.cells) {
          if (c.id.at("epsilon") != e) continue;
          const auto* rec = record_for(c, s);
          if (rec && std::isfinite(rec->slack)) v.push_back(rec->slack);
        }
        if (v.empty()) {
          out << " - |";
        } else {
          out << ' ' << num(median_of(v), 4) << " [" << num(quantile_of(v, 0.25), 4) << ", "
              << num(quantile_of(v, 0.75), 4) << "] |";
        }
      }
      out << '\n';
    }
    out << '\n';
    if (r.name == "bound") {
      out << "### Reference medians, not asserted\n\n| epsilon |";
      for (double e : kRefEpsilon) out << ' ' << num(e, 3) << " |";
      out << "\n|---|";
      for (std::size_t i = 0; i < kRefEpsilon.size(); ++i) out << "---|";
      out << "\n| S_a |";
      for (double v : kRefSa) out << ' ' << num(v, 3) << " |";
      out << "\n| S_m |";
      for (double v : kRefSm) out << ' ' << num(v, 3) << " |";
      out << "\n\n";
    }
  }

  if (!r.groups.empty()) {
    std::map<std::string, std::pair<int, int>> tally;  // source -> (groups, significant)
    for (const auto& g : r.groups) {
      auto& t = tally[g.source];
      ++t.first;
      if (g.significant) ++t.second;
    }
    out << "## Groups\n\n| source | groups | significant |\n|---|---|---|\n";
    for (const auto& [s, t] : tally) out << "| " << s << " | " << t.first << " | " << t.second << " |\n";
    out << '\n';
  }
}

std::string run_id(const RunConfig& config) {
  const auto h = SeedHasher(0).add(config.to_json().dump()).value();
  std::ostringstream s;
  s << config.command << '-' << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

fs::path emit_results(const SweepResult& result, const RunConfig& config) {
  const fs::path dir = fs::path(config.out) / run_id(config);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create '" + dir.string() + "': " + ec.message());
  std::ostringstream cells, summary;
  write_cells_csv(cells, result);
  write_summary_md(summary, result, config);
  write_text(dir / "cells.csv", cells.str());
  write_text(dir / "summary.md", summary.str());
  write_text(dir / "effective-config.json", config.to_json().dump(2) + "\n");
  return dir;
}

}  // namespace caprob
