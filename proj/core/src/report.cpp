#include "chest/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace chest {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& why) {
  throw std::runtime_error("results CSV line " + std::to_string(line) + ": " + why);
}

double parse_double(const std::string& s, std::size_t line, const char* column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(line, std::string("bad number '") + s + "' in column " + column);
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line, const char* column) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(line, std::string("bad integer '") + s + "' in column " + column);
  }
  return v;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string db(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

bool selected(const std::vector<std::string>& allowed, const std::string& value) {
  return allowed.empty() || std::find(allowed.begin(), allowed.end(), value) != allowed.end();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) fail(1, "unexpected header '" + line + "'");
  std::vector<ResultRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 12) fail(number, "expected 12 fields, found " + std::to_string(f.size()));
    ResultRow r;
    r.config_hash = f[0];
    r.method = f[1];
    r.environment = f[2];
    if (r.method.empty() || r.environment.empty()) fail(number, "empty method or environment");
    r.snr_db = parse_double(f[3], number, "snr_db");
    r.alpha = parse_double(f[4], number, "alpha");
    r.seed = parse_u64(f[5], number, "seed");
    r.nmse_db = parse_double(f[6], number, "nmse_db");
    r.iters = parse_double(f[7], number, "iters");
    r.reverse_steps = parse_double(f[8], number, "reverse_steps");
    r.wall_ms = parse_double(f[9], number, "wall_ms");
    if (!f[10].empty()) r.rho_argmax = f[10];
    if (!f[11].empty()) r.rho_max = parse_double(f[11], number, "rho_max");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results '" + path.string() + "'");
  return read_results_csv(in);
}

double aggregate_db(std::span<const double> values_db) {
  if (values_db.empty()) throw std::invalid_argument("aggregate_db: no values");
  double sum = 0.0;
  for (double v : values_db) sum += std::pow(10.0, v / 10.0);
  return 10.0 * std::log10(sum / static_cast<double>(values_db.size()));
}

std::vector<std::filesystem::path> write_report(const std::vector<ResultRow>& rows,
                                                const ReportOptions& options,
                                                const std::filesystem::path& out_dir) {
  std::vector<const ResultRow*> kept;
  for (const auto& r : rows) {
    if (selected(options.filter.methods, r.method) &&
        selected(options.filter.environments, r.environment)) {
      kept.push_back(&r);
    }
  }
  if (kept.empty()) throw std::runtime_error("report: no rows match the filter");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + out_dir.string() + "': " + ec.message());

  // (method, environment, x) -> nmse_db values; environment "all" pools every environment.
  using Key = std::tuple<std::string, std::string, double>;
  std::map<Key, std::vector<double>> by_snr, by_alpha;
  for (const ResultRow* r : kept) {
    if (!options.alpha || r->alpha == *options.alpha) {
      by_snr[{r->method, r->environment, r->snr_db}].push_back(r->nmse_db);
      by_snr[{r->method, "all", r->snr_db}].push_back(r->nmse_db);
    }
    if (!options.snr_db || r->snr_db == *options.snr_db) {
      by_alpha[{r->method, r->environment, r->alpha}].push_back(r->nmse_db);
      by_alpha[{r->method, "all", r->alpha}].push_back(r->nmse_db);
    }
  }
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::map<Key, std::vector<double>>& table, const char* name,
                  const char* axis) {
    const auto path = out_dir / name;
    auto out = open_out(path);
    out << "method\tenvironment\t" << axis << "\tnmse_db\trows\n";
    for (const auto& [key, values] : table) {
      out << std::get<0>(key) << '\t' << std::get<1>(key) << '\t' << num(std::get<2>(key)) << '\t'
          << db(aggregate_db(values)) << '\t' << values.size() << '\n';
    }
    written.push_back(path);
  };
  emit(by_snr, "nmse_vs_snr.tsv", "snr_db");
  emit(by_alpha, "nmse_vs_alpha.tsv", "alpha");

  struct RhoStats {
    std::map<std::string, std::size_t> votes;
    double rho_sum = 0.0;
    std::size_t count = 0;
  };
  std::map<std::pair<std::string, std::string>, RhoStats> rho;
  for (const ResultRow* r : kept) {
    if (!r->rho_argmax || !r->rho_max) continue;
    auto& s = rho[{r->method, r->environment}];
    ++s.votes[*r->rho_argmax];
    s.rho_sum += *r->rho_max;
    ++s.count;
  }
  const auto path = out_dir / "rho_summary.tsv";
  auto out = open_out(path);
  out << "method\tenvironment\tmodal_argmax\targmax_share\tmean_rho_max\trows\n";
  for (const auto& [key, s] : rho) {
    const auto best = std::max_element(s.votes.begin(), s.votes.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    out << key.first << '\t' << key.second << '\t' << best->first << '\t'
        << num(static_cast<double>(best->second) / static_cast<double>(s.count)) << '\t'
        << num(s.rho_sum / static_cast<double>(s.count)) << '\t' << s.count << '\n';
  }
  written.push_back(path);
  return written;
}

}  // namespace chest
