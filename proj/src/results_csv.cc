// results.csv reader and writer. Doubles are written in shortest
// round-trip form so re-read records aggregate to identical summaries.

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "exptree/experiment.h"

namespace exptree {
namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse(const std::string& s, const char* what) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string("results.csv: bad ") + what +
                                " value '" + s + "'");
  }
  return v;
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kResultsHeader << '\n';
  for (const auto& r : records) {
    out << r.algo << ',' << r.dataset << ',' << r.n_experts << ',' << r.n_arms
        << ',' << r.g << ',' << r.regions << ',' << r.horizon << ',' << r.seed
        << ',' << fmt(r.avg_reward) << ','
        << (r.oracle_gap ? fmt(*r.oracle_gap) : "") << ','
        << fmt(r.step_time_us) << ','
        << (r.depth ? std::to_string(*r.depth) : "") << ','
        << (r.leaves ? std::to_string(*r.leaves) : "") << '\n';
  }
}

void write_results_csv(const std::filesystem::path& path,
                       const std::vector<RunRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_results_csv(out, records);
}

std::vector<RunRecord> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("results.csv: empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) {
    throw std::invalid_argument("results.csv: unexpected header");
  }
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 13) {
      throw std::invalid_argument("results.csv: expected 13 fields");
    }
    RunRecord r;
    r.algo = f[0];
    r.dataset = f[1];
    r.n_experts = parse<int>(f[2], "N");
    r.n_arms = parse<int>(f[3], "K");
    r.g = parse<int>(f[4], "g");
    r.regions = parse<int>(f[5], "regions");
    r.horizon = parse<std::int64_t>(f[6], "T");
    r.seed = parse<std::uint64_t>(f[7], "seed");
    r.avg_reward = parse<double>(f[8], "avg_reward");
    if (!f[9].empty()) r.oracle_gap = parse<double>(f[9], "oracle_gap");
    r.step_time_us = parse<double>(f[10], "step_time_us");
    if (!f[11].empty()) r.depth = parse<int>(f[11], "depth");
    if (!f[12].empty()) r.leaves = parse<int>(f[12], "leaves");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace exptree
