#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairlp/analysis.hpp"
#include "fairlp/curve.hpp"
#include "fairlp/errors.hpp"
#include "fairlp/lp.hpp"
#include "fairlp/prob.hpp"

namespace fairlp::io {

using json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// JSON object formats
// ---------------------------------------------------------------------------

inline json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline Matrix matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw InvalidInput("matrix JSON needs rows, cols, data");
  std::size_t rows = j.at("rows").get<std::size_t>();
  std::size_t cols = j.at("cols").get<std::size_t>();
  std::vector<double> data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw InvalidInput("matrix JSON data length mismatch");
  Matrix m(rows, cols);
  m.data() = std::move(data);
  return m;
}

inline json channel_to_json(const Channel& k) { return matrix_to_json(k.matrix()); }

inline Channel channel_from_json(const json& j, double tol = kProbTol) {
  return Channel(matrix_from_json(j), tol);
}

/// A-conditioned channels serialize as an array of two channel objects; a
/// single object loads as a tied (group-blind) pair.
inline json group_channels_to_json(const GroupChannels& g) {
  return json::array({channel_to_json(g[0]), channel_to_json(g[1])});
}

inline GroupChannels group_channels_from_json(const json& j, double tol = kProbTol) {
  if (j.is_array()) {
    if (j.size() != 2) throw InvalidInput("channel array must have exactly two entries");
    return GroupChannels{{channel_from_json(j[0], tol), channel_from_json(j[1], tol)}};
  }
  return GroupChannels::tied(channel_from_json(j, tol));
}

inline json joint_to_json(const JointDistribution& joint) {
  std::vector<double> data;
  data.reserve(kNumGroups * joint.nx() * joint.ny());
  for (std::size_t a = 0; a < kNumGroups; ++a)
    for (std::size_t x = 0; x < joint.nx(); ++x)
      for (std::size_t y = 0; y < joint.ny(); ++y) data.push_back(joint.p(a, x, y));
  return json{{"na", kNumGroups}, {"nx", joint.nx()}, {"ny", joint.ny()}, {"data", data}};
}

inline JointDistribution joint_from_json(const json& j) {
  if (!j.is_object() || j.value("na", 0u) != kNumGroups)
    throw InvalidInput("joint JSON needs na = 2");
  return JointDistribution(j.at("nx").get<std::size_t>(), j.at("ny").get<std::size_t>(),
                           j.at("data").get<std::vector<double>>());
}

inline json pred_joint_to_json(const PredictionJoint& pj) {
  std::vector<double> data;
  data.reserve(pj.ny() * pj.ny() * kNumGroups);
  for (std::size_t yh = 0; yh < pj.ny(); ++yh)
    for (std::size_t y = 0; y < pj.ny(); ++y)
      for (std::size_t a = 0; a < kNumGroups; ++a) data.push_back(pj.q(yh, y, a));
  return json{{"ny", pj.ny()}, {"data", data}};
}

inline PredictionJoint pred_joint_from_json(const json& j) {
  return PredictionJoint(j.at("ny").get<std::size_t>(), j.at("data").get<std::vector<double>>());
}

/// Self-describing dump for cross-checking against external solvers.
inline json lp_to_json(const LinearProgram& lp) {
  return json{{"num_vars", lp.num_vars},
              {"objective", lp.objective},
              {"eq", json{{"rows", lp.eq_rows}, {"rhs", lp.eq_rhs}}},
              {"ub", json{{"rows", lp.ub_rows}, {"rhs", lp.ub_rhs}}},
              {"bounds", "z >= 0"},
              {"names", lp.names}};
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("bad JSON in " + path + ": " + e.what());
  }
  return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  out << text;
}

inline void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

/// Count tensor parsed from a dataset or counts CSV.
struct CountTensor {
  std::size_t nx = 0, ny = 0;
  std::vector<long long> counts;  // (a, x, y) flattened
};

namespace detail {

inline std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(strip(cell));
  return out;
}

inline long long parse_ll(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("not an integer: '" + s + "'", line);
  }
}

struct RawRecord {
  long long a, x, y, count;
};

inline CountTensor assemble_counts(const std::vector<RawRecord>& records) {
  long long max_x = -1, max_y = -1;
  for (const auto& r : records) {
    max_x = std::max(max_x, r.x);
    max_y = std::max(max_y, r.y);
  }
  CountTensor out;
  out.nx = static_cast<std::size_t>(std::max<long long>(max_x + 1, 2));
  out.ny = static_cast<std::size_t>(std::max<long long>(max_y + 1, 2));
  out.counts.assign(kNumGroups * out.nx * out.ny, 0);
  for (const auto& r : records)
    out.counts[(static_cast<std::size_t>(r.a) * out.nx + static_cast<std::size_t>(r.x)) * out.ny +
               static_cast<std::size_t>(r.y)] += r.count;
  return out;
}

inline std::vector<RawRecord> parse_records(const std::string& path, bool with_count) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  const std::string expect = with_count ? "a,x,y,count" : "a,x,y";
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++lineno;
  {
    std::string header;
    for (char c : strip(line))
      if (c != ' ') header += c;
    if (header != expect) throw ParseError("expected header '" + expect + "'", lineno);
  }
  std::vector<RawRecord> records;
  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != (with_count ? 4u : 3u))
      throw ParseError("expected " + std::to_string(with_count ? 4 : 3) + " columns", lineno);
    RawRecord r{parse_ll(cells[0], lineno), parse_ll(cells[1], lineno),
                parse_ll(cells[2], lineno), with_count ? parse_ll(cells[3], lineno) : 1};
    if (r.a < 0 || r.a >= static_cast<long long>(kNumGroups))
      throw ParseError("a must be 0 or 1", lineno);
    if (r.x < 0 || r.y < 0) throw ParseError("x and y must be >= 0", lineno);
    if (r.count < 0) throw ParseError("count must be >= 0", lineno);
    records.push_back(r);
  }
  return records;
}

}  // namespace detail

/// One row per record: header `a,x,y`, integer-coded categories.
inline CountTensor load_dataset_csv(const std::string& path) {
  return detail::assemble_counts(detail::parse_records(path, /*with_count=*/false));
}

/// Aggregated form: header `a,x,y,count`.
inline CountTensor load_counts_csv(const std::string& path) {
  return detail::assemble_counts(detail::parse_records(path, /*with_count=*/true));
}

/// Columns `D,disc,breakpoint_flag`; breakpoint rows carry flag 1. Comment
/// lines (leading '#') carry the resolved configuration.
inline std::string curve_to_csv(const TradeoffCurve& curve,
                                const std::vector<std::pair<double, double>>& breakpoint_discs,
                                const std::string& config_comment) {
  std::string out;
  if (!config_comment.empty()) out += "# " + config_comment + "\n";
  out += "D,disc,breakpoint_flag\n";
  std::size_t bp = 0;
  for (const auto& p : curve.points) {
    while (bp < breakpoint_discs.size() && breakpoint_discs[bp].first <= p.budget) {
      out += format_double(breakpoint_discs[bp].first) + "," +
             format_double(breakpoint_discs[bp].second) + ",1\n";
      ++bp;
    }
    out += format_double(p.budget) + "," + format_double(p.disc) + ",0\n";
  }
  for (; bp < breakpoint_discs.size(); ++bp)
    out += format_double(breakpoint_discs[bp].first) + "," +
           format_double(breakpoint_discs[bp].second) + ",1\n";
  return out;
}

/// Columns `tv,mi`, seed recorded in a header comment.
inline std::string scatter_to_csv(const std::vector<ScatterPoint>& pts, std::uint64_t seed,
                                  const std::string& config_comment) {
  std::string out = "# seed=" + std::to_string(seed);
  if (!config_comment.empty()) out += " " + config_comment;
  out += "\ntv,mi\n";
  for (const auto& p : pts) out += format_double(p.tv) + "," + format_double(p.mi) + "\n";
  return out;
}

inline json comparison_to_json(const ComparisonReport& rep) {
  json j{{"d_min_pre_a", rep.d_min_pre_a},
         {"d_min_post", rep.d_min_post},
         {"disc_at_dmin_pre", rep.disc_at_dmin_pre},
         {"disc_at_dmin_post", rep.disc_at_dmin_post},
         {"proper", rep.proper},
         {"convention_ok", rep.convention_ok},
         {"dominance_verdict", to_string(rep.verdict)}};
  if (rep.substitution_witness)
    j["substitution_witness"] =
        json{{"x0", rep.substitution_witness->first}, {"x1", rep.substitution_witness->second}};
  else
    j["substitution_witness"] = nullptr;
  if (rep.dominance_witness)
    j["dominance_witness"] =
        json{{"side", rep.dominance_witness->side == WitnessSide::kMinorityQualified
                          ? "minority_qualified"
                          : "majority_unqualified"},
             {"x", rep.dominance_witness->x}};
  else
    j["dominance_witness"] = nullptr;
  if (rep.exhibit_alpha) {
    j["exhibit"] = json{{"alpha", *rep.exhibit_alpha},
                        {"distortion", *rep.exhibit_distortion},
                        {"disc", *rep.exhibit_disc}};
  } else {
    j["exhibit"] = nullptr;
  }
  return j;
}

}  // namespace fairlp::io
