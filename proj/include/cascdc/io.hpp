#pragma once

// File formats. Periods and group labels are 1-based on disk, 0-based in
// memory. Numbers are written with 17 significant digits so a read-back is
// exact.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascdc/evaluation.hpp"
#include "cascdc/netbuild.hpp"
#include "cascdc/sbm.hpp"
#include "cascdc/types.hpp"

namespace cascdc::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IngestError(p.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestError(p.string() + ": cannot write");
  out << text;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line;  ///< source line of each row
};

inline std::vector<std::string> split_csv_line(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quoted) {
      if (c == '"' && i + 1 < s.size() && s[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (std::string& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

inline CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw IngestError(source + ":" + std::to_string(no) + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                        std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.line.push_back(no);
  }
  if (t.header.empty()) throw IngestError(source + ": empty file");
  return t;
}

inline int column_of(const CsvTable& t, std::initializer_list<const char*> names, const std::string& source) {
  for (const char* n : names)
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (t.header[c] == n) return static_cast<int>(c);
  throw IngestError(source + ":1: missing column '" + *names.begin() + "'");
}

inline long parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IngestError(where + ": not an integer: '" + s + "'");
  }
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IngestError(where + ": not a number: '" + s + "'");
  }
}

inline std::string where(const std::string& source, const CsvTable& t, std::size_t row, std::size_t col) {
  return source + ":" + std::to_string(t.line[row]) + ":" + std::to_string(col + 1);
}

// ---------------------------------------------------------------------------
// Dynamic network: JSON header plus one `t,i,j` edge list per period, with
// node ids as endpoints.

/// Returns the names of the files written, header first.
inline std::vector<std::string> write_network(const fs::path& header, const DynamicNetwork& net) {
  json h;
  h["N"] = net.nodes();
  h["T"] = net.periods();
  h["node_ids"] = net.node_ids();
  std::vector<std::string> files;
  const std::string stem = header.stem().string();
  for (int t = 0; t < net.periods(); ++t) {
    char name[64];
    std::snprintf(name, sizeof name, "_edges_t%03d.csv", t + 1);
    const std::string file = stem + name;
    files.push_back(file);
    std::string body = "t,i,j\n";
    const Matrix& a = net.at(t);
    for (int i = 0; i < net.nodes(); ++i)
      for (int j = i + 1; j < net.nodes(); ++j)
        if (a(i, j) != 0.0)
          body += std::to_string(t + 1) + "," + net.node_ids()[static_cast<std::size_t>(i)] + "," +
                  net.node_ids()[static_cast<std::size_t>(j)] + "\n";
    write_text(header.parent_path() / file, body);
  }
  h["edge_files"] = files;
  write_text(header, h.dump(2) + "\n");
  files.insert(files.begin(), header.filename().string());
  return files;
}

struct LoadedNetwork {
  DynamicNetwork network;
  std::vector<fs::path> files_read;  ///< header first, then edge lists
};

inline LoadedNetwork read_network(const fs::path& header) {
  json h;
  try {
    h = json::parse(read_text(header));
  } catch (const json::exception& e) {
    throw IngestError(header.string() + ": " + e.what());
  }
  LoadedNetwork out;
  out.files_read.push_back(header);
  int N = 0, T = 0;
  std::vector<std::string> ids;
  std::vector<std::string> files;
  try {
    N = h.at("N").get<int>();
    T = h.at("T").get<int>();
    ids = h.at("node_ids").get<std::vector<std::string>>();
    files = h.at("edge_files").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw IngestError(header.string() + ": " + e.what());
  }
  if (static_cast<int>(ids.size()) != N) throw IngestError(header.string() + ": node_ids length differs from N");
  if (static_cast<int>(files.size()) != T) throw IngestError(header.string() + ": edge_files length differs from T");
  std::map<std::string, int> index;
  for (int i = 0; i < N; ++i)
    if (!index.emplace(ids[static_cast<std::size_t>(i)], i).second)
      throw IngestError(header.string() + ": duplicate node id '" + ids[static_cast<std::size_t>(i)] + "'");
  std::vector<Matrix> slices(static_cast<std::size_t>(T), Matrix::Zero(N, N));
  for (int t = 0; t < T; ++t) {
    const fs::path p = header.parent_path() / files[static_cast<std::size_t>(t)];
    out.files_read.push_back(p);
    const std::string src = p.string();
    const CsvTable tab = parse_csv(read_text(p), src);
    const int ct = column_of(tab, {"t"}, src), ci = column_of(tab, {"i"}, src), cj = column_of(tab, {"j"}, src);
    for (std::size_t r = 0; r < tab.rows.size(); ++r) {
      const long tt = parse_int(tab.rows[r][static_cast<std::size_t>(ct)], where(src, tab, r, static_cast<std::size_t>(ct)));
      if (tt != t + 1) throw IngestError(where(src, tab, r, static_cast<std::size_t>(ct)) + ": period " + std::to_string(tt) + " in the file for period " + std::to_string(t + 1));
      auto node = [&](int c) {
        const std::string& id = tab.rows[r][static_cast<std::size_t>(c)];
        const auto it = index.find(id);
        if (it == index.end()) throw IngestError(where(src, tab, r, static_cast<std::size_t>(c)) + ": unknown node id '" + id + "'");
        return it->second;
      };
      const int i = node(ci), j = node(cj);
      if (i == j) throw IngestError(where(src, tab, r, static_cast<std::size_t>(ci)) + ": self-loop on '" + ids[static_cast<std::size_t>(i)] + "'");
      slices[static_cast<std::size_t>(t)](i, j) = slices[static_cast<std::size_t>(t)](j, i) = 1.0;
    }
  }
  out.network = DynamicNetwork(std::move(slices), ids);
  return out;
}

// ---------------------------------------------------------------------------
// Memberships: `t,node_id,label`

inline std::string membership_csv(const MembershipSeries& z, const std::vector<std::string>& ids) {
  std::string body = "t,node_id,label\n";
  for (int t = 0; t < z.periods(); ++t)
    for (int i = 0; i < z.nodes(); ++i)
      body += std::to_string(t + 1) + "," + ids[static_cast<std::size_t>(i)] + "," + std::to_string(z.at(t)[static_cast<std::size_t>(i)] + 1) + "\n";
  return body;
}

inline void write_membership(const fs::path& p, const MembershipSeries& z, const std::vector<std::string>& ids) {
  write_text(p, membership_csv(z, ids));
}

struct LoadedMembership {
  MembershipSeries membership;
  std::vector<std::string> node_ids;  ///< order of first appearance
};

/// Reads memberships. With `expected_ids`, every id must appear in every
/// period and nothing else; all mismatches are listed in the error.
inline LoadedMembership read_membership(const fs::path& p, const std::vector<std::string>* expected_ids = nullptr) {
  const std::string src = p.string();
  const CsvTable tab = parse_csv(read_text(p), src);
  const int ct = column_of(tab, {"t"}, src), cn = column_of(tab, {"node_id", "node"}, src), cl = column_of(tab, {"label"}, src);
  LoadedMembership out;
  std::map<std::string, int> index;
  if (expected_ids) {
    out.node_ids = *expected_ids;
    for (std::size_t i = 0; i < expected_ids->size(); ++i) index.emplace((*expected_ids)[i], static_cast<int>(i));
  }
  std::map<long, std::map<int, int>> by_t;
  std::set<std::string> unknown;
  int K = 0;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const long t = parse_int(tab.rows[r][static_cast<std::size_t>(ct)], where(src, tab, r, static_cast<std::size_t>(ct)));
    const long l = parse_int(tab.rows[r][static_cast<std::size_t>(cl)], where(src, tab, r, static_cast<std::size_t>(cl)));
    if (t < 1) throw IngestError(where(src, tab, r, static_cast<std::size_t>(ct)) + ": periods start at 1");
    if (l < 1) throw IngestError(where(src, tab, r, static_cast<std::size_t>(cl)) + ": labels start at 1");
    const std::string& id = tab.rows[r][static_cast<std::size_t>(cn)];
    auto it = index.find(id);
    if (it == index.end()) {
      if (expected_ids) {
        unknown.insert(id);
        continue;
      }
      it = index.emplace(id, static_cast<int>(out.node_ids.size())).first;
      out.node_ids.push_back(id);
    }
    if (!by_t[t].emplace(it->second, static_cast<int>(l - 1)).second)
      throw IngestError(where(src, tab, r, static_cast<std::size_t>(cn)) + ": duplicate entry for '" + id + "' in period " + std::to_string(t));
    K = std::max(K, static_cast<int>(l));
  }
  if (by_t.empty()) throw IngestError(src + ": no membership rows");
  std::vector<std::string> problems;
  for (const std::string& u : unknown) problems.push_back("unknown node id '" + u + "'");
  const long T = by_t.rbegin()->first;
  std::vector<Labels> labels;
  for (long t = 1; t <= T; ++t) {
    const auto it = by_t.find(t);
    if (it == by_t.end()) {
      problems.push_back("period " + std::to_string(t) + " missing");
      continue;
    }
    Labels l(out.node_ids.size(), 0);
    for (std::size_t i = 0; i < out.node_ids.size(); ++i) {
      const auto f = it->second.find(static_cast<int>(i));
      if (f == it->second.end())
        problems.push_back("node '" + out.node_ids[i] + "' missing in period " + std::to_string(t));
      else
        l[i] = f->second;
    }
    labels.push_back(std::move(l));
  }
  if (!problems.empty()) {
    std::string msg = src + ": membership does not match the node set:";
    for (const std::string& s : problems) msg += "\n  " + s;
    throw IngestError(msg);
  }
  out.membership = MembershipSeries(std::move(labels), K);
  return out;
}

// ---------------------------------------------------------------------------
// Return panel: `date,asset_1,...,asset_N`; blank or NA cells are missing.

inline bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  const int m = std::stoi(s.substr(5, 2)), d = std::stoi(s.substr(8, 2));
  return m >= 1 && m <= 12 && d >= 1 && d <= 31;
}

inline ReturnPanel parse_panel(const std::string& text, const std::string& src) {
  const CsvTable tab = parse_csv(text, src);
  if (tab.header.empty() || tab.header[0] != "date") throw IngestError(src + ":1:1: first column must be 'date'");
  if (tab.header.size() < 2) throw IngestError(src + ":1: no asset columns");
  ReturnPanel p;
  p.assets.assign(tab.header.begin() + 1, tab.header.end());
  std::set<std::string> seen;
  for (std::size_t c = 0; c < p.assets.size(); ++c)
    if (!seen.insert(p.assets[c]).second) throw IngestError(src + ":1:" + std::to_string(c + 2) + ": duplicate asset '" + p.assets[c] + "'");
  p.returns = Matrix(static_cast<Index>(tab.rows.size()), static_cast<Index>(p.assets.size()));
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const std::string& d = tab.rows[r][0];
    if (!is_iso_date(d)) throw IngestError(where(src, tab, r, 0) + ": not an ISO-8601 date: '" + d + "'");
    if (!p.dates.empty() && d <= p.dates.back()) throw IngestError(where(src, tab, r, 0) + ": dates must be strictly increasing");
    p.dates.push_back(d);
    for (std::size_t c = 1; c < tab.header.size(); ++c) {
      const std::string& cell = tab.rows[r][c];
      double v = std::numeric_limits<double>::quiet_NaN();
      if (!cell.empty() && cell != "NA" && cell != "NaN" && cell != "nan") {
        v = parse_double(cell, where(src, tab, r, c));
        if (!std::isfinite(v)) throw IngestError(where(src, tab, r, c) + ": non-finite return");
      }
      p.returns(static_cast<Index>(r), static_cast<Index>(c - 1)) = v;
    }
  }
  return p;
}

inline ReturnPanel read_panel(const fs::path& p) { return parse_panel(read_text(p), p.string()); }

inline std::string panel_csv(const ReturnPanel& p) {
  std::string body = "date";
  for (const std::string& a : p.assets) body += "," + a;
  body += "\n";
  for (int r = 0; r < p.days(); ++r) {
    body += p.dates[static_cast<std::size_t>(r)];
    for (int c = 0; c < p.size(); ++c) body += "," + (std::isnan(p.returns(r, c)) ? std::string() : format_double(p.returns(r, c)));
    body += "\n";
  }
  return body;
}

// ---------------------------------------------------------------------------
// Attributes JSON: [{"id": ..., "algorithm": ..., "proof_types": [...]}]

inline ContractAttributes parse_attributes(const std::string& text, const std::string& src) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IngestError(src + ": " + e.what());
  }
  if (!j.is_array()) throw IngestError(src + ": expected a JSON array");
  ContractAttributes out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const json& e = j[k];
    const std::string ctx = src + "[" + std::to_string(k) + "]";
    AssetAttributes a;
    try {
      a.id = e.at("id").get<std::string>();
      if (e.contains("algorithm") && !e["algorithm"].is_null()) a.algorithm = e["algorithm"].get<std::string>();
      if (e.contains("proof_types") && !e["proof_types"].is_null()) {
        if (e["proof_types"].is_string())
          a.proof_types.push_back(e["proof_types"].get<std::string>());
        else
          a.proof_types = e["proof_types"].get<std::vector<std::string>>();
      }
    } catch (const json::exception& ex) {
      throw IngestError(ctx + ": " + ex.what());
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline ContractAttributes read_attributes(const fs::path& p) { return parse_attributes(read_text(p), p.string()); }

/// Attributes reordered to match `ids`. Missing ids are listed in the error.
inline ContractAttributes align_attributes(const ContractAttributes& attrs, const std::vector<std::string>& ids) {
  std::map<std::string, const AssetAttributes*> by_id;
  for (const AssetAttributes& a : attrs) by_id[a.id] = &a;
  ContractAttributes out;
  std::vector<std::string> missing;
  for (const std::string& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      missing.push_back(id);
    else
      out.push_back(*it->second);
  }
  if (!missing.empty()) {
    std::string msg = "attributes missing for:";
    for (const std::string& m : missing) msg += " " + m;
    throw IngestError(msg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Result tables

inline std::string diagnostics_csv(const std::vector<double>& alphas, const std::vector<int>& r_hat) {
  std::string body = "t,alpha,r_hat\n";
  for (std::size_t t = 0; t < alphas.size(); ++t)
    body += std::to_string(t + 1) + "," + format_double(alphas[t]) + "," + std::to_string(t < r_hat.size() ? r_hat[t] : 0) + "\n";
  return body;
}

inline std::string misclustering_csv(const MisclusteringRates& m) {
  std::string body = "t,rate\n";
  for (std::size_t t = 0; t < m.per_period.size(); ++t) body += std::to_string(t + 1) + "," + format_double(m.per_period[t]) + "\n";
  return body;
}

inline std::string connections_csv(const std::vector<GroupConnection>& rows) {
  std::string body = "group,within,cross,diff,tstat\n";
  for (const GroupConnection& g : rows)
    body += (g.group < 0 ? std::string("All") : std::to_string(g.group + 1)) + "," + format_double(g.within) + "," +
            format_double(g.cross) + "," + format_double(g.diff) + "," + format_double(g.test.tstat) + "\n";
  return body;
}

inline std::string centrality_csv(const std::vector<double>& scores) {
  std::string body = "group,centrality\n";
  for (std::size_t g = 0; g < scores.size(); ++g) body += std::to_string(g + 1) + "," + format_double(scores[g]) + "\n";
  return body;
}

inline std::string backtest_csv(const std::vector<BacktestResult>& results) {
  std::string body = "date,group,ret,cumret\n";
  for (const BacktestResult& r : results) {
    const std::string g = r.group < 0 ? "All" : std::to_string(r.group + 1);
    for (std::size_t d = 0; d < r.daily.size(); ++d)
      body += r.dates[d] + "," + g + "," + format_double(r.daily[d]) + "," + format_double(r.cumulative[d]) + "\n";
  }
  return body;
}

inline std::string spreads_csv(const std::vector<SpreadStat>& s) {
  std::string body = "group_a,group_b,mean_diff,tstat,pvalue\n";
  auto name = [](int g) { return g < 0 ? std::string("All") : std::to_string(g + 1); };
  for (const SpreadStat& x : s)
    body += name(x.group_a) + "," + name(x.group_b) + "," + format_double(x.test.mean) + "," + format_double(x.test.tstat) + "," +
            format_double(x.test.pvalue) + "\n";
  return body;
}

}  // namespace cascdc::io
