#include "sandboost/grouped_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "sandboost/numeric.hpp"

namespace sboost {

GroupedDataset::GroupedDataset(std::vector<Group> groups, int d_covariates,
                               std::vector<std::string> ids)
    : groups_(std::move(groups)), ids_(std::move(ids)), d_(d_covariates) {
  if (d_ < 0) throw DataError("InvalidDimension", "negative covariate count");
  if (groups_.empty()) throw DataError("EmptyDataset", "dataset has no groups");
  if (ids_.empty()) {
    ids_.reserve(groups_.size());
    for (std::size_t i = 0; i < groups_.size(); ++i) ids_.push_back(std::to_string(i + 1));
  }
  if (ids_.size() != groups_.size()) throw DataError("InvalidIds", "id count does not match group count");
  n_obs_ = 0;
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    const Group& g = groups_[i];
    const auto n = g.y.size();
    const std::string where = "group " + ids_[i];
    if (n < 1) throw DataError("EmptyGroup", where + " has no rows");
    if (g.d.size() != n || g.x.rows() != n)
      throw DataError("LengthMismatch", where + ": y, d and x lengths differ");
    if (g.x.cols() != d_) throw DataError("LengthMismatch", where + ": wrong covariate count");
    if (!g.y.allFinite() || !g.d.allFinite() || !g.x.allFinite())
      throw DataError("NaNValue", where + " contains a non-finite value");
    if (!g.subgroup_sizes.empty()) {
      long total = 0;
      for (int s : g.subgroup_sizes) {
        if (s < 1) throw DataError("InvalidLayout", where + ": subgroup sizes must be positive");
        total += s;
      }
      if (total != n) throw DataError("InvalidLayout", where + ": subgroup sizes do not sum to group size");
    }
    n_obs_ += static_cast<int>(n);
  }
}

GroupedDataset GroupedDataset::subset(const std::vector<int>& group_indices) const {
  std::vector<Group> gs;
  std::vector<std::string> ids;
  gs.reserve(group_indices.size());
  for (int i : group_indices) {
    gs.push_back(groups_.at(static_cast<std::size_t>(i)));
    ids.push_back(ids_.at(static_cast<std::size_t>(i)));
  }
  return GroupedDataset(std::move(gs), d_, std::move(ids));
}

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  std::string out(s.substr(a, b - a));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      cur.push_back(ch);
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

GroupedDataset parse_csv(const std::string& text, const CsvSchema& schema) {
  if (schema.group_col.empty() || schema.y_col.empty() || schema.d_col.empty())
    throw ConfigError("MissingColumn", "schema must name group, response and treatment columns");
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) throw DataError("EmptyFile", "CSV input is empty");

  auto col_index = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("MissingColumn", "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t gcol = col_index(schema.group_col);
  const std::size_t ycol = col_index(schema.y_col);
  const std::size_t dcol = col_index(schema.d_col);
  std::vector<std::size_t> xcols;
  for (const auto& c : schema.x_cols) xcols.push_back(col_index(c));
  const bool has_sub = !schema.subgroup_col.empty();
  const std::size_t scol = has_sub ? col_index(schema.subgroup_col) : 0;

  struct Rows {
    std::vector<double> y, d, x;
    std::vector<std::string> sub;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Rows> rows;
  const std::size_t dx = xcols.size();

  int row_no = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    auto f = split_fields(line);
    if (f.size() != header.size())
      throw DataError("NonNumericCell", "row " + std::to_string(row_no) + ": expected " +
                                            std::to_string(header.size()) + " fields, got " +
                                            std::to_string(f.size()));
    auto num = [&](std::size_t c) {
      double v = 0.0;
      if (!parse_double(f[c], v))
        throw DataError("NonNumericCell", "row " + std::to_string(row_no) + ", column '" +
                                              header[c] + "': cannot parse '" + f[c] + "'");
      if (!std::isfinite(v))
        throw DataError("NaNValue", "row " + std::to_string(row_no) + ", column '" + header[c] +
                                        "': non-finite value");
      return v;
    };
    const std::string& gid = f[gcol];
    if (gid.empty())
      throw DataError("NonNumericCell", "row " + std::to_string(row_no) + ", column '" +
                                            header[gcol] + "': empty group identifier");
    auto [it, inserted] = index.try_emplace(gid, rows.size());
    if (inserted) {
      order.push_back(gid);
      rows.emplace_back();
    }
    Rows& r = rows[it->second];
    r.y.push_back(num(ycol));
    r.d.push_back(num(dcol));
    for (std::size_t c : xcols) r.x.push_back(num(c));
    if (has_sub) r.sub.push_back(f[scol]);
  }
  if (rows.empty()) throw DataError("EmptyFile", "CSV has a header but no data rows");

  std::vector<Group> groups;
  groups.reserve(rows.size());
  for (auto& r : rows) {
    Group g;
    const auto n = static_cast<Eigen::Index>(r.y.size());
    g.y = Eigen::Map<Eigen::VectorXd>(r.y.data(), n);
    g.d = Eigen::Map<Eigen::VectorXd>(r.d.data(), n);
    g.x.resize(n, static_cast<Eigen::Index>(dx));
    for (Eigen::Index j = 0; j < n; ++j)
      for (std::size_t c = 0; c < dx; ++c)
        g.x(j, static_cast<Eigen::Index>(c)) = r.x[static_cast<std::size_t>(j) * dx + c];
    if (has_sub) {
      for (std::size_t j = 0; j < r.sub.size(); ++j) {
        if (j == 0 || r.sub[j] != r.sub[j - 1])
          g.subgroup_sizes.push_back(1);
        else
          ++g.subgroup_sizes.back();
      }
    }
    groups.push_back(std::move(g));
  }
  return GroupedDataset(std::move(groups), static_cast<int>(dx), std::move(order));
}

GroupedDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("FileNotFound", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str(), schema);
}

std::string to_csv(const GroupedDataset& data, CsvSchema* schema_out) {
  CsvSchema schema{"group", "y", "d", {}, ""};
  for (int c = 0; c < data.d_covariates(); ++c) schema.x_cols.push_back("x" + std::to_string(c + 1));
  bool any_sub = false;
  for (const auto& g : data.groups()) any_sub = any_sub || !g.subgroup_sizes.empty();
  if (any_sub) schema.subgroup_col = "subgroup";

  std::string out = "group,y,d";
  for (const auto& c : schema.x_cols) out += "," + c;
  if (any_sub) out += ",subgroup";
  out += "\n";
  for (int i = 0; i < data.n_groups(); ++i) {
    const Group& g = data.group(i);
    std::vector<int> sub_of(static_cast<std::size_t>(g.size()), 0);
    if (!g.subgroup_sizes.empty()) {
      int pos = 0;
      for (std::size_t m = 0; m < g.subgroup_sizes.size(); ++m)
        for (int t = 0; t < g.subgroup_sizes[m]; ++t) sub_of[static_cast<std::size_t>(pos++)] = static_cast<int>(m);
    }
    for (int j = 0; j < g.size(); ++j) {
      out += data.ids()[static_cast<std::size_t>(i)];
      out += "," + format_double(g.y(j)) + "," + format_double(g.d(j));
      for (int c = 0; c < data.d_covariates(); ++c) out += "," + format_double(g.x(j, c));
      if (any_sub) out += "," + std::to_string(sub_of[static_cast<std::size_t>(j)]);
      out += "\n";
    }
  }
  if (schema_out) *schema_out = schema;
  return out;
}

void write_csv(const GroupedDataset& data, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("FileNotWritable", "cannot write '" + path + "'");
  f << to_csv(data);
}

std::vector<std::vector<int>> FoldPartition::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(K));
  for (std::size_t i = 0; i < assignment.size(); ++i)
    out[static_cast<std::size_t>(assignment[i])].push_back(static_cast<int>(i));
  return out;
}

std::vector<int> FoldPartition::complement(int fold) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) out.push_back(static_cast<int>(i));
  return out;
}

FoldPartition partition_folds(int n_groups, int K, std::uint64_t seed) {
  if (K < 2) throw ConfigError("InvalidFolds", "fold count must be at least 2");
  if (K > n_groups)
    throw DataError("TooFewGroups", "cannot split " + std::to_string(n_groups) + " groups into " +
                                        std::to_string(K) + " folds");
  std::vector<int> perm(static_cast<std::size_t>(n_groups));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit bounded draw keeps the permutation independent
  // of the standard library's shuffle implementation.
  for (std::size_t i = perm.size(); i > 1; --i) {
    const std::uint64_t j = rng() % i;
    std::swap(perm[i - 1], perm[j]);
  }
  FoldPartition fp;
  fp.K = K;
  fp.assignment.assign(static_cast<std::size_t>(n_groups), 0);
  for (std::size_t p = 0; p < perm.size(); ++p)
    fp.assignment[static_cast<std::size_t>(perm[p])] = static_cast<int>(p % static_cast<std::size_t>(K));
  return fp;
}

FoldPartition partition_folds(const GroupedDataset& data, int K, std::uint64_t seed) {
  return partition_folds(data.n_groups(), K, seed);
}

std::vector<int> subgroup_layout(const Group& g) {
  if (!g.subgroup_sizes.empty()) return g.subgroup_sizes;
  return {g.size()};
}

int ResidualBundle::n_obs() const {
  int n = 0;
  for (const auto& v : xi) n += static_cast<int>(v.size());
  return n;
}

void ResidualBundle::validate() const {
  if (xi.size() != eps.size() || xi.size() != x.size() || xi.size() != subgroups.size())
    throw DataError("LengthMismatch", "residual bundle components have different group counts");
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const auto n = xi[i].size();
    if (eps[i].size() != n || x[i].rows() != n)
      throw DataError("LengthMismatch", "residual lengths do not match group size");
    long total = 0;
    for (int s : subgroups[i]) total += s;
    if (total != n) throw DataError("InvalidLayout", "subgroup layout does not match group size");
  }
}

ResidualBundle ResidualBundle::subset(const std::vector<int>& group_indices) const {
  ResidualBundle out;
  for (int i : group_indices) {
    const auto k = static_cast<std::size_t>(i);
    out.xi.push_back(xi.at(k));
    out.eps.push_back(eps.at(k));
    out.x.push_back(x.at(k));
    out.subgroups.push_back(subgroups.at(k));
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace sboost
