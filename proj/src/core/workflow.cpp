#include "cramp/workflow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "cramp/parallel.hpp"
#include "json.hpp"

namespace cramp {
namespace {

using json = nlohmann::json;

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.push_back(cell);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }
  return out;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "NaN" || s == "nan"; }

bool parse_number(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

std::vector<std::string> numbered(const char* prefix, Eigen::Index count) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

struct Method {
  bool cramp = false;
  BaseTest base = BaseTest::box_m;
};

Method resolve_method(const std::string& id) {
  if (id == "cramp-box") return {true, BaseTest::box_m};
  if (id == "cramp-wald") return {true, BaseTest::wald};
  if (id == "syk" || id == "schott" || id == "lc" || id == "clx") return {};
  fail(ErrorKind::config, "unknown method '" + id + "'");
}

CrampConfig cramp_config(const WorkflowOptions& options, BaseTest base) {
  CrampConfig cfg = options.cramp;
  cfg.base = base;
  cfg.hypothesis = Hypothesis::two_sample;
  return cfg;
}

json optional_number(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(17) << *v;
  return os.str();
}

}  // namespace

ExpressionMatrix parse_matrix(std::istream& in, const LoadOptions& options) {
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  std::size_t width = 0;
  std::vector<std::string> row_names;
  std::vector<std::vector<double>> rows;
  int dropped = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = split_line(line, options.delimiter);
    if (options.header && header.empty()) {
      header = std::move(cells);
      width = header.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      std::ostringstream os;
      os << "ragged row at line " << line_no << ": expected " << width << " fields, found "
         << cells.size();
      fail(ErrorKind::parse, os.str());
    }
    const std::size_t first = options.label_column ? 1 : 0;
    std::vector<double> values(width - first);
    bool missing = false;
    for (std::size_t c = first; c < width; ++c) {
      if (is_missing(cells[c])) {
        missing = true;
        continue;
      }
      if (!parse_number(cells[c], values[c - first])) {
        std::ostringstream os;
        os << "non-numeric cell '" << cells[c] << "' at row " << line_no << ", column "
           << c + 1;
        fail(ErrorKind::parse, os.str());
      }
    }
    if (missing) {
      ++dropped;
      continue;
    }
    if (options.label_column) row_names.push_back(cells[0]);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) fail(ErrorKind::parse, "no data rows");
  const std::size_t first = options.label_column ? 1 : 0;
  if (width <= first) fail(ErrorKind::parse, "no numeric columns");

  Matrix block(Eigen::Index(rows.size()), Eigen::Index(width - first));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) block(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
  }
  std::vector<std::string> col_names;
  if (!header.empty()) col_names.assign(header.begin() + Eigen::Index(first), header.end());

  ExpressionMatrix out;
  out.dropped_rows = dropped;
  if (options.orientation == Orientation::samples_by_genes) {
    out.values = std::move(block);
    out.gene_ids = col_names.empty() ? numbered("g", out.values.cols()) : col_names;
    out.labels = row_names.empty() ? std::vector<std::string>(out.values.rows()) : row_names;
  } else {
    out.values = block.transpose();
    out.gene_ids = row_names.empty() ? numbered("g", out.values.cols()) : row_names;
    out.labels = col_names.empty() ? std::vector<std::string>(out.values.rows()) : col_names;
  }
  std::set<std::string> seen;
  for (const auto& g : out.gene_ids) {
    if (!seen.insert(g).second) fail(ErrorKind::parse, "duplicate gene id '" + g + "'");
  }
  return out;
}

ExpressionMatrix load_matrix(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  return parse_matrix(in, options);
}

ExpressionMatrix select_top_genes(const ExpressionMatrix& m, Eigen::Index p) {
  if (p < 1 || p > m.genes()) {
    std::ostringstream os;
    os << "cannot keep " << p << " of " << m.genes() << " genes";
    fail(ErrorKind::argument, os.str());
  }
  const Vector minima = m.values.colwise().minCoeff();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m.genes()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return minima[a] > minima[b]; });
  order.resize(static_cast<std::size_t>(p));
  std::sort(order.begin(), order.end());

  ExpressionMatrix out;
  out.values.resize(m.samples(), p);
  for (Eigen::Index j = 0; j < p; ++j) {
    out.values.col(j) = m.values.col(order[std::size_t(j)]);
    out.gene_ids.push_back(m.gene_ids[std::size_t(order[std::size_t(j)])]);
  }
  out.labels = m.labels;
  out.dropped_rows = m.dropped_rows;
  return out;
}

Matrix group_rows(const ExpressionMatrix& m, const std::string& group) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    if (m.labels[i] == group) idx.push_back(Eigen::Index(i));
  }
  Matrix out(Eigen::Index(idx.size()), m.genes());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(Eigen::Index(i)) = m.values.row(idx[i]);
  return out;
}

const std::vector<std::string>& workflow_methods() {
  static const std::vector<std::string> ids = {"syk", "schott", "lc", "clx", "cramp-box",
                                               "cramp-wald"};
  return ids;
}

MethodReport run_two_sample_method(const std::string& method, const Dataset& x,
                                   const Dataset& y, const WorkflowOptions& options,
                                   std::uint64_t observation) {
  const Method resolved = resolve_method(method);
  MethodReport r;
  r.method = method;
  if (resolved.cramp) {
    const CrampOutcome out =
        cramp_test(x, y, cramp_config(options, resolved.base), options.cache, observation);
    r.strategy = "empirical";
    r.mean_p = out.mean_p;
    r.critical_value = out.critical_value;
    r.reject = out.reject;
    return r;
  }
  TestResult t;
  if (method == "syk") t = syk_two_sample(x, y, options.strategy, options.mc);
  else if (method == "schott") t = schott_two_sample(x, y, options.strategy, options.mc);
  else if (method == "lc") t = li_chen_two_sample(x, y, options.strategy, options.mc);
  else t = clx_two_sample(x, y, options.strategy, options.mc);
  r.strategy = to_string(t.strategy);
  r.statistic = t.statistic;
  r.p_value = t.p_value;
  r.reject = t.p_value <= options.cramp.alpha;
  return r;
}

AnalysisReport compare_groups(const ExpressionMatrix& m, const std::string& group_a,
                              const std::string& group_b,
                              const std::vector<std::string>& methods,
                              const WorkflowOptions& options) {
  for (const auto& id : methods) resolve_method(id);
  Matrix xa = group_rows(m, group_a);
  Matrix xb = group_rows(m, group_b);
  if (xa.rows() == 0) fail(ErrorKind::sample_size, "group '" + group_a + "' is empty");
  if (xb.rows() == 0) fail(ErrorKind::sample_size, "group '" + group_b + "' is empty");
  const Dataset x(std::move(xa));
  const Dataset y(std::move(xb));

  AnalysisReport report;
  report.alpha = options.cramp.alpha;
  for (const auto& id : methods) {
    try {
      report.comparisons.push_back(run_two_sample_method(id, x, y, options));
    } catch (const Error& e) {
      if (is_config_error(e.kind())) throw;
      MethodReport failed;
      failed.method = id;
      failed.error = e.what();
      report.comparisons.push_back(std::move(failed));
    }
  }
  return report;
}

std::vector<SplitSummary> split_type1_study(const ExpressionMatrix& m,
                                            const std::string& group, int reps,
                                            const std::vector<std::string>& methods,
                                            const WorkflowOptions& options,
                                            int subsample_size) {
  if (reps < 1) fail(ErrorKind::config, "split study needs at least one replicate");
  for (const auto& id : methods) resolve_method(id);
  const Matrix pool = group_rows(m, group);
  const Eigen::Index total = pool.rows();
  if (total < 4) {
    fail(ErrorKind::sample_size, "group '" + group + "' needs at least 4 samples to split");
  }
  if (subsample_size < 0) fail(ErrorKind::config, "subsample size must be >= 0");
  const Eigen::Index half = subsample_size > 0 ? subsample_size : total / 2;
  if (half < 2) fail(ErrorKind::sample_size, "split groups need at least 2 samples");
  const bool disjoint = 2 * half <= total;

  std::vector<SplitSummary> out;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const std::string& id = methods[mi];
    const Method resolved = resolve_method(id);
    WorkflowOptions local = options;
    NullCache own_cache;
    if (!local.cache) local.cache = &own_cache;
    if (resolved.cramp) {
      CrampConfig cfg = cramp_config(local, resolved.base);
      empirical_critical_value(SampleShape{half, half, m.genes()}, cfg, local.cache);
      local.cramp.threads = 1;
    }
    local.mc.threads = 1;

    std::vector<char> rejected(static_cast<std::size_t>(reps), 0);
    parallel_for(rejected.size(), options.cramp.threads, [&](std::size_t r) {
      RngStream rng(options.cramp.seed, stream_index(StreamFamily::workflow, mi, r));
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
      std::iota(idx.begin(), idx.end(), 0);
      Matrix a(half, m.genes());
      Matrix b(half, m.genes());
      if (disjoint) {
        // Partial Fisher-Yates: the first 2 * half slots are a uniform draw.
        for (Eigen::Index i = 0; i < 2 * half; ++i) {
          const auto j = i + Eigen::Index(rng.below(std::uint64_t(total - i)));
          std::swap(idx[std::size_t(i)], idx[std::size_t(j)]);
        }
        for (Eigen::Index i = 0; i < half; ++i) {
          a.row(i) = pool.row(idx[std::size_t(i)]);
          b.row(i) = pool.row(idx[std::size_t(half + i)]);
        }
      } else {
        for (Eigen::Index i = 0; i < half; ++i) a.row(i) = pool.row(Eigen::Index(rng.below(total)));
        for (Eigen::Index i = 0; i < half; ++i) b.row(i) = pool.row(Eigen::Index(rng.below(total)));
      }
      WorkflowOptions mine = local;
      mine.mc.seed = splitmix64(options.mc.seed + r);
      rejected[r] = run_two_sample_method(id, Dataset(std::move(a)), Dataset(std::move(b)),
                                          mine, r)
                        .reject;
    });
    SplitSummary s;
    s.method = id;
    s.replicates = reps;
    for (char c : rejected) s.rejections += c;
    s.proportion = double(s.rejections) / double(reps);
    s.subsample_size = int(half);
    s.disjoint = disjoint;
    out.push_back(s);
  }
  return out;
}

std::string report_json(const AnalysisReport& report) {
  json comparisons = json::array();
  for (const auto& c : report.comparisons) {
    json j = {{"method", c.method},
              {"strategy", c.strategy},
              {"statistic", optional_number(c.statistic)},
              {"p_value", optional_number(c.p_value)},
              {"mean_p", optional_number(c.mean_p)},
              {"critical_value", optional_number(c.critical_value)}};
    if (c.error.empty()) {
      j["decision"] = c.reject ? "reject" : "do-not-reject";
    } else {
      j["decision"] = nullptr;
      j["error"] = c.error;
    }
    comparisons.push_back(std::move(j));
  }
  json splits = json::array();
  for (const auto& s : report.splits) {
    splits.push_back({{"method", s.method},
                      {"replicates", s.replicates},
                      {"rejections", s.rejections},
                      {"proportion", s.proportion},
                      {"subsample_size", s.subsample_size},
                      {"disjoint", s.disjoint}});
  }
  json doc = {{"schema_version", AnalysisReport::kSchemaVersion},
              {"alpha", report.alpha},
              {"comparisons", comparisons},
              {"split_type1", splits},
              {"provenance", json::parse(report.provenance_json)}};
  return doc.dump(2);
}

void write_report_csv(std::ostream& out, const AnalysisReport& report) {
  out << "section,method,strategy,statistic,p_value,mean_p,critical_value,decision,"
         "replicates,rejections,proportion\n";
  for (const auto& c : report.comparisons) {
    out << "compare," << c.method << ',' << c.strategy << ',' << csv_number(c.statistic)
        << ',' << csv_number(c.p_value) << ',' << csv_number(c.mean_p) << ','
        << csv_number(c.critical_value) << ','
        << (c.error.empty() ? (c.reject ? "reject" : "do-not-reject") : "error") << ",,,\n";
  }
  for (const auto& s : report.splits) {
    out << "split-type1," << s.method << ",,,,,,," << s.replicates << ',' << s.rejections
        << ',' << csv_number(s.proportion) << '\n';
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

}  // namespace cramp
