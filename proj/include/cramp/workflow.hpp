#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cramp/engine.hpp"
#include "cramp/highdim.hpp"

namespace cramp {

/// Samples x genes intensities with gene ids and per-sample group labels.
struct ExpressionMatrix {
  Matrix values;
  std::vector<std::string> gene_ids;
  std::vector<std::string> labels;
  int dropped_rows = 0;  // input rows removed for missing values

  Eigen::Index samples() const noexcept { return values.rows(); }
  Eigen::Index genes() const noexcept { return values.cols(); }
};

enum class Orientation { samples_by_genes, genes_by_samples };

struct LoadOptions {
  char delimiter = ',';
  Orientation orientation = Orientation::samples_by_genes;
  bool header = true;
  /// First column holds row names: sample labels for samples_by_genes,
  /// gene ids for genes_by_samples.
  bool label_column = false;
};

/// Empty cells and NA mark missing values; such input rows are dropped and
/// counted. Ragged rows and other non-numeric cells are parse errors.
ExpressionMatrix parse_matrix(std::istream& in, const LoadOptions& options);
ExpressionMatrix load_matrix(const std::string& path, const LoadOptions& options);

/// Keeps the p genes with the largest minimum intensity, in original column
/// order. Ties go to the earlier column.
ExpressionMatrix select_top_genes(const ExpressionMatrix& m, Eigen::Index p);

/// Rows whose label equals `group`.
Matrix group_rows(const ExpressionMatrix& m, const std::string& group);

struct MethodReport {
  std::string method;
  std::string strategy;
  std::optional<double> statistic;
  std::optional<double> p_value;
  std::optional<double> mean_p;
  std::optional<double> critical_value;
  bool reject = false;
  std::string error;
};

struct SplitSummary {
  std::string method;
  int replicates = 0;
  int rejections = 0;
  double proportion = 0.0;
  int subsample_size = 0;
  bool disjoint = true;
};

struct AnalysisReport {
  static constexpr int kSchemaVersion = 1;
  double alpha = 0.05;
  std::vector<MethodReport> comparisons;
  std::vector<SplitSummary> splits;
  std::string provenance_json = "{}";
};

struct WorkflowOptions {
  CrampConfig cramp;  // base and hypothesis are set per method
  Strategy strategy = Strategy::asymptotic;
  MonteCarloOptions mc;
  NullCache* cache = nullptr;
};

/// Method ids: syk, schott, lc, clx, cramp-box, cramp-wald.
const std::vector<std::string>& workflow_methods();

MethodReport run_two_sample_method(const std::string& method, const Dataset& x,
                                   const Dataset& y, const WorkflowOptions& options,
                                   std::uint64_t observation = 0);

AnalysisReport compare_groups(const ExpressionMatrix& m, const std::string& group_a,
                              const std::string& group_b,
                              const std::vector<std::string>& methods,
                              const WorkflowOptions& options);

/// Repeatedly splits one group into two parts and tests them against each
/// other. subsample_size = 0 means two equal halves; otherwise two groups of
/// that size, disjoint when the group is large enough and drawn with
/// replacement otherwise.
std::vector<SplitSummary> split_type1_study(const ExpressionMatrix& m,
                                            const std::string& group, int reps,
                                            const std::vector<std::string>& methods,
                                            const WorkflowOptions& options,
                                            int subsample_size = 0);

std::string report_json(const AnalysisReport& report);
void write_report_csv(std::ostream& out, const AnalysisReport& report);

/// FNV-1a 64-bit digest of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string file_digest(const std::string& path);

}  // namespace cramp
