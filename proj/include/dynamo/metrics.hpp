#pragma once

#include <map>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "dynamo/dataset.hpp"

namespace dynamo {

struct CandidateSet {
  Matrix designs;                  // k x d
  std::optional<Vector> oracle_scores;
  std::vector<std::string> sequences;  // discrete tasks only

  int size() const { return static_cast<int>(designs.rows()); }
};

enum class DistanceMetric { kEuclidean, kLevenshtein };

double best_at_k(const Vector& scores);
// Lower median: sorted[(k - 1) / 2].
double median_at_k(const Vector& scores);

// Edit distance / max(|a|, |b|); 0 when both are empty.
double levenshtein_norm(const std::string& a, const std::string& b);
int levenshtein(const std::string& a, const std::string& b);

// Mean distance over the k (k - 1) ordered pairs. Levenshtein uses
// cs.sequences.
double pairwise_diversity(const CandidateSet& cs, DistanceMetric metric = DistanceMetric::kEuclidean);
double pairwise_diversity(const Matrix& designs);

// Mean over candidates of the distance to the nearest reference design.
double minimum_novelty(const Matrix& candidates, const Matrix& reference);
double minimum_novelty(const std::vector<std::string>& candidates,
                       const std::vector<std::string>& reference);

// (1/d) sum_j (max_i x_ij - min_i x_ij)
double l1_coverage(const Matrix& designs);

struct MetricReport {
  double best_at_k = 0.0;
  double median_at_k = 0.0;
  double pairwise_diversity = 0.0;
  double minimum_novelty = 0.0;
  double l1_coverage = 0.0;
  std::map<std::string, double> secondary_stds;

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
  static std::vector<std::string> csv_header();
  std::vector<std::string> csv_row() const;
};

// Scores are the (normalized) oracle values of the candidates; the dataset
// provides the novelty reference. PD/MN use Levenshtein over decoded
// sequences for discrete-relaxed datasets.
MetricReport compute_metrics(const CandidateSet& cs, const OfflineDataset& ds);

// Averages one (method, task) cell's value over seeds, then ranks methods
// within every task (1 = best, higher value is better, ties share the
// average rank) and averages ranks over tasks. The optimality gap is the
// mean over tasks of (value - reference), reference being the dataset
// statistic for that task.
struct ResultRow {
  std::string method;
  std::string task;
  double value = 0.0;
  double reference = 0.0;
};

struct RankGapEntry {
  std::string method;
  double rank = 0.0;
  double gap = 0.0;
};

std::vector<RankGapEntry> rank_and_gap(const std::vector<ResultRow>& rows);

// Minimal CSV support (no quoting; fields must not contain commas).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable parse_csv_table(const std::string& text);
std::string write_csv_table(const CsvTable& table);

}  // namespace dynamo
