#include "dynamo/metrics.hpp"

#include <algorithm>
#include <limits>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "dynamo/error.hpp"

namespace dynamo {

double best_at_k(const Vector& scores) {
  if (scores.size() < 1) throw DomainError("best_at_k of an empty set");
  return scores.maxCoeff();
}

double median_at_k(const Vector& scores) {
  if (scores.size() < 1) throw DomainError("median_at_k of an empty set");
  std::vector<double> v(scores.begin(), scores.end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

int levenshtein(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double levenshtein_norm(const std::string& a, const std::string& b) {
  const std::size_t len = std::max(a.size(), b.size());
  if (len == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(len);
}

double pairwise_diversity(const Matrix& designs) {
  const auto k = designs.rows();
  if (k < 2) throw DomainError("pairwise diversity needs at least 2 candidates");
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) total += (designs.row(i) - designs.row(j)).norm();
  }
  return 2.0 * total / static_cast<double>(k * (k - 1));
}

double pairwise_diversity(const CandidateSet& cs, DistanceMetric metric) {
  if (metric == DistanceMetric::kEuclidean) return pairwise_diversity(cs.designs);
  const auto k = cs.sequences.size();
  if (k < 2) throw DomainError("pairwise diversity needs at least 2 candidates");
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) total += levenshtein_norm(cs.sequences[i], cs.sequences[j]);
  }
  return 2.0 * total / static_cast<double>(k * (k - 1));
}

double minimum_novelty(const Matrix& candidates, const Matrix& reference) {
  if (reference.rows() < 1) throw DomainError("minimum novelty needs a nonempty dataset");
  if (candidates.rows() < 1) throw DomainError("minimum novelty needs candidates");
  double total = 0.0;
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    total += std::sqrt((reference.rowwise() - candidates.row(i)).rowwise().squaredNorm().minCoeff());
  }
  return total / static_cast<double>(candidates.rows());
}

double minimum_novelty(const std::vector<std::string>& candidates,
                       const std::vector<std::string>& reference) {
  if (reference.empty()) throw DomainError("minimum novelty needs a nonempty dataset");
  if (candidates.empty()) throw DomainError("minimum novelty needs candidates");
  double total = 0.0;
  for (const auto& c : candidates) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : reference) best = std::min(best, levenshtein_norm(c, r));
    total += best;
  }
  return total / static_cast<double>(candidates.size());
}

double l1_coverage(const Matrix& designs) {
  if (designs.rows() < 2) throw DomainError("L1 coverage needs at least 2 candidates");
  return (designs.colwise().maxCoeff() - designs.colwise().minCoeff()).mean();
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["best_at_k"] = best_at_k;
  j["median_at_k"] = median_at_k;
  j["pairwise_diversity"] = pairwise_diversity;
  j["minimum_novelty"] = minimum_novelty;
  j["l1_coverage"] = l1_coverage;
  j["secondary_stds"] = secondary_stds;
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  MetricReport r;
  r.best_at_k = j.at("best_at_k").get<double>();
  r.median_at_k = j.at("median_at_k").get<double>();
  r.pairwise_diversity = j.at("pairwise_diversity").get<double>();
  r.minimum_novelty = j.at("minimum_novelty").get<double>();
  r.l1_coverage = j.at("l1_coverage").get<double>();
  if (j.contains("secondary_stds")) {
    r.secondary_stds = j.at("secondary_stds").get<std::map<std::string, double>>();
  }
  return r;
}

std::vector<std::string> MetricReport::csv_header() {
  return {"best_at_k", "median_at_k", "pairwise_diversity", "minimum_novelty", "l1_coverage"};
}

std::vector<std::string> MetricReport::csv_row() const {
  return {format_double(best_at_k), format_double(median_at_k), format_double(pairwise_diversity),
          format_double(minimum_novelty), format_double(l1_coverage)};
}

MetricReport compute_metrics(const CandidateSet& cs, const OfflineDataset& ds) {
  if (!cs.oracle_scores) throw PreconditionError("compute_metrics: oracle scores not set");
  MetricReport r;
  r.best_at_k = best_at_k(*cs.oracle_scores);
  r.median_at_k = median_at_k(*cs.oracle_scores);
  const bool discrete = ds.kind() == DesignKind::kDiscreteRelaxed && ds.alphabet();
  if (cs.size() >= 2) {
    r.pairwise_diversity = discrete ? pairwise_diversity(cs, DistanceMetric::kLevenshtein)
                                    : pairwise_diversity(cs.designs);
    r.l1_coverage = l1_coverage(cs.designs);
  }
  if (discrete) {
    std::vector<std::string> reference;
    for (int i = 0; i < ds.size(); ++i) {
      reference.push_back(decode_relaxed(ds.designs().row(i).transpose(), *ds.alphabet()));
    }
    r.minimum_novelty = minimum_novelty(cs.sequences, reference);
  } else {
    r.minimum_novelty = minimum_novelty(cs.designs, ds.designs());
  }
  return r;
}

std::vector<RankGapEntry> rank_and_gap(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw DomainError("rank_and_gap: no results");
  std::set<std::string> methods, tasks;
  struct Cell {
    double value_sum = 0.0;
    double reference_sum = 0.0;
    int count = 0;
  };
  std::map<std::pair<std::string, std::string>, Cell> cells;
  for (const auto& r : rows) {
    methods.insert(r.method);
    tasks.insert(r.task);
    auto& c = cells[{r.method, r.task}];
    c.value_sum += r.value;
    c.reference_sum += r.reference;
    ++c.count;
  }
  std::map<std::string, double> rank_sum, gap_sum;
  std::map<std::string, int> task_count;
  for (const auto& task : tasks) {
    std::vector<std::pair<std::string, double>> entries;
    for (const auto& m : methods) {
      const auto it = cells.find({m, task});
      if (it == cells.end()) continue;
      const double value = it->second.value_sum / it->second.count;
      entries.emplace_back(m, value);
      gap_sum[m] += value - it->second.reference_sum / it->second.count;
      ++task_count[m];
    }
    for (const auto& [m, v] : entries) {
      int better = 0, equal = 0;
      for (const auto& [m2, v2] : entries) {
        if (v2 > v) ++better;
        else if (v2 == v) ++equal;
      }
      // positions better+1 .. better+equal share their mean
      rank_sum[m] += static_cast<double>(better) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
  }
  std::vector<RankGapEntry> out;
  for (const auto& m : methods) {
    const double n = static_cast<double>(task_count[m]);
    out.push_back({m, rank_sum[m] / n, gap_sum[m] / n});
  }
  return out;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable parse_csv_table(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_fields(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       row);
    }
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw ParseError("missing CSV header", row == 0 ? 1 : row);
  return t;
}

std::string write_csv_table(const CsvTable& table) {
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].find(',') != std::string::npos || fields[i].find('\n') != std::string::npos) {
        throw DomainError("CSV field contains a separator: " + fields[i]);
      }
      out << (i ? "," : "") << fields[i];
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  return out.str();
}

}  // namespace dynamo
