#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>

namespace dynamo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class DesignKind { kContinuous, kDiscreteRelaxed };

std::string to_string(DesignKind kind);
DesignKind design_kind_from_string(const std::string& text);

// Describes how a discrete-relaxed design decodes: `length` positions, each a
// one-hot block over `letters`.
struct Alphabet {
  std::string letters;
  int length = 0;

  int block_width() const { return static_cast<int>(letters.size()); }
  int design_width() const { return length * block_width(); }
  bool operator==(const Alphabet&) const = default;
};

// Decodes a relaxed one-hot design by per-position argmax; ties go to the
// earliest letter.
std::string decode_relaxed(const Vector& x, const Alphabet& alphabet);
Vector encode_one_hot(const std::string& sequence, const Alphabet& alphabet);

// Default per-dimension search bounds for tasks that don't declare their own.
inline constexpr double kDefaultLowerBound = -4.0;
inline constexpr double kDefaultUpperBound = 4.0;

// Static offline dataset. Scores are min-max normalized once at construction
// and every downstream computation uses the normalized values.
class OfflineDataset {
 public:
  // Throws DegenerateDatasetError when n < 2 or scores are constant, and
  // DomainError on shape mismatch or a design outside the bounds.
  static OfflineDataset create(Matrix designs, Vector raw_scores, Vector lower_bound,
                               Vector upper_bound,
                               DesignKind kind = DesignKind::kContinuous,
                               std::optional<Alphabet> alphabet = std::nullopt);

  // Same, with [-4, 4]^d bounds.
  static OfflineDataset create(Matrix designs, Vector raw_scores);

  const Matrix& designs() const { return designs_; }
  const Vector& raw_scores() const { return raw_scores_; }
  const Vector& norm_scores() const { return norm_scores_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  const Vector& lower_bound() const { return lower_; }
  const Vector& upper_bound() const { return upper_; }
  DesignKind kind() const { return kind_; }
  const std::optional<Alphabet>& alphabet() const { return alphabet_; }

  int size() const { return static_cast<int>(designs_.rows()); }
  int dim() const { return static_cast<int>(designs_.cols()); }

  double normalize(double raw) const { return (raw - y_min_) / (y_max_ - y_min_); }
  double denormalize(double norm) const { return y_min_ + norm * (y_max_ - y_min_); }

 private:
  OfflineDataset() = default;

  Matrix designs_;
  Vector raw_scores_;
  Vector norm_scores_;
  double y_min_ = 0.0;
  double y_max_ = 0.0;
  Vector lower_;
  Vector upper_;
  DesignKind kind_ = DesignKind::kContinuous;
  std::optional<Alphabet> alphabet_;
};

enum class DatasetFormat { kCsv, kJson };

// Picks the format from the file extension (.json -> JSON, otherwise CSV).
DatasetFormat format_from_path(const std::filesystem::path& path);

// CSV layout:
//   # bounds: [lo0,hi0] [lo1,hi1] ...        (optional)
//   # kind: discrete-relaxed                  (optional)
//   # alphabet: ACGT x8                        (discrete only)
//   x0,x1,...,x{d-1},y
//   <rows>
OfflineDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
OfflineDataset load_dataset(const std::filesystem::path& path);
OfflineDataset parse_dataset_csv(const std::string& text);
OfflineDataset parse_dataset_json(const std::string& text);

std::string dataset_to_csv(const OfflineDataset& ds);
std::string dataset_to_json(const OfflineDataset& ds);
void save_dataset(const OfflineDataset& ds, const std::filesystem::path& path,
                  DatasetFormat format);

// Per-sample weights exp(tau * y_i) / Z over normalized scores.
struct TauWeights {
  double tau = 0.0;
  Vector weights;
  double log_partition = 0.0;
};

TauWeights tau_weight(const OfflineDataset& ds, double tau);
TauWeights tau_weight(const Vector& norm_scores, double tau);

// sum_i weights[i] * values[i]
double weighted_expectation(const TauWeights& tw, const Vector& values);

// Shortest round-trip text for a double.
std::string format_double(double value);

}  // namespace dynamo
