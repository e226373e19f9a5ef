#include "dynamo/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dynamo/error.hpp"

namespace dynamo {

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      break;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

bool parse_number(const std::string& text, double& value) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last && std::isfinite(value);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string to_string(DesignKind kind) {
  return kind == DesignKind::kContinuous ? "continuous" : "discrete-relaxed";
}

DesignKind design_kind_from_string(const std::string& text) {
  if (text == "continuous") return DesignKind::kContinuous;
  if (text == "discrete-relaxed") return DesignKind::kDiscreteRelaxed;
  throw DomainError("unknown design kind: " + text);
}

std::string decode_relaxed(const Vector& x, const Alphabet& alphabet) {
  const int width = alphabet.block_width();
  if (x.size() != alphabet.design_width()) {
    throw DomainError("relaxed design has wrong width for alphabet");
  }
  std::string out(static_cast<std::size_t>(alphabet.length), ' ');
  for (int pos = 0; pos < alphabet.length; ++pos) {
    int best = 0;
    for (int a = 1; a < width; ++a) {
      if (x[pos * width + a] > x[pos * width + best]) best = a;
    }
    out[static_cast<std::size_t>(pos)] = alphabet.letters[static_cast<std::size_t>(best)];
  }
  return out;
}

Vector encode_one_hot(const std::string& sequence, const Alphabet& alphabet) {
  if (static_cast<int>(sequence.size()) != alphabet.length) {
    throw DomainError("sequence length does not match alphabet length");
  }
  const int width = alphabet.block_width();
  Vector x = Vector::Zero(alphabet.design_width());
  for (int pos = 0; pos < alphabet.length; ++pos) {
    auto idx = alphabet.letters.find(sequence[static_cast<std::size_t>(pos)]);
    if (idx == std::string::npos) throw DomainError("letter not in alphabet");
    x[pos * width + static_cast<int>(idx)] = 1.0;
  }
  return x;
}

OfflineDataset OfflineDataset::create(Matrix designs, Vector raw_scores, Vector lower_bound,
                                      Vector upper_bound, DesignKind kind,
                                      std::optional<Alphabet> alphabet) {
  const auto n = designs.rows();
  const auto d = designs.cols();
  if (raw_scores.size() != n) throw DomainError("score count does not match design count");
  if (d < 1) throw DomainError("designs need at least one dimension");
  if (lower_bound.size() != d || upper_bound.size() != d) {
    throw DomainError("bounds dimension does not match designs");
  }
  if (n < 2) throw DegenerateDatasetError("dataset needs at least 2 designs");
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(lower_bound[j] < upper_bound[j])) throw DomainError("lower bound must be < upper bound");
  }
  if (!designs.allFinite() || !raw_scores.allFinite()) {
    throw DomainError("dataset contains non-finite values");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (designs(i, j) < lower_bound[j] || designs(i, j) > upper_bound[j]) {
        throw DomainError("design " + std::to_string(i) + " lies outside the bounds");
      }
    }
  }
  if (kind == DesignKind::kDiscreteRelaxed) {
    if (!alphabet || alphabet->design_width() != d) {
      throw DomainError("discrete-relaxed dataset needs an alphabet matching its width");
    }
  }

  const double y_min = raw_scores.minCoeff();
  const double y_max = raw_scores.maxCoeff();
  if (!(y_max > y_min)) throw DegenerateDatasetError("dataset scores are constant");

  OfflineDataset ds;
  ds.designs_ = std::move(designs);
  ds.raw_scores_ = std::move(raw_scores);
  ds.y_min_ = y_min;
  ds.y_max_ = y_max;
  ds.norm_scores_ = (ds.raw_scores_.array() - y_min) / (y_max - y_min);
  ds.lower_ = std::move(lower_bound);
  ds.upper_ = std::move(upper_bound);
  ds.kind_ = kind;
  ds.alphabet_ = std::move(alphabet);
  return ds;
}

OfflineDataset OfflineDataset::create(Matrix designs, Vector raw_scores) {
  const auto d = designs.cols();
  return create(std::move(designs), std::move(raw_scores),
                Vector::Constant(d, kDefaultLowerBound), Vector::Constant(d, kDefaultUpperBound));
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".json" ? DatasetFormat::kJson : DatasetFormat::kCsv;
}

OfflineDataset parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<double, double>> bounds;
  DesignKind kind = DesignKind::kContinuous;
  std::optional<Alphabet> alphabet;
  int d = -1;
  std::vector<std::vector<double>> rows;
  std::vector<double> scores;

  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::string body = trim(std::string_view(t).substr(1));
      auto colon = body.find(':');
      if (colon == std::string::npos) continue;
      std::string key = trim(std::string_view(body).substr(0, colon));
      std::string value = trim(std::string_view(body).substr(colon + 1));
      if (key == "bounds") {
        std::size_t pos = 0;
        while ((pos = value.find('[', pos)) != std::string::npos) {
          auto close = value.find(']', pos);
          if (close == std::string::npos) throw ParseError("unterminated bounds entry", line_no);
          auto parts = split(std::string_view(value).substr(pos + 1, close - pos - 1), ',');
          double lo = 0, hi = 0;
          if (parts.size() != 2 || !parse_number(parts[0], lo) || !parse_number(parts[1], hi)) {
            throw ParseError("malformed bounds entry", line_no);
          }
          bounds.emplace_back(lo, hi);
          pos = close + 1;
        }
      } else if (key == "kind") {
        kind = design_kind_from_string(value);
      } else if (key == "alphabet") {
        auto space = value.find(" x");
        if (space == std::string::npos) throw ParseError("malformed alphabet line", line_no);
        Alphabet a;
        a.letters = trim(std::string_view(value).substr(0, space));
        double len = 0;
        if (!parse_number(trim(std::string_view(value).substr(space + 2)), len) || len < 1) {
          throw ParseError("malformed alphabet length", line_no);
        }
        a.length = static_cast<int>(len);
        alphabet = a;
      }
      continue;
    }
    auto fields = split(t, ',');
    if (d < 0) {
      // header row
      if (fields.size() < 2 || fields.back() != "y") {
        throw ParseError("header must be x0,...,x{d-1},y", line_no);
      }
      d = static_cast<int>(fields.size()) - 1;
      continue;
    }
    if (static_cast<int>(fields.size()) != d + 1) {
      throw ParseError("expected " + std::to_string(d + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    std::vector<double> row(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      if (!parse_number(fields[static_cast<std::size_t>(j)], row[static_cast<std::size_t>(j)])) {
        throw ParseError("non-numeric design value '" + fields[static_cast<std::size_t>(j)] + "'",
                         line_no);
      }
    }
    double y = 0;
    if (!parse_number(fields.back(), y)) throw ParseError("non-numeric score", line_no);
    rows.push_back(std::move(row));
    scores.push_back(y);
  }
  if (d < 1) throw ParseError("missing header", line_no);
  if (!bounds.empty() && static_cast<int>(bounds.size()) != d) {
    throw ParseError("bounds declare " + std::to_string(bounds.size()) + " dimensions, data has " +
                         std::to_string(d),
                     1);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix designs(n, d);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) designs(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y[i] = scores[static_cast<std::size_t>(i)];
  }
  Vector lower = Vector::Constant(d, kDefaultLowerBound);
  Vector upper = Vector::Constant(d, kDefaultUpperBound);
  for (std::size_t j = 0; j < bounds.size(); ++j) {
    lower[static_cast<Eigen::Index>(j)] = bounds[j].first;
    upper[static_cast<Eigen::Index>(j)] = bounds[j].second;
  }
  return OfflineDataset::create(std::move(designs), std::move(y), std::move(lower),
                                std::move(upper), kind, std::move(alphabet));
}

OfflineDataset parse_dataset_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
  }
  if (!j.contains("designs") || !j.contains("scores")) {
    throw ParseError("JSON dataset needs 'designs' and 'scores'", 0);
  }
  const auto& jd = j.at("designs");
  const auto& js = j.at("scores");
  const auto n = static_cast<Eigen::Index>(jd.size());
  if (n == 0) throw DegenerateDatasetError("dataset needs at least 2 designs");
  const auto d = static_cast<Eigen::Index>(jd.at(0).size());
  if (static_cast<Eigen::Index>(js.size()) != n) throw ParseError("score count mismatch", 0);
  Matrix designs(n, d);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = jd.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != d) {
      throw ParseError("design has wrong arity", static_cast<std::size_t>(i) + 1);
    }
    for (Eigen::Index k = 0; k < d; ++k) designs(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    y[i] = js.at(static_cast<std::size_t>(i)).get<double>();
  }
  Vector lower = Vector::Constant(d, kDefaultLowerBound);
  Vector upper = Vector::Constant(d, kDefaultUpperBound);
  if (j.contains("lower_bound")) {
    auto v = j.at("lower_bound").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != d) throw ParseError("lower_bound arity", 0);
    lower = Eigen::Map<Vector>(v.data(), d);
  }
  if (j.contains("upper_bound")) {
    auto v = j.at("upper_bound").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != d) throw ParseError("upper_bound arity", 0);
    upper = Eigen::Map<Vector>(v.data(), d);
  }
  DesignKind kind = DesignKind::kContinuous;
  if (j.contains("kind")) kind = design_kind_from_string(j.at("kind").get<std::string>());
  std::optional<Alphabet> alphabet;
  if (j.contains("alphabet")) {
    Alphabet a;
    a.letters = j.at("alphabet").at("letters").get<std::string>();
    a.length = j.at("alphabet").at("length").get<int>();
    alphabet = a;
  }
  return OfflineDataset::create(std::move(designs), std::move(y), std::move(lower),
                                std::move(upper), kind, std::move(alphabet));
}

OfflineDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  const std::string text = read_file(path);
  return format == DatasetFormat::kJson ? parse_dataset_json(text) : parse_dataset_csv(text);
}

OfflineDataset load_dataset(const std::filesystem::path& path) {
  return load_dataset(path, format_from_path(path));
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

std::string dataset_to_csv(const OfflineDataset& ds) {
  std::ostringstream out;
  out << "# bounds:";
  for (int j = 0; j < ds.dim(); ++j) {
    out << " [" << format_double(ds.lower_bound()[j]) << "," << format_double(ds.upper_bound()[j])
        << "]";
  }
  out << "\n";
  if (ds.kind() == DesignKind::kDiscreteRelaxed) {
    out << "# kind: " << to_string(ds.kind()) << "\n";
    out << "# alphabet: " << ds.alphabet()->letters << " x" << ds.alphabet()->length << "\n";
  }
  for (int j = 0; j < ds.dim(); ++j) out << "x" << j << ",";
  out << "y\n";
  for (int i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) out << format_double(ds.designs()(i, j)) << ",";
    out << format_double(ds.raw_scores()[i]) << "\n";
  }
  return out.str();
}

std::string dataset_to_json(const OfflineDataset& ds) {
  nlohmann::json j;
  j["designs"] = nlohmann::json::array();
  for (int i = 0; i < ds.size(); ++i) {
    std::vector<double> row;
    for (int k = 0; k < ds.dim(); ++k) row.push_back(ds.designs()(i, k));
    j["designs"].push_back(row);
  }
  j["scores"] = std::vector<double>(ds.raw_scores().data(), ds.raw_scores().data() + ds.size());
  j["lower_bound"] =
      std::vector<double>(ds.lower_bound().data(), ds.lower_bound().data() + ds.dim());
  j["upper_bound"] =
      std::vector<double>(ds.upper_bound().data(), ds.upper_bound().data() + ds.dim());
  j["kind"] = to_string(ds.kind());
  if (ds.alphabet()) {
    j["alphabet"] = {{"letters", ds.alphabet()->letters}, {"length", ds.alphabet()->length}};
  }
  return j.dump(2) + "\n";
}

void save_dataset(const OfflineDataset& ds, const std::filesystem::path& path,
                  DatasetFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset file: " + path.string());
  out << (format == DatasetFormat::kJson ? dataset_to_json(ds) : dataset_to_csv(ds));
}

TauWeights tau_weight(const Vector& norm_scores, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw DomainError("tau must be a finite value >= 0");
  if (norm_scores.size() == 0) throw DomainError("tau weighting needs at least one score");
  TauWeights tw;
  tw.tau = tau;
  const Vector logits = tau * norm_scores;
  const double max_logit = logits.maxCoeff();
  const Vector shifted = (logits.array() - max_logit).exp();
  const double sum = shifted.sum();
  tw.weights = shifted / sum;
  tw.log_partition = max_logit + std::log(sum);
  return tw;
}

TauWeights tau_weight(const OfflineDataset& ds, double tau) {
  return tau_weight(ds.norm_scores(), tau);
}

double weighted_expectation(const TauWeights& tw, const Vector& values) {
  if (values.size() != tw.weights.size()) {
    throw DomainError("weighted_expectation: length mismatch");
  }
  return tw.weights.dot(values);
}

}  // namespace dynamo
