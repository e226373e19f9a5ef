#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dynamo/runner.hpp"

namespace dynamo {

// A run configuration plus the seeds and sweep axes to expand it over. Empty
// sweep axes fall back to the base config's value.
struct ExperimentSpec {
  RunConfig base;
  std::vector<std::uint64_t> seeds{0};
  std::vector<double> betas;
  std::vector<double> taus;
  std::vector<int> batch_sizes;
  std::vector<int> ks;
  std::string out_dir;
  int jobs = 1;
};

struct SweepCell {
  std::string label;  // method-optimizer plus the swept values
  RunConfig config;   // seed left at the base value
};

std::vector<SweepCell> expand_cells(const ExperimentSpec& spec);

// "key = value" lines; '#' starts a comment. Throws ParseError with the line.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> read_key_values(const std::string& path);

// Applies one setting (config-file key or long flag name without dashes).
// Throws DomainError for an unknown key or malformed value.
void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);

// "0..9" (inclusive) or "0,3,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

std::vector<std::string> known_setting_keys();

}  // namespace dynamo
