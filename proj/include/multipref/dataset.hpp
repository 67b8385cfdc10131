#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "multipref/policy.hpp"
#include "multipref/types.hpp"

namespace multipref {

enum class RejectedFamily { point_mass, geometric_tilt, mixture };

std::string_view to_string(RejectedFamily family);
RejectedFamily rejected_family_from_string(std::string_view name);

struct RngDatasetConfig {
  // Training split: lo uniform in [a_min, a_max], hi = lo + gap with gap
  // uniform in [gap_min, gap_max]. Test split: lo < hi both uniform in
  // [a_min, a_max].
  Token a_min = 0;
  Token a_max = 1000;
  Token gap_min = 5;
  Token gap_max = 10;
  bool test_split = false;
  std::size_t records = 3000;
  std::size_t k = 5;
  RejectedFamily rejected_family = RejectedFamily::point_mass;
  std::uint64_t seed = 0;
  std::int64_t first_id = 0;
  std::size_t vocab_size = kDefaultVocabSize;

  void validate() const;
};

// Token the biased generator over-produces: lo + (7 mod width).
Token bias_token(const IntervalPrompt& prompt);

std::vector<IntervalPrompt> sample_rng_prompts(const RngDatasetConfig& config);

// k uniform draws from [lo, hi].
SampleGroup uniform_group(const IntervalPrompt& prompt, std::size_t k, Rng& rng);
SampleGroup rejected_group(const IntervalPrompt& prompt, RejectedFamily family, std::size_t k, Rng& rng);

// Chosen groups uniform on [lo, hi]; rejected groups from the configured
// non-uniform family.
std::vector<PreferenceRecord> build_rng_dataset(const RngDatasetConfig& config);

// Keep the first `k` responses of each side.
std::vector<PreferenceRecord> slice_groups(std::span<const PreferenceRecord> records, std::size_t k);

std::vector<IntervalPrompt> prompts_of(std::span<const PreferenceRecord> records);

// JSONL: {"prompt": {"id", "lo", "hi"}, "chosen": [[...]], "rejected": [[...]]}
nlohmann::json record_to_json(const PreferenceRecord& record);
PreferenceRecord record_from_json(const nlohmann::json& doc);
void write_jsonl(std::ostream& out, std::span<const PreferenceRecord> records);
void write_jsonl(const std::filesystem::path& path, std::span<const PreferenceRecord> records);
std::vector<PreferenceRecord> read_jsonl(std::istream& in);
std::vector<PreferenceRecord> read_jsonl(const std::filesystem::path& path);

}  // namespace multipref
