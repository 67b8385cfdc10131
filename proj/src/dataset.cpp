#include "multipref/dataset.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "multipref/error.hpp"
#include "multipref/random.hpp"

namespace multipref {

std::string_view to_string(RejectedFamily family) {
  switch (family) {
    case RejectedFamily::point_mass:
      return "point-mass";
    case RejectedFamily::geometric_tilt:
      return "geometric-tilt";
    case RejectedFamily::mixture:
      return "mixture";
  }
  return "unknown";
}

RejectedFamily rejected_family_from_string(std::string_view name) {
  if (name == "point-mass") return RejectedFamily::point_mass;
  if (name == "geometric-tilt") return RejectedFamily::geometric_tilt;
  if (name == "mixture") return RejectedFamily::mixture;
  throw ConfigError("unknown rejected family '" + std::string(name) + "'");
}

void RngDatasetConfig::validate() const {
  if (a_min < 0 || a_min > a_max) throw ConfigError("invalid lo range");
  if (records < 1) throw ConfigError("records must be >= 1");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (test_split) {
    if (a_max <= a_min) throw ConfigError("test split needs a_max > a_min");
    if (static_cast<std::size_t>(a_max) >= vocab_size) throw ConfigError("test intervals exceed vocab");
  } else {
    if (gap_min < 1 || gap_min > gap_max) throw ConfigError("gap must satisfy 1 <= gap_min <= gap_max");
    if (static_cast<std::size_t>(a_max + gap_max) >= vocab_size) throw ConfigError("intervals exceed vocab");
  }
}

Token bias_token(const IntervalPrompt& prompt) { return prompt.lo + 7 % prompt.width(); }

std::vector<IntervalPrompt> sample_rng_prompts(const RngDatasetConfig& config) {
  config.validate();
  std::vector<IntervalPrompt> prompts;
  prompts.reserve(config.records);
  Rng rng = make_rng(config.seed, {0x9e0});
  for (std::size_t i = 0; i < config.records; ++i) {
    IntervalPrompt p;
    p.id = config.first_id + static_cast<std::int64_t>(i);
    if (config.test_split) {
      std::uniform_int_distribution<Token> lo_dist(config.a_min, config.a_max - 1);
      p.lo = lo_dist(rng);
      p.hi = std::uniform_int_distribution<Token>(p.lo + 1, config.a_max)(rng);
    } else {
      p.lo = std::uniform_int_distribution<Token>(config.a_min, config.a_max)(rng);
      p.hi = p.lo + std::uniform_int_distribution<Token>(config.gap_min, config.gap_max)(rng);
    }
    prompts.push_back(p);
  }
  return prompts;
}

SampleGroup uniform_group(const IntervalPrompt& prompt, std::size_t k, Rng& rng) {
  std::uniform_int_distribution<Token> draw(prompt.lo, prompt.hi);
  std::vector<Token> tokens(k);
  for (Token& t : tokens) t = draw(rng);
  return group_of_tokens(tokens);
}

SampleGroup rejected_group(const IntervalPrompt& prompt, RejectedFamily family, std::size_t k, Rng& rng) {
  const Token bias = bias_token(prompt);
  std::vector<Token> tokens(k, bias);
  switch (family) {
    case RejectedFamily::point_mass:
      break;
    case RejectedFamily::geometric_tilt: {
      // P(t) proportional to 2^-|t - bias| on [lo, hi].
      std::vector<double> weights;
      for (Token t = prompt.lo; t <= prompt.hi; ++t) weights.push_back(std::ldexp(1.0, -std::abs(t - bias)));
      std::discrete_distribution<Token> draw(weights.begin(), weights.end());
      for (Token& t : tokens) t = prompt.lo + draw(rng);
      break;
    }
    case RejectedFamily::mixture: {
      // Half the mass on the bias token, half uniform on the interval.
      std::bernoulli_distribution on_bias(0.5);
      std::uniform_int_distribution<Token> uniform(prompt.lo, prompt.hi);
      for (Token& t : tokens) t = on_bias(rng) ? bias : uniform(rng);
      break;
    }
  }
  return group_of_tokens(tokens);
}

std::vector<PreferenceRecord> build_rng_dataset(const RngDatasetConfig& config) {
  const std::vector<IntervalPrompt> prompts = sample_rng_prompts(config);
  std::vector<PreferenceRecord> records;
  records.reserve(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    Rng rng = make_rng(config.seed, {0x6e0, i});
    PreferenceRecord r;
    r.prompt = prompts[i];
    r.chosen = uniform_group(r.prompt, config.k, rng);
    r.rejected = rejected_group(r.prompt, config.rejected_family, config.k, rng);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PreferenceRecord> slice_groups(std::span<const PreferenceRecord> records, std::size_t k) {
  if (k < 1) throw ConfigError("slice size must be >= 1");
  std::vector<PreferenceRecord> out;
  out.reserve(records.size());
  for (const PreferenceRecord& r : records) {
    if (r.chosen.size() < k || r.rejected.size() < k) throw ConfigError("record has fewer responses than slice size");
    PreferenceRecord s;
    s.prompt = r.prompt;
    s.chosen.responses.assign(r.chosen.responses.begin(), r.chosen.responses.begin() + static_cast<std::ptrdiff_t>(k));
    s.rejected.responses.assign(r.rejected.responses.begin(),
                                r.rejected.responses.begin() + static_cast<std::ptrdiff_t>(k));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<IntervalPrompt> prompts_of(std::span<const PreferenceRecord> records) {
  std::vector<IntervalPrompt> out;
  out.reserve(records.size());
  for (const PreferenceRecord& r : records) out.push_back(r.prompt);
  return out;
}

namespace {

nlohmann::json group_to_json(const SampleGroup& g) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Response& r : g.responses) arr.push_back(r.tokens);
  return arr;
}

SampleGroup group_from_json(const nlohmann::json& arr) {
  SampleGroup g;
  for (const auto& r : arr) {
    Response resp{r.get<std::vector<Token>>()};
    if (resp.tokens.empty()) throw ConfigError("empty response in dataset");
    g.responses.push_back(std::move(resp));
  }
  if (g.empty()) throw ConfigError("empty group in dataset");
  return g;
}

}  // namespace

nlohmann::json record_to_json(const PreferenceRecord& record) {
  nlohmann::json doc;
  doc["prompt"] = {{"id", record.prompt.id}, {"lo", record.prompt.lo}, {"hi", record.prompt.hi}};
  doc["chosen"] = group_to_json(record.chosen);
  doc["rejected"] = group_to_json(record.rejected);
  return doc;
}

PreferenceRecord record_from_json(const nlohmann::json& doc) {
  try {
    PreferenceRecord r;
    const auto& p = doc.at("prompt");
    r.prompt.id = p.at("id").get<std::int64_t>();
    r.prompt.lo = p.at("lo").get<Token>();
    r.prompt.hi = p.at("hi").get<Token>();
    if (r.prompt.lo < 0 || r.prompt.lo > r.prompt.hi) throw ConfigError("invalid interval in dataset");
    r.chosen = group_from_json(doc.at("chosen"));
    r.rejected = group_from_json(doc.at("rejected"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed record: ") + e.what());
  }
}

void write_jsonl(std::ostream& out, std::span<const PreferenceRecord> records) {
  for (const PreferenceRecord& r : records) out << record_to_json(r).dump() << '\n';
}

void write_jsonl(const std::filesystem::path& path, std::span<const PreferenceRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_jsonl(out, records);
}

std::vector<PreferenceRecord> read_jsonl(std::istream& in) {
  std::vector<PreferenceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<PreferenceRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return read_jsonl(in);
}

}  // namespace multipref
