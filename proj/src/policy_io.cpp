#include "multipref/policy_io.hpp"

#include <fstream>

#include "multipref/error.hpp"

namespace multipref {

nlohmann::json policy_to_json(const Policy& policy) {
  nlohmann::json doc;
  doc["kind"] = std::string(to_string(policy.kind()));
  doc["vocab_size"] = policy.vocab_size();
  if (const auto* tab = dynamic_cast<const TabularPolicy*>(&policy)) {
    doc["prompt_ids"] = tab->prompt_ids();
  } else {
    doc["prompt_ids"] = nlohmann::json::array();
  }
  const auto params = policy.parameters();
  doc["params"] = std::vector<double>(params.begin(), params.end());
  return doc;
}

std::unique_ptr<Policy> policy_from_json(const nlohmann::json& doc) {
  try {
    const std::string kind = doc.at("kind").get<std::string>();
    const auto vocab = doc.at("vocab_size").get<std::size_t>();
    auto params = doc.at("params").get<std::vector<double>>();
    if (kind == "tabular") {
      auto ids = doc.at("prompt_ids").get<std::vector<std::int64_t>>();
      return std::make_unique<TabularPolicy>(std::move(ids), vocab, std::move(params));
    }
    if (kind == "linear") return std::make_unique<LinearSoftmaxPolicy>(vocab, std::move(params));
    throw ConfigError("unknown policy kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed policy JSON: ") + e.what());
  }
}

void save_policy(const Policy& policy, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << policy_to_json(policy).dump() << '\n';
}

std::unique_ptr<Policy> load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed policy JSON in " + path.string() + ": " + e.what());
  }
  return policy_from_json(doc);
}

}  // namespace multipref
