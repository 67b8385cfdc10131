#pragma once

#include <filesystem>
#include <memory>

#include "json.hpp"
#include "multipref/policy.hpp"

namespace multipref {

// {"kind": "tabular"|"linear", "vocab_size": int, "prompt_ids": [...], "params": [...]}
nlohmann::json policy_to_json(const Policy& policy);
std::unique_ptr<Policy> policy_from_json(const nlohmann::json& doc);

void save_policy(const Policy& policy, const std::filesystem::path& path);
std::unique_ptr<Policy> load_policy(const std::filesystem::path& path);

}  // namespace multipref
