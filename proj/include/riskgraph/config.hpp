#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "riskgraph/train_eval.hpp"

namespace riskgraph {

/// Parses flat `key = value` text with optional `[section]` headers into a
/// TrainConfig. Errors are ConfigError with a `line N:` prefix.
/// `given`, when non-null, receives the `section.key` names set explicitly.
TrainConfig parse_train_config(std::string_view text, std::set<std::string>* given = nullptr);
TrainConfig load_train_config(const std::filesystem::path& path,
                              std::set<std::string>* given = nullptr);

// Every key with its resolved value, keyed `section.key`.
std::map<std::string, std::string> config_values(const TrainConfig& config);

}  // namespace riskgraph
