/**
 * @file config.hpp
 * @brief JSON session configuration files.
 */

#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "admc/session.hpp"

namespace admc {

/// Applies the keys present in `j` on top of `base`. Unknown keys and wrong
/// types throw Error(kInvalidConfig); the result is validated.
SessionConfig config_from_json(const nlohmann::json& j, SessionConfig base = {});
nlohmann::json config_to_json(const SessionConfig& cfg);
SessionConfig load_config(const std::filesystem::path& path, SessionConfig base = {});

}  // namespace admc
