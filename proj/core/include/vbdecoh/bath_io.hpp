#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "vbdecoh/spin_model.hpp"

namespace vbdecoh {

/// Snapshot of a generated bath: positions, species and tensors.
nlohmann::json bath_to_json(std::span<const BathSpin> bath);
std::vector<BathSpin> bath_from_json(const nlohmann::json& j);

void save_bath(const std::filesystem::path& path, std::span<const BathSpin> bath);
std::vector<BathSpin> load_bath(const std::filesystem::path& path);

}  // namespace vbdecoh
