#pragma once

#include <filesystem>
#include <string>

#include "afpb/experiment.hpp"

namespace afpb {

/// Flat INI: sections [experiment], [data], [occlusion], [train],
/// [saliency]. Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

/// Resolved config in the same format, every key spelled out.
std::string format_config(const ExperimentConfig& cfg);

}  // namespace afpb
