#pragma once

#include <filesystem>
#include <string>

#include "tvol/model.hpp"

namespace tvol {

/// Parses the INI-style model description documented in docs/model_format.md.
/// Throws std::invalid_argument with a message naming the offending section/key.
ModelSpec parse_model_text(const std::string& text);

/// Reads and parses a model file; errors name the path.
ModelSpec load_model_file(const std::filesystem::path& path);

/// Serializes a model so that parse_model_text(model_to_text(m)) reproduces it.
std::string model_to_text(const ModelSpec& model);

}  // namespace tvol
