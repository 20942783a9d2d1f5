#pragma once

#include <string>
#include <vector>

#include "sklab/model.hpp"

namespace sklab {

/// Parses a model description (YAML). Syntax errors give Error(ParseError)
/// with line and column; unrecognised keys give Error(UnknownKey) and
/// absent required keys Error(MissingField). The result is not validated.
ModelSpec parse_config(const std::string& text, const std::string& source = "<config>");

/// Reads a file and forwards to parse_config. Error(Io) if unreadable.
ModelSpec load_config(const std::string& path);

/// Bundled model descriptions used by the acceptance suite.
std::vector<std::string> preset_names();
const std::string& preset_text(const std::string& name);  // Error(UnknownPreset)
ModelSpec load_preset(const std::string& name);

}  // namespace sklab
