#pragma once

#include <filesystem>
#include <string>

#include "autm/flow.hpp"

namespace autm {

/// JSON checkpoint holding the dimension, every layer descriptor (kind, split,
/// side, family, solver, conditioner shape and flat parameters, permutation)
/// and nothing else. Doubles are written in shortest round-trip form, so
/// loading gives back bit-identical parameters.
std::string checkpoint_to_json(const FlowModel& model);
/// Throws ParseError on malformed JSON and ConfigError on inconsistent contents.
FlowModel checkpoint_from_json(const std::string& text);

void save_checkpoint(const FlowModel& model, const std::filesystem::path& path);
FlowModel load_checkpoint(const std::filesystem::path& path);

}  // namespace autm
