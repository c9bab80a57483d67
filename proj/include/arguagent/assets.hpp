// SPDX-License-Identifier: Apache-2.0
//
// Access to the editable text assets (prompts, marker rules, fixtures). Every
// file under assets/ is compiled into the library; a directory given at run
// time, or ARGUAGENT_ASSET_DIR, takes precedence so edits need no rebuild.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace arguagent::assets {

/// Compiled-in copy of `name` (path relative to the asset root).
std::optional<std::string_view> embedded(std::string_view name);

std::vector<std::string_view> embedded_names();

/// Reads `name` from `root` when given (missing file is Error(Io)); otherwise
/// from ARGUAGENT_ASSET_DIR if the file exists there; otherwise the embedded
/// copy.
std::string load(std::string_view name, const std::filesystem::path& root = {});

/// Whole-file read; Error(Io) on failure.
std::string read_file(const std::filesystem::path& path);

}  // namespace arguagent::assets
