// SPDX-License-Identifier: Apache-2.0

#include "arguagent/assets.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <utility>

#include "arguagent/error.hpp"

namespace arguagent::assets {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kEmbedded[];
extern const std::size_t kEmbeddedCount;
}  // namespace detail

std::optional<std::string_view> embedded(std::string_view name) {
  for (std::size_t i = 0; i < detail::kEmbeddedCount; ++i) {
    if (detail::kEmbedded[i].first == name) return detail::kEmbedded[i].second;
  }
  return std::nullopt;
}

std::vector<std::string_view> embedded_names() {
  std::vector<std::string_view> names;
  for (std::size_t i = 0; i < detail::kEmbeddedCount; ++i) names.push_back(detail::kEmbedded[i].first);
  return names;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "cannot read '" + path.string() + "'");
  return std::move(buf).str();
}

std::string load(std::string_view name, const std::filesystem::path& root) {
  if (!root.empty()) return read_file(root / name);
  if (const char* env = std::getenv("ARGUAGENT_ASSET_DIR"); env != nullptr && *env != '\0') {
    const auto path = std::filesystem::path(env) / name;
    std::error_code ec;
    if (std::filesystem::is_regular_file(path, ec)) return read_file(path);
  }
  if (const auto text = embedded(name)) return std::string(*text);
  throw Error(ErrorKind::Io, "no asset named '" + std::string(name) + "'");
}

}  // namespace arguagent::assets
