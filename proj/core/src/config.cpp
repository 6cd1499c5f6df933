#include "gswm/config.hpp"

#include <charconv>
#include <cmath>

#include "gswm/error.hpp"
#include "gswm/fileio.hpp"

namespace gswm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  require(ec == std::errc() && ptr == end, ErrorCode::kParse,
          "config key '" + key + "' has invalid value '" + value + "'");
  return out;
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config cfg;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string_view::npos, ErrorCode::kParse,
            "config line " + std::to_string(line_no) + " is not 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorCode::kParse, "config line " + std::to_string(line_no) + " has an empty key");
    cfg.values_[std::string(key)] = std::string(value);
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  const double d = parse_number<double>(key, *v);
  require(std::isfinite(d), ErrorCode::kParse, "config key '" + key + "' is not finite");
  return d;
}

int Config::get_int(const std::string& key, int fallback) const {
  const auto v = get(key);
  return v ? parse_number<int>(key, *v) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  fail(ErrorCode::kParse, "config key '" + key + "' is not a boolean: '" + *v + "'");
}

void Config::require_known(const std::set<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    require(known.contains(key), ErrorCode::kParse, "unknown config key '" + key + "'");
  }
}

}  // namespace gswm
