#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fishsim {

/// Ordered key-value text file: one `key = value` per line, `#` comments.
/// Used for sidecar metadata, model parameter files and CLI config files.
using KvPairs = std::vector<std::pair<std::string, std::string>>;

void write_kv_file(const std::string& path, const KvPairs& pairs);
KvPairs read_kv_file(const std::string& path);

std::optional<std::string> kv_find(const KvPairs& pairs, const std::string& key);
std::string kv_get(const KvPairs& pairs, const std::string& key);
double kv_get_double(const KvPairs& pairs, const std::string& key);
long long kv_get_int(const KvPairs& pairs, const std::string& key);

/// Round-trip exact formatting for doubles (shortest form is not needed;
/// %.17g always reparses to the same bits).
std::string format_double(double v);

} // namespace fishsim
