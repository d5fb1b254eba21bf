#include "fishsim/kv_file.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fishsim {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

void write_kv_file(const std::string& path, const KvPairs& pairs) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("Could not open file for writing: " + path);
    for (const auto& [k, v] : pairs)
        out << k << " = " << v << "\n";
    if (!out)
        throw std::runtime_error("Write failed: " + path);
}

KvPairs read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("Could not open file: " + path);
    KvPairs pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected `key = value`");
        pairs.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return pairs;
}

std::optional<std::string> kv_find(const KvPairs& pairs, const std::string& key) {
    for (const auto& [k, v] : pairs)
        if (k == key)
            return v;
    return std::nullopt;
}

std::string kv_get(const KvPairs& pairs, const std::string& key) {
    if (auto v = kv_find(pairs, key))
        return *v;
    throw std::runtime_error("Missing key: " + key);
}

double kv_get_double(const KvPairs& pairs, const std::string& key) {
    const std::string v = kv_get(pairs, key);
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size())
        throw std::runtime_error("Key " + key + ": not a number: " + v);
    return d;
}

long long kv_get_int(const KvPairs& pairs, const std::string& key) {
    const std::string v = kv_get(pairs, key);
    std::size_t used = 0;
    long long i = std::stoll(v, &used);
    if (used != v.size())
        throw std::runtime_error("Key " + key + ": not an integer: " + v);
    return i;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace fishsim
