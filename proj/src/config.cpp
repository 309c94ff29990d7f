#include "qflow/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace qflow {

namespace {
std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.kv_.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                              key + "'");
        cfg.kv_[key] = val;
    }
    return cfg;
}

std::string Config::require(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end())
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
    read_.insert(key);
    return it->second;
}

std::string Config::get_string(const std::string& key) const { return require(key); }

std::string Config::get_string(const std::string& key, const std::string& def) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    read_.insert(key);
    return it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string v = require(key);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError(origin_ + ": key '" + key + "': cannot parse '" + v +
                          "' as a number");
    return x;
}

double Config::get_double(const std::string& key, double def) const {
    return has(key) ? get_double(key) : def;
}

long long Config::get_int(const std::string& key) const {
    const std::string v = require(key);
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError(origin_ + ": key '" + key + "': cannot parse '" + v +
                          "' as an integer");
    return x;
}

long long Config::get_int(const std::string& key, long long def) const {
    return has(key) ? get_int(key) : def;
}

bool Config::get_bool(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string v = get_string(key);
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(origin_ + ": key '" + key + "': expected on/off, got '" + v + "'");
}

std::uint64_t Config::get_seed(const std::string& key) const {
    const std::string v = require(key);
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError(origin_ + ": key '" + key + "': cannot parse '" + v +
                          "' as a seed");
    return static_cast<std::uint64_t>(x);
}

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }

std::vector<std::string> Config::unread_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : kv_)
        if (!read_.count(k)) out.push_back(k);
    return out;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

std::uint64_t Config::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char ch : canonical()) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace qflow
