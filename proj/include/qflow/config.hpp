#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qflow/errors.hpp"

namespace qflow {

/// Flat dotted-key/value config (`material.a = 1.0`, `#` comments).
/// Keys are tracked on read so unknown keys can be reported.
class Config {
  public:
    Config() = default;

    static Config parse_file(const std::string& path);
    static Config parse_text(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& def) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double def) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long def) const;
    bool get_bool(const std::string& key, bool def) const;
    std::uint64_t get_seed(const std::string& key) const;  // required, no default

    void set(const std::string& key, const std::string& value);

    /// Keys present in the file but never read; call after building a run
    /// config to reject typos.
    std::vector<std::string> unread_keys() const;

    /// Canonical text form: sorted keys, one per line.
    std::string canonical() const;

    /// FNV-1a 64-bit hash of the canonical form.
    std::uint64_t hash() const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

  private:
    std::string require(const std::string& key) const;

    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> read_;
    std::string origin_ = "<empty>";
};

}  // namespace qflow
