#pragma once

#include "slowfast/model.hpp"

#include "json.hpp"

#include <initializer_list>
#include <optional>
#include <string>

namespace slowfast::config {

using Json = nlohmann::json;

/// Read-only view of one config section. Accessors throw ConfigError
/// naming the dotted field path on missing or mistyped values.
class View {
public:
    View(const Json& j, std::string path);

    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] View sub(const std::string& key) const;
    [[nodiscard]] const Json& raw() const { return j_; }
    [[nodiscard]] const std::string& path() const { return path_; }
    [[nodiscard]] std::string field(const std::string& key) const;

    /// Numbers; the strings "inf" / "-inf" are accepted as infinities.
    [[nodiscard]] double number(const std::string& key) const;
    [[nodiscard]] double number(const std::string& key, double fallback) const;
    [[nodiscard]] long integer(const std::string& key) const;
    [[nodiscard]] long integer(const std::string& key, long fallback) const;
    [[nodiscard]] bool boolean(const std::string& key, bool fallback) const;
    [[nodiscard]] std::string text(const std::string& key) const;
    [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) const;
    /// A number is accepted as a vector of length 1. `size` < 0 skips the length check.
    [[nodiscard]] Vec vec(const std::string& key, int size = -1) const;
    [[nodiscard]] Vec vec(const std::string& key, const Vec& fallback, int size = -1) const;
    [[nodiscard]] std::vector<long> integers(const std::string& key, const std::vector<long>& fallback) const;

    /// Throws on keys outside `allowed`.
    void only(std::initializer_list<const char*> allowed) const;

private:
    const Json& j_;
    std::string path_;

    [[nodiscard]] const Json& at(const std::string& key) const;
};

[[nodiscard]] Json parse(const std::string& text, const std::string& origin = "config");
[[nodiscard]] Json load(const std::string& file);

/// `key.sub=value`; value parsed as JSON when possible, else kept as a string.
void apply_override(Json& cfg, const std::string& assignment);

/// SHA-256 of the canonical serialization (sorted keys, no whitespace).
[[nodiscard]] std::string hash(const Json& cfg);

/// `"name"` for a builtin, or an object
/// {dim_slow, dim_fast, period?, f: [...], B: [...], C: [...], f_sup_norm, lipschitz_f, nondegeneracy_floor}.
[[nodiscard]] SystemPtr system_from_json(const Json& j, const std::string& path = "system");

}  // namespace slowfast::config
