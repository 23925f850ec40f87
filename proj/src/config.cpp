#include "slowfast/config.hpp"

#include "slowfast/io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace slowfast::config {

View::View(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("field '{}': expected an object", path_));
}

std::string View::field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool View::has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

const Json& View::at(const std::string& key) const {
    if (!has(key)) throw ConfigError(fmt::format("field '{}': missing", field(key)));
    return j_.at(key);
}

View View::sub(const std::string& key) const {
    static const Json empty = Json::object();
    if (!has(key)) return {empty, field(key)};
    return {at(key), field(key)};
}

namespace {

double as_number(const Json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "+inf" || s == "infinity") return kInf;
        if (s == "-inf" || s == "-infinity") return -kInf;
    }
    throw ConfigError(fmt::format("field '{}': expected a number", where));
}

}  // namespace

double View::number(const std::string& key) const { return as_number(at(key), field(key)); }

double View::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

long View::integer(const std::string& key) const {
    const Json& v = at(key);
    if (v.is_number_integer()) return v.get<long>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long>(d);
    }
    throw ConfigError(fmt::format("field '{}': expected an integer", field(key)));
}

long View::integer(const std::string& key, long fallback) const { return has(key) ? integer(key) : fallback; }

bool View::boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(fmt::format("field '{}': expected true or false", field(key)));
    return v.get<bool>();
}

std::string View::text(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError(fmt::format("field '{}': expected a string", field(key)));
    return v.get<std::string>();
}

std::string View::text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
}

Vec View::vec(const std::string& key, int size) const {
    const Json& v = at(key);
    Vec out;
    if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], fmt::format("{}[{}]", field(key), i)));
    } else {
        out.push_back(as_number(v, field(key)));
    }
    if (size >= 0 && static_cast<int>(out.size()) != size)
        throw ConfigError(fmt::format("field '{}': expected {} entries, got {}", field(key), size, out.size()));
    return out;
}

Vec View::vec(const std::string& key, const Vec& fallback, int size) const {
    return has(key) ? vec(key, size) : fallback;
}

std::vector<long> View::integers(const std::string& key, const std::vector<long>& fallback) const {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_array()) throw ConfigError(fmt::format("field '{}': expected a list of integers", field(key)));
    std::vector<long> out;
    for (const auto& e : v) {
        if (!e.is_number_integer()) throw ConfigError(fmt::format("field '{}': expected a list of integers", field(key)));
        out.push_back(e.get<long>());
    }
    return out;
}

void View::only(std::initializer_list<const char*> allowed) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(fmt::format("field '{}': unknown key", field(it.key())));
    }
}

Json parse(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError(fmt::format("{}: {}", origin, e.what()));
    }
}

Json load(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", file));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), file);
}

void apply_override(Json& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError(fmt::format("override '{}': expected key=value", assignment));
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(raw);
    } catch (const Json::parse_error&) {
        value = raw;
    }
    Json* node = &cfg;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError(fmt::format("override '{}': empty path component", assignment));
        if (!node->is_object()) {
            if (!node->is_null())
                throw ConfigError(fmt::format("override '{}': '{}' is not an object", assignment, key.substr(0, start)));
            *node = Json::object();
        }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

std::string hash(const Json& cfg) { return io::sha256_hex(cfg.dump()); }

SystemPtr system_from_json(const Json& j, const std::string& path) {
    if (j.is_string()) return builtin(j.get<std::string>());
    const View v(j, path);
    if (v.has("builtin")) {
        v.only({"builtin"});
        return builtin(v.text("builtin"));
    }
    v.only({"name", "dim_slow", "dim_fast", "period", "f", "B", "C", "f_sup_norm", "lipschitz_f",
            "nondegeneracy_floor"});
    ExpressionSystem def;
    def.dim_slow = static_cast<int>(v.integer("dim_slow", 1));
    def.dim_fast = static_cast<int>(v.integer("dim_fast", 1));
    if (def.dim_slow < 1 || def.dim_slow > kMaxDim)
        throw ConfigError(fmt::format("field '{}': must lie in [1, {}]", v.field("dim_slow"), kMaxDim));
    if (def.dim_fast < 1 || def.dim_fast > kMaxDim)
        throw ConfigError(fmt::format("field '{}': must lie in [1, {}]", v.field("dim_fast"), kMaxDim));
    if (v.has("period")) def.period = v.vec("period", def.dim_fast);
    auto strings = [&](const std::string& key, std::size_t n) {
        const Json& a = v.raw().contains(key) ? v.raw().at(key) : Json();
        if (!a.is_array() || a.size() != n)
            throw ConfigError(fmt::format("field '{}': expected a list of {} expressions", v.field(key), n));
        std::vector<std::string> out;
        for (std::size_t i = 0; i < n; ++i) {
            if (a[i].is_number())
                out.push_back(io::num(a[i].get<double>()));
            else if (a[i].is_string())
                out.push_back(a[i].get<std::string>());
            else
                throw ConfigError(fmt::format("field '{}[{}]': expected an expression", v.field(key), i));
        }
        return out;
    };
    const auto l = static_cast<std::size_t>(def.dim_fast);
    def.f = strings("f", static_cast<std::size_t>(def.dim_slow));
    def.B = strings("B", l);
    def.C = strings("C", l * l);
    def.f_sup_norm = v.number("f_sup_norm");
    def.lipschitz_f = v.number("lipschitz_f", 0.0);
    def.nondegeneracy_floor = v.number("nondegeneracy_floor");
    if (!(def.f_sup_norm >= 0.0)) throw ConfigError(fmt::format("field '{}': must be >= 0", v.field("f_sup_norm")));
    if (!(def.nondegeneracy_floor > 0.0))
        throw ConfigError(fmt::format("field '{}': must be > 0", v.field("nondegeneracy_floor")));
    try {
        return make_expression_system(def, v.text("name", "custom"));
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("field '{}': {}", path, e.what()));
    }
}

}  // namespace slowfast::config
