#pragma once

// `key = value` text configuration with dotted keys. Lines starting with '#'
// and blank lines are ignored; trailing '# ...' comments are stripped.
// Typed lookups collect every problem and report them together.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hbmo/errors.hpp"

namespace hbmo {

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

} // namespace detail

class Config {
public:
    static Config parse(std::istream& in, const std::string& source = "<config>") {
        Config c;
        c.source_ = source;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string t = detail::trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            const std::string where = source + ":" + std::to_string(lineno);
            if (eq == std::string::npos) {
                c.errors_.push_back(where + ": expected 'key = value'");
                continue;
            }
            const std::string key = detail::trim(std::string_view(t).substr(0, eq));
            const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
            if (key.empty()) {
                c.errors_.push_back(where + ": empty key");
                continue;
            }
            if (c.values_.count(key)) c.errors_.push_back(where + ": duplicate key '" + key + "'");
            c.values_[key] = value;
        }
        return c;
    }

    static Config parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        return parse(in, path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::optional<std::string> raw(const std::string& key) {
        used_.insert(key);
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) {
        return raw(key).value_or(fallback);
    }

    std::string require_string(const std::string& key) {
        auto v = raw(key);
        if (!v || v->empty()) {
            fail(key, "is required");
            return {};
        }
        return *v;
    }

    double get_double(const std::string& key, double fallback) {
        const auto v = raw(key);
        if (!v) return fallback;
        if (const auto d = detail::to_double(*v)) return *d;
        fail(key, "expects a number, got '" + *v + "'");
        return fallback;
    }

    double require_double(const std::string& key) {
        if (!has(key)) {
            used_.insert(key);
            fail(key, "is required");
            return 0.0;
        }
        return get_double(key, 0.0);
    }

    std::size_t get_size(const std::string& key, std::size_t fallback) {
        const auto v = raw(key);
        if (!v) return fallback;
        std::size_t out = 0;
        const char* end = v->data() + v->size();
        const auto [ptr, ec] = std::from_chars(v->data(), end, out);
        if (ec != std::errc() || ptr != end) {
            fail(key, "expects a non-negative integer, got '" + *v + "'");
            return fallback;
        }
        return out;
    }

    /// Whitespace-separated numbers; commas separate groups.
    std::vector<std::vector<double>> get_groups(const std::string& key) {
        const auto v = raw(key);
        std::vector<std::vector<double>> out;
        if (!v) return out;
        std::stringstream groups(*v);
        std::string group;
        while (std::getline(groups, group, ',')) {
            std::istringstream nums(group);
            std::vector<double> g;
            std::string tok;
            while (nums >> tok) {
                if (const auto d = detail::to_double(tok)) {
                    g.push_back(*d);
                } else {
                    fail(key, "contains a non-number '" + tok + "'");
                    return {};
                }
            }
            if (!g.empty()) out.push_back(std::move(g));
        }
        return out;
    }

    /// A flat list of numbers (commas and whitespace both separate).
    std::vector<double> get_list(const std::string& key) {
        std::vector<double> flat;
        for (const auto& g : get_groups(key)) flat.insert(flat.end(), g.begin(), g.end());
        return flat;
    }

    void fail(const std::string& key, const std::string& what) { errors_.push_back(key + " " + what); }

    /// Reports keys that were never looked up.
    void reject_unknown() {
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) errors_.push_back("unknown key '" + k + "'");
    }

    const std::vector<std::string>& errors() const { return errors_; }

    /// Throws one ConfigError listing every collected problem.
    void throw_if_errors() const {
        if (errors_.empty()) return;
        std::ostringstream msg;
        msg << source_ << ": " << errors_.size() << " configuration problem" << (errors_.size() == 1 ? "" : "s");
        for (const auto& e : errors_) msg << "\n  - " << e;
        throw ConfigError(msg.str());
    }

private:
    std::string source_;
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
    std::vector<std::string> errors_;
};

} // namespace hbmo
