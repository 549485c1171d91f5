#pragma once

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergolab {

struct ConfigParseError : std::runtime_error {
    int line;
    ConfigParseError(int ln, const std::string& msg)
        : std::runtime_error("config parse error at line " + std::to_string(ln) + ": " + msg),
          line(ln) {}
};

struct ConfigValidationError : std::runtime_error {
    std::string key;
    explicit ConfigValidationError(const std::string& k, const std::string& why)
        : std::runtime_error("config key '" + k + "': " + why), key(k) {}
};

/// Flat key = value configuration with namespaced keys (grid.n_rho = 400).
/// Parsing is strict: malformed lines fail with their line number, and a
/// whitelist validation pass rejects unknown keys so experiments cannot
/// silently drift.
class KeyValueConfig {
  public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string& text) {
        KeyValueConfig out;
        std::istringstream in(text);
        std::string line;
        int ln = 0;
        while (std::getline(in, line)) {
            ++ln;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigParseError(ln, "expected 'key = value'");
            std::string key = trim(trimmed.substr(0, eq));
            std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) throw ConfigParseError(ln, "empty key");
            if (value.empty()) throw ConfigParseError(ln, "empty value for key '" + key + "'");
            for (char c : key)
                if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
                      c == '-'))
                    throw ConfigParseError(ln, "invalid character in key '" + key + "'");
            if (out.kv_.count(key)) throw ConfigParseError(ln, "duplicate key '" + key + "'");
            out.kv_[key] = value;
        }
        return out;
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string get_string(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigValidationError(key, "required key is missing");
        return it->second;
    }
    std::string get_string(const std::string& key, const std::string& dflt) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? dflt : it->second;
    }

    double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
    double get_double(const std::string& key, double dflt) const {
        return has(key) ? get_double(key) : dflt;
    }

    long get_int(const std::string& key) const {
        const std::string v = get_string(key);
        std::size_t pos = 0;
        long r = 0;
        try {
            r = std::stol(v, &pos);
        } catch (const std::exception&) {
            throw ConfigValidationError(key, "expected an integer, got '" + v + "'");
        }
        if (pos != v.size())
            throw ConfigValidationError(key, "expected an integer, got '" + v + "'");
        return r;
    }
    long get_int(const std::string& key, long dflt) const {
        return has(key) ? get_int(key) : dflt;
    }

    bool get_bool(const std::string& key, bool dflt) const {
        if (!has(key)) return dflt;
        std::string v = get_string(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigValidationError(key, "expected a boolean, got '" + v + "'");
    }

    /// Comma-separated list of doubles.
    std::vector<double> get_doubles(const std::string& key) const {
        std::vector<double> out;
        std::istringstream in(get_string(key));
        std::string item;
        while (std::getline(in, item, ',')) out.push_back(to_double(key, trim(item)));
        return out;
    }

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    const std::map<std::string, std::string>& items() const { return kv_; }

    /// Reject any key that does not match the whitelist. Entries ending in
    /// '.' are prefixes; everything else must match exactly.
    void validate_keys(const std::set<std::string>& allowed) const {
        for (const auto& [key, value] : kv_) {
            (void)value;
            bool ok = allowed.count(key) > 0;
            if (!ok) {
                for (const auto& a : allowed) {
                    if (!a.empty() && a.back() == '.' && key.rfind(a, 0) == 0) {
                        ok = true;
                        break;
                    }
                }
            }
            if (!ok) throw ConfigValidationError(key, "unknown key");
        }
    }

  private:
    std::map<std::string, std::string> kv_;

    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        std::size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static double to_double(const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        double r = 0;
        try {
            r = std::stod(v, &pos);
        } catch (const std::exception&) {
            throw ConfigValidationError(key, "expected a number, got '" + v + "'");
        }
        if (pos != v.size()) throw ConfigValidationError(key, "expected a number, got '" + v + "'");
        return r;
    }
};

}  // namespace ergolab
