#include "realize/config.hpp"

#include "realize/errors.hpp"

#include <charconv>
#include <cmath>

namespace realize {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

double parse_real(std::string_view s, const std::string& what) {
    const std::string t = trim(s);
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (!t.empty() && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (t.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ConfigError(what + ": '" + t + "' is not a finite real number");
    }
    return v;
}

int parse_int(std::string_view s, const std::string& what) {
    const std::string t = trim(s);
    int v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw ConfigError(what + ": '" + t + "' is not an integer");
    }
    return v;
}

const std::string* ConfigSection::find(std::string_view key) const {
    for (const auto& [k, v] : entries) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

Config Config::parse(std::string_view text) {
    Config cfg;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        std::string_view raw = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string_view::npos ? raw : raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        const std::string where = "line " + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError(where + ": malformed section header '" + line + "'");
            }
            const std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
            if (cfg.section(name)) {
                throw ConfigError(where + ": duplicate section [" + name + "]");
            }
            cfg.sections_.push_back({name, {}, {}});
            continue;
        }
        if (cfg.sections_.empty()) {
            throw ConfigError(where + ": entry outside of any section");
        }
        ConfigSection& sec = cfg.sections_.back();
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (sec.name != "plan") {
                throw ConfigError(where + ": expected 'key = value' in [" + sec.name + "]");
            }
            sec.lines.push_back(line);
            continue;
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(where + ": empty key");
        }
        if (sec.find(key)) {
            throw ConfigError(where + ": duplicate key '" + key + "' in [" + sec.name + "]");
        }
        sec.entries.emplace_back(key, value);
    }
    return cfg;
}

const ConfigSection* Config::section(std::string_view name) const {
    for (const auto& s : sections_) {
        if (s.name == name) {
            return &s;
        }
    }
    return nullptr;
}

std::optional<std::string> Config::get(std::string_view sec, std::string_view key) const {
    const ConfigSection* s = section(sec);
    if (!s) {
        return std::nullopt;
    }
    const std::string* v = s->find(key);
    return v ? std::optional<std::string>(*v) : std::nullopt;
}

std::string Config::require(std::string_view sec, std::string_view key) const {
    auto v = get(sec, key);
    if (!v) {
        throw ConfigError("missing field '" + std::string(key) + "' in [" + std::string(sec) + "]");
    }
    return *v;
}

void Config::set(std::string_view dotted_key, std::string_view value) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == dotted_key.size()) {
        throw ConfigError("override key must look like section.key, got '" +
                          std::string(dotted_key) + "'");
    }
    const std::string sec(dotted_key.substr(0, dot));
    const std::string key(dotted_key.substr(dot + 1));
    ConfigSection* target = nullptr;
    for (auto& s : sections_) {
        if (s.name == sec) {
            target = &s;
        }
    }
    if (!target) {
        sections_.push_back({sec, {}, {}});
        target = &sections_.back();
    }
    for (auto& [k, v] : target->entries) {
        if (k == key) {
            v = std::string(value);
            return;
        }
    }
    target->entries.emplace_back(key, std::string(value));
}

}  // namespace realize
