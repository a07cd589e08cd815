#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace realize {

/// One `[name]` block of a config file.
struct ConfigSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;  // key = value, in file order
    std::vector<std::string> lines;                            // lines without '=' ([plan] only)

    const std::string* find(std::string_view key) const;
};

/// Sectioned key-value text: `[section]` headers, `key = value` lines,
/// `#` comments, case-sensitive keys. Throws ConfigError on malformed input.
class Config {
public:
    static Config parse(std::string_view text);

    const ConfigSection* section(std::string_view name) const;
    bool has(std::string_view name) const { return section(name) != nullptr; }

    /// Value of `key` in `section`, or nullopt.
    std::optional<std::string> get(std::string_view section, std::string_view key) const;

    /// Like get() but throws ConfigError naming the missing field.
    std::string require(std::string_view section, std::string_view key) const;

    /// Applies `section.key=value`, replacing or appending the entry.
    void set(std::string_view dotted_key, std::string_view value);

    const std::vector<ConfigSection>& sections() const { return sections_; }

private:
    std::vector<ConfigSection> sections_;
};

std::string trim(std::string_view s);

/// Splits on `sep` and trims each piece.
std::vector<std::string> split(std::string_view s, char sep);

/// Parses a real number with nothing trailing; throws ConfigError naming `what`.
double parse_real(std::string_view s, const std::string& what);
int parse_int(std::string_view s, const std::string& what);

}  // namespace realize
