#include "capexrl/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "capexrl/errors.hpp"
#include "capexrl/rng.hpp"

namespace capexrl {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
    // '#' starts a comment unless inside a value we care about; values here
    // never legitimately contain '#'.
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str());
}

ConfigFile ConfigFile::parse_string(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config",
                                  "malformed section header at line " + std::to_string(lineno));
            }
            section = trim(line.substr(1, line.size() - 2));
            cfg.sections_[section];  // a section may legitimately be empty
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config", "expected key = value at line " + std::to_string(lineno));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config", "empty key at line " + std::to_string(lineno));
        }
        cfg.sections_[section][key] = value;
    }
    return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    const auto sit = sections_.find(section);
    if (sit == sections_.end()) return false;
    return sit->second.count(key) > 0;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key) const {
    const auto sit = sections_.find(section);
    if (sit != sections_.end()) {
        const auto kit = sit->second.find(key);
        if (kit != sit->second.end()) return kit->second;
    }
    throw ConfigError(key, "missing required key '" + key + "' in [" + section + "]");
}

double ConfigFile::get_real(const std::string& section, const std::string& key) const {
    const std::string raw = get_string(section, key);
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key, "key '" + key + "' in [" + section + "] is not a number: " + raw);
    }
}

long long ConfigFile::get_int(const std::string& section, const std::string& key) const {
    const std::string raw = get_string(section, key);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc{} || ptr != raw.data() + raw.size()) {
        throw ConfigError(key, "key '" + key + "' in [" + section + "] is not an integer: " + raw);
    }
    return v;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    return has(section, key) ? get_string(section, key) : fallback;
}

double ConfigFile::get_real(const std::string& section, const std::string& key,
                            double fallback) const {
    return has(section, key) ? get_real(section, key) : fallback;
}

long long ConfigFile::get_int(const std::string& section, const std::string& key,
                              long long fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

std::vector<int> ConfigFile::get_int_list(const std::string& section, const std::string& key,
                                          const std::vector<int>& fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = get_string(section, key);
    std::vector<int> out;
    std::istringstream in(raw);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        int v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size()) {
            throw ConfigError(key, "key '" + key + "' in [" + section +
                                       "] is not an integer list: " + raw);
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw ConfigError(key, "key '" + key + "' in [" + section + "] is empty");
    }
    return out;
}

void ConfigFile::set(const std::string& section, const std::string& key,
                     const std::string& value) {
    sections_[section][key] = value;
}

void ConfigFile::apply_override(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("set", "override must look like section.key=value: " + spec);
    }
    const std::string path = trim(spec.substr(0, eq));
    const std::string value = trim(spec.substr(eq + 1));
    const auto dot = path.find('.');
    if (dot == std::string::npos) {
        throw ConfigError("set", "override must look like section.key=value: " + spec);
    }
    set(path.substr(0, dot), path.substr(dot + 1), value);
}

std::string ConfigFile::canonical() const {
    std::ostringstream out;
    for (const auto& [section, entries] : sections_) {
        if (!section.empty()) out << '[' << section << "]\n";
        for (const auto& [key, value] : entries) {
            out << key << " = " << value << '\n';
        }
    }
    return out.str();
}

std::string ConfigFile::digest() const {
    const std::uint64_t h = detail::fnv1a64(canonical());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

void TrainingConfig::validate() const {
    if (episodes < 0) throw ConfigError("episodes", "episodes must be >= 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma", "gamma must be in [0, 1]");
    if (!(learning_rate > 0.0)) throw ConfigError("alpha", "learning rate must be > 0");
    if (!(eps_end > 0.0 && eps_end <= eps_start && eps_start <= 1.0)) {
        throw ConfigError("eps_end", "need 0 < eps_end <= eps_start <= 1");
    }
    if (!(eps_decay > 0.0 && eps_decay <= 1.0)) {
        throw ConfigError("eps_decay", "eps_decay must be in (0, 1]");
    }
    if (batch_size < 1) throw ConfigError("batch_size", "batch_size must be >= 1");
    if (buffer_capacity < 1) throw ConfigError("buffer_capacity", "buffer_capacity must be >= 1");
    if (batch_size > buffer_capacity) {
        throw ConfigError("batch_size", "batch_size cannot exceed buffer_capacity");
    }
    if (min_buffer_fill < 1) throw ConfigError("min_buffer_fill", "min_buffer_fill must be >= 1");
    if (target_sync_period < 1) {
        throw ConfigError("sync_period", "target sync period must be >= 1");
    }
    if (hidden.empty()) throw ConfigError("hidden", "need at least one hidden layer");
    for (int h : hidden) {
        if (h < 1) throw ConfigError("hidden", "hidden layer sizes must be >= 1");
    }
    if (optimizer != "adam" && optimizer != "sgd") {
        throw ConfigError("optimizer", "optimizer must be 'adam' or 'sgd': " + optimizer);
    }
}

TrainingConfig TrainingConfig::from_config(const ConfigFile& cfg) {
    TrainingConfig tc;
    tc.episodes = cfg.get_int("train", "episodes", tc.episodes);
    tc.gamma = cfg.get_real("train", "gamma", tc.gamma);
    tc.learning_rate = cfg.get_real("train", "alpha", tc.learning_rate);
    tc.eps_start = cfg.get_real("train", "eps_start", tc.eps_start);
    tc.eps_end = cfg.get_real("train", "eps_end", tc.eps_end);
    tc.eps_decay = cfg.get_real("train", "eps_decay", tc.eps_decay);
    tc.batch_size = static_cast<int>(cfg.get_int("train", "batch_size", tc.batch_size));
    tc.buffer_capacity =
        static_cast<int>(cfg.get_int("train", "buffer_capacity", tc.buffer_capacity));
    tc.min_buffer_fill =
        static_cast<int>(cfg.get_int("train", "min_buffer_fill", tc.min_buffer_fill));
    tc.target_sync_period =
        static_cast<int>(cfg.get_int("train", "sync_period", tc.target_sync_period));
    tc.seed = static_cast<std::uint64_t>(cfg.get_int("train", "seed", 1));
    tc.hidden = cfg.get_int_list("train", "hidden", tc.hidden);
    tc.optimizer = cfg.get_string("train", "optimizer", tc.optimizer);
    tc.validate();
    return tc;
}

}  // namespace capexrl
