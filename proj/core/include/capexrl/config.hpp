#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace capexrl {

/// Flat-plus-sections key-value configuration text:
///
///   # comment
///   [section]
///   key = value
///
/// Keys before any section header live in the "" section. Values keep their
/// raw text; typed getters parse on access. The canonical form (sections and
/// keys sorted) is what gets hashed into the run digest, so reordering a file
/// does not change its identity.
class ConfigFile {
public:
    ConfigFile() = default;

    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    double get_real(const std::string& section, const std::string& key) const;
    long long get_int(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_real(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key, long long fallback) const;

    /// Comma-separated integer list, e.g. "hidden = 64,64".
    std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                  const std::vector<int>& fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    /// "section.key=value" override, the CLI --set form.
    void apply_override(const std::string& spec);

    /// Sorted, normalized rendering. Stable under key reordering in the source.
    std::string canonical() const;

    /// 16-hex-digit FNV-1a hash of canonical(). Identifies a resolved config.
    std::string digest() const;

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// Every hyperparameter of the tabular and deep Q-learning trainers.
struct TrainingConfig {
    long long episodes = 150000;
    double gamma = 1.0;          // RL discount; financial discounting lives in rewards
    double learning_rate = 1e-3;
    double eps_start = 1.0;
    double eps_end = 0.001;
    double eps_decay = 0.99995;
    int batch_size = 64;
    int buffer_capacity = 100000;
    int min_buffer_fill = 1000;
    int target_sync_period = 1000;  // gradient steps between target refreshes
    std::uint64_t seed = 1;
    std::vector<int> hidden = {64, 64};
    std::string optimizer = "adam";  // adam | sgd

    void validate() const;

    static TrainingConfig from_config(const ConfigFile& cfg);
};

}  // namespace capexrl
