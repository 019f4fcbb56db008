#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace capexrl {

/// Provenance record written next to every run's outputs.
struct RunManifest {
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<std::string> artifact_paths;
    std::string version_tag;
    std::string started_at;   // ISO 8601 UTC
    std::string finished_at;

    void save_file(const std::string& path) const;
    static RunManifest load_file(const std::string& path);
};

std::string iso8601_utc_now();

}  // namespace capexrl
