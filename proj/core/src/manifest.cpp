#include "capexrl/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "capexrl/errors.hpp"

namespace capexrl {

std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("out", "cannot write manifest: " + path);
    out << "config_digest = " << config_digest << '\n';
    out << "seed = " << seed << '\n';
    out << "version = " << version_tag << '\n';
    out << "started_at = " << started_at << '\n';
    out << "finished_at = " << finished_at << '\n';
    for (const auto& p : artifact_paths) out << "artifact = " << p << '\n';
}

RunManifest RunManifest::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("manifest", "cannot open manifest: " + path);
    RunManifest m;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
                s.pop_back();
            }
        };
        trim(key);
        trim(value);
        if (key == "config_digest") {
            m.config_digest = value;
        } else if (key == "seed") {
            m.seed = std::stoull(value);
        } else if (key == "version") {
            m.version_tag = value;
        } else if (key == "started_at") {
            m.started_at = value;
        } else if (key == "finished_at") {
            m.finished_at = value;
        } else if (key == "artifact") {
            m.artifact_paths.push_back(value);
        }
    }
    return m;
}

}  // namespace capexrl
