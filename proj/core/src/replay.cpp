#include "capexrl/replay.hpp"

#include "capexrl/errors.hpp"

namespace capexrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) {
    if (capacity == 0) throw ConfigError("buffer_capacity", "replay capacity must be >= 1");
    ring_.resize(capacity);
}

void ReplayBuffer::push(const Experience& exp) {
    ring_[head_] = exp;
    head_ = (head_ + 1) % ring_.size();
    if (count_ < ring_.size()) ++count_;
    ++total_pushed_;
}

bool ReplayBuffer::sample_indices(std::size_t n, Rng& rng, std::vector<std::size_t>& out) const {
    if (count_ < n) return false;
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = rng.uniform_index(count_);
    return true;
}

std::optional<std::vector<Experience>> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (count_ < n) return std::nullopt;
    std::vector<Experience> batch;
    batch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) batch.push_back(ring_[rng.uniform_index(count_)]);
    return batch;
}

std::vector<Experience> ReplayBuffer::snapshot() const {
    std::vector<Experience> out;
    out.reserve(count_);
    const std::size_t oldest = count_ < ring_.size() ? 0 : head_;
    for (std::size_t i = 0; i < count_; ++i) {
        out.push_back(ring_[(oldest + i) % ring_.size()]);
    }
    return out;
}

}  // namespace capexrl
