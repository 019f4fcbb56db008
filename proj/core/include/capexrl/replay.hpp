#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "capexrl/env.hpp"
#include "capexrl/rng.hpp"

namespace capexrl {

/// Fixed-capacity FIFO ring of experience tuples. When full, the oldest
/// entry is evicted first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(const Experience& exp);

    std::size_t size() const { return count_; }
    std::size_t capacity() const { return ring_.size(); }
    long long total_pushed() const { return total_pushed_; }

    bool ready(std::size_t n) const { return count_ >= n; }

    /// n uniform draws with replacement over current contents; empty optional
    /// when the buffer holds fewer than n entries (trainer skips the learn
    /// step). n = 0 yields an empty list.
    std::optional<std::vector<Experience>> sample(std::size_t n, Rng& rng) const;

    /// Draws indices instead of copies; allocation-free inner loop.
    bool sample_indices(std::size_t n, Rng& rng, std::vector<std::size_t>& out) const;

    const Experience& operator[](std::size_t i) const { return ring_[i]; }

    /// Contents oldest-first, for tests and diagnostics.
    std::vector<Experience> snapshot() const;

private:
    std::vector<Experience> ring_;
    std::size_t head_ = 0;   // next write position
    std::size_t count_ = 0;
    long long total_pushed_ = 0;
};

}  // namespace capexrl
