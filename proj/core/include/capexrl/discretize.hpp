#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "capexrl/env.hpp"
#include "capexrl/errors.hpp"

namespace capexrl {

/// Discretized state key: (stage, price bin, demand bin, installed).
/// Stage and installed are taken exact; demand bin is 0 when unbounded.
using StateKey = std::array<int, 4>;

struct StateKeyHash {
    std::size_t operator()(const StateKey& k) const noexcept {
        std::size_t h = 1469598103934665603ull;
        for (int v : k) {
            h ^= static_cast<std::size_t>(static_cast<unsigned>(v));
            h *= 1099511628211ull;
            h ^= h >> 29;
        }
        return h;
    }
};

/// Maps continuous price/demand to bin indices via sorted edge arrays.
/// Bin i covers [edge_i, edge_{i+1}); values off either end clamp to the
/// outermost bin so every positive real maps to exactly one bin.
class Discretizer {
public:
    Discretizer(std::vector<double> price_edges, std::vector<double> demand_edges);

    /// 200 uniform price bins on [0, p1*exp((mu1+4*sigma1)*T)], covering
    /// four-sigma growth over the horizon; demand handled likewise when the
    /// variant has it.
    static Discretizer defaults_for(const EnvParams& params, int bins = 200);

    int price_bin(double price) const;
    int demand_bin(double demand) const;

    double price_bin_low(int bin) const { return price_edges_[static_cast<std::size_t>(bin)]; }
    double demand_bin_low(int bin) const { return demand_edges_[static_cast<std::size_t>(bin)]; }

    int price_bin_count() const { return static_cast<int>(price_edges_.size()) - 1; }
    int demand_bin_count() const {
        return demand_edges_.empty() ? 0 : static_cast<int>(demand_edges_.size()) - 1;
    }

    StateKey key(const EnvState& state) const;

private:
    std::vector<double> price_edges_;
    std::vector<double> demand_edges_;  // empty when the variant has no demand
};

}  // namespace capexrl
