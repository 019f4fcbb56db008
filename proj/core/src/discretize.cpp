#include "capexrl/discretize.hpp"

#include <algorithm>
#include <cmath>

namespace capexrl {

namespace {

void check_edges(const std::vector<double>& edges, const char* what) {
    if (edges.size() < 2) throw ShapeError(std::string(what) + ": need at least two bin edges");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) {
            throw ShapeError(std::string(what) + ": bin edges must be strictly increasing");
        }
    }
}

int locate(const std::vector<double>& edges, double value) {
    // bin i covers [edges[i], edges[i+1]); clamp outside values to the ends
    const auto it = std::upper_bound(edges.begin(), edges.end(), value);
    const auto idx = static_cast<long>(it - edges.begin()) - 1;
    const long last = static_cast<long>(edges.size()) - 2;
    return static_cast<int>(std::clamp(idx, 0l, last));
}

std::vector<double> uniform_edges(double low, double high, int bins) {
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) {
        edges[static_cast<std::size_t>(i)] = low + (high - low) * i / bins;
    }
    return edges;
}

}  // namespace

Discretizer::Discretizer(std::vector<double> price_edges, std::vector<double> demand_edges)
    : price_edges_(std::move(price_edges)), demand_edges_(std::move(demand_edges)) {
    check_edges(price_edges_, "price");
    if (!demand_edges_.empty()) check_edges(demand_edges_, "demand");
}

Discretizer Discretizer::defaults_for(const EnvParams& params, int bins) {
    const double price_high =
        params.initial_price *
        std::exp((params.price_drift + 4.0 * params.price_vol) * params.horizon);
    std::vector<double> demand_edges;
    if (params.demand_enabled()) {
        const double demand_high =
            params.initial_demand *
            std::exp((params.demand_drift + 4.0 * params.demand_vol) * params.horizon);
        demand_edges = uniform_edges(0.0, demand_high, bins);
    }
    return Discretizer(uniform_edges(0.0, price_high, bins), std::move(demand_edges));
}

int Discretizer::price_bin(double price) const { return locate(price_edges_, price); }

int Discretizer::demand_bin(double demand) const {
    if (demand_edges_.empty()) return 0;
    return locate(demand_edges_, demand);
}

StateKey Discretizer::key(const EnvState& state) const {
    return StateKey{state.t, price_bin(state.price),
                    state.demand ? demand_bin(*state.demand) : 0, state.installed};
}

}  // namespace capexrl
