#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace disentlab::synth {

using FactorTuple = std::vector<int>;

/// Ground-truth factors of variation. Combinations are indexed in
/// lexicographic order with the last factor varying fastest.
struct FactorGrid {
    std::vector<std::string> names;
    std::vector<int> cardinalities;

    /// Six factors shaped like floor/wall/object hue, scale, shape, orientation.
    static FactorGrid defaults();

    std::size_t num_factors() const { return cardinalities.size(); }
    std::uint64_t total_combinations() const;
    void validate() const;

    FactorTuple tuple_at(std::uint64_t index) const;
    std::uint64_t index_of(const FactorTuple& t) const;
    bool contains(const FactorTuple& t) const;
    /// Value v of factor f mapped to [0, 1].
    double normalized(std::size_t factor, int value) const;
};

std::vector<FactorTuple> enumerate_combinations(const FactorGrid& grid);

nlohmann::json to_json(const FactorGrid& grid);
FactorGrid grid_from_json(const nlohmann::json& j);

}  // namespace disentlab::synth
