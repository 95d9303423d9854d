#include "disentlab/synthdata/grid.hpp"

#include <stdexcept>

namespace disentlab::synth {

FactorGrid FactorGrid::defaults() {
    return {{"floor_hue", "wall_hue", "object_hue", "scale", "shape", "orientation"}, {10, 10, 10, 8, 4, 15}};
}

void FactorGrid::validate() const {
    if (cardinalities.empty()) throw std::invalid_argument("FactorGrid: no factors");
    if (!names.empty() && names.size() != cardinalities.size())
        throw std::invalid_argument("FactorGrid: names and cardinalities differ in length");
    for (int c : cardinalities)
        if (c < 2) throw std::invalid_argument("FactorGrid: every cardinality must be >= 2");
}

std::uint64_t FactorGrid::total_combinations() const {
    std::uint64_t total = 1;
    for (int c : cardinalities) total *= static_cast<std::uint64_t>(c);
    return total;
}

FactorTuple FactorGrid::tuple_at(std::uint64_t index) const {
    if (index >= total_combinations()) throw std::out_of_range("FactorGrid::tuple_at: index out of range");
    FactorTuple t(cardinalities.size());
    for (std::size_t f = cardinalities.size(); f-- > 0;) {
        const auto c = static_cast<std::uint64_t>(cardinalities[f]);
        t[f] = static_cast<int>(index % c);
        index /= c;
    }
    return t;
}

bool FactorGrid::contains(const FactorTuple& t) const {
    if (t.size() != cardinalities.size()) return false;
    for (std::size_t f = 0; f < t.size(); ++f)
        if (t[f] < 0 || t[f] >= cardinalities[f]) return false;
    return true;
}

std::uint64_t FactorGrid::index_of(const FactorTuple& t) const {
    if (!contains(t)) throw std::out_of_range("FactorGrid::index_of: tuple not in grid");
    std::uint64_t index = 0;
    for (std::size_t f = 0; f < t.size(); ++f) index = index * static_cast<std::uint64_t>(cardinalities[f]) + t[f];
    return index;
}

double FactorGrid::normalized(std::size_t factor, int value) const {
    return static_cast<double>(value) / static_cast<double>(cardinalities.at(factor) - 1);
}

std::vector<FactorTuple> enumerate_combinations(const FactorGrid& grid) {
    grid.validate();
    const auto total = grid.total_combinations();
    std::vector<FactorTuple> out;
    out.reserve(total);
    FactorTuple t(grid.num_factors(), 0);
    for (std::uint64_t i = 0; i < total; ++i) {
        out.push_back(t);
        for (std::size_t f = t.size(); f-- > 0;) {
            if (++t[f] < grid.cardinalities[f]) break;
            t[f] = 0;
        }
    }
    return out;
}

nlohmann::json to_json(const FactorGrid& grid) {
    return {{"names", grid.names}, {"cardinalities", grid.cardinalities}};
}

FactorGrid grid_from_json(const nlohmann::json& j) {
    FactorGrid g;
    g.cardinalities = j.at("cardinalities").get<std::vector<int>>();
    g.names = j.value("names", std::vector<std::string>{});
    if (g.names.empty())
        for (std::size_t f = 0; f < g.cardinalities.size(); ++f) g.names.push_back("factor" + std::to_string(f));
    g.validate();
    return g;
}

}  // namespace disentlab::synth
