#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "disentlab/linalg.hpp"
#include "disentlab/neural/mlp.hpp"
#include "disentlab/numerics/rng.hpp"
#include "disentlab/synthdata/grid.hpp"

namespace disentlab::synth {

struct ObservationSpec {
    int d_x = 64;
    std::uint64_t generator_seed = 7;
    double noise_std = 0.0;
    int hidden = 64;
    double hidden_gain = 2.0;

    nlohmann::json to_json() const;
    static ObservationSpec from_json(const nlohmann::json& j);
};

/// Frozen tanh MLP mapping factor tuples (each factor scaled to [-1, 1]) to
/// d_x-dimensional observations.
class ObservationModel {
public:
    /// Builds the generator and, unless told otherwise, verifies that it is
    /// injective on the grid (min pairwise distance > 1e-6).
    ObservationModel(FactorGrid grid, ObservationSpec spec, bool verify = true);

    const FactorGrid& grid() const { return grid_; }
    const ObservationSpec& spec() const { return spec_; }
    const neural::MlpSpec& generator_spec() const { return gen_spec_; }
    const neural::ParamBlock& generator_params() const { return gen_params_; }

    /// Noise (if any) is drawn from `noise`; pass nullptr when noise_std == 0.
    Vector render(const FactorTuple& factors, numerics::RngStream* noise = nullptr) const;
    /// Rows of `factors` are tuples. Row r takes noise from noise.child(r).
    Matrix render_batch(const IndexMatrix& factors, const numerics::RngStream* noise = nullptr) const;

    /// Minimum pairwise observation distance over the whole grid, noise-free,
    /// searched up to 1e-3 (returns 1e-3 when no pair is closer).
    double min_pairwise_distance() const;
    /// Product of layer spectral norms (tanh is 1-Lipschitz).
    double lipschitz_bound() const;
    /// Hash of grid + spec, used to tag exported files.
    std::uint64_t spec_hash() const;

private:
    Matrix encode_factors(const IndexMatrix& factors) const;

    FactorGrid grid_;
    ObservationSpec spec_;
    neural::MlpSpec gen_spec_;
    neural::ParamBlock gen_params_;
};

enum class Side { train, test };

struct SplitMask {
    std::pair<int, int> ratio{1, 9};
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> train;  // sorted combination indices
    std::vector<std::uint64_t> test;

    const std::vector<std::uint64_t>& side(Side s) const { return s == Side::train ? train : test; }
    nlohmann::json to_json() const;
    static SplitMask from_json(const nlohmann::json& j);
};

/// Random combination-level partition; re-drawn (up to 100 times) until every
/// factor value occurs in at least one training combination.
SplitMask split_combinations(const FactorGrid& grid, std::pair<int, int> ratio, std::uint64_t seed);

struct Batch {
    Matrix observations;  // batch x d_x
    IndexMatrix factors;  // batch x F
};

/// i.i.d. uniform draws over the combinations of one side of the split.
Batch sample_batch(const ObservationModel& model, const SplitMask& mask, Side side, int batch,
                   numerics::RngStream& rng);

IndexMatrix tuples_to_matrix(const FactorGrid& grid, std::span<const std::uint64_t> indices);

/// Writes <dir>/dataset.bin (magic, JSON header, f32 payload in combination
/// order) and <dir>/split.json.
void export_dataset(const std::filesystem::path& dir, const ObservationModel& model, const SplitMask& mask);

struct DatasetHeader {
    FactorGrid grid;
    ObservationSpec spec;
    std::uint64_t spec_hash = 0;
    std::uint64_t rows = 0;
    nlohmann::json split;
};

DatasetHeader read_dataset_header(const std::filesystem::path& dir);
/// Reads the f32 payload back (rows x d_x).
Matrix read_dataset_observations(const std::filesystem::path& dir);
SplitMask read_split(const std::filesystem::path& dir);

}  // namespace disentlab::synth
