#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "disentlab/metrics/report.hpp"
#include "disentlab/synthdata/grid.hpp"

namespace disentlab::idealrep {

using metrics::RepresentationMatrix;

/// Column f holds factor f's value mapped to [0, 1].
RepresentationMatrix ideal_scalar(const synth::FactorGrid& grid, const IndexMatrix& tuples,
                                  synth::Side side = synth::Side::test);

/// Unit f holds the normalized value of factor f times a fixed unit-norm
/// D-vector drawn from embed_seed.
RepresentationMatrix ideal_vector(const synth::FactorGrid& grid, const IndexMatrix& tuples, int unit_dim,
                                  std::uint64_t embed_seed, synth::Side side = synth::Side::test);

/// Row i is a unit-norm Gaussian direction; rows only depend on (seed, i).
Matrix embedding_vectors(int units, int unit_dim, std::uint64_t seed);

RepresentationMatrix map_embed(const RepresentationMatrix& scalar, int unit_dim, std::uint64_t seed);
RepresentationMatrix map_repeat(const RepresentationMatrix& scalar, int unit_dim);

enum class CorruptionKind { none, shifted, matrix, matrix_shifted };
std::string to_string(CorruptionKind k);
CorruptionKind corruption_from_string(const std::string& s);

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::none;
    double alpha_train = 1.0;
    double beta_train = 0.0;
    double alpha_test = 3.0;
    double beta_test = -1.0;
    double max_condition = 100.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Gaussian n x n matrix, redrawn until its condition number is at most
/// max_condition. After 200 rejected draws the last draw's singular values
/// are clipped to [s_max / max_condition, s_max] instead.
Matrix mix_matrix(Eigen::Index n, std::uint64_t seed, double max_condition = 100.0);

/// Shift applies alpha*x + beta with the train pair on train and the test
/// pair on test. Matrix multiplies both sides by the same mix matrix.
std::pair<RepresentationMatrix, RepresentationMatrix> corrupt(const RepresentationMatrix& train,
                                                              const RepresentationMatrix& test,
                                                              const CorruptionSpec& spec);

/// A trained scalar model's codes, the source of the mapped rows.
struct LearnedSource {
    std::string name;
    RepresentationMatrix train;
    RepresentationMatrix test;
};

struct Table2Options {
    int unit_dim = 16;             // vector size of ideal_vector and the mappings
    std::uint64_t embed_seed = 11;
    std::uint64_t eval_seed = 0;
    CorruptionSpec corruption;     // kind is overridden per row
    metrics::EvalOptions eval;
};

struct Table2Row {
    std::string group;   // ideal_scalar | ideal_vector | learned | mapped
    std::string method;  // e.g. "Ideal", "Matrix + shifted", "beta_tcvae embed"
    metrics::MetricsReport report;
};

/// Eight ideal rows (scalar and vector x four corruptions), then for every
/// learned source its scalar row plus embed and repeat rows.
std::vector<Table2Row> run_table2(const synth::FactorGrid& grid, const IndexMatrix& train_tuples,
                                  const IndexMatrix& test_tuples, const std::vector<LearnedSource>& sources,
                                  const Table2Options& opts = {});

/// CSV with header group,method,r2,acc,dci.
void write_table2_csv(const std::filesystem::path& path, const std::vector<Table2Row>& rows);

}  // namespace disentlab::idealrep
