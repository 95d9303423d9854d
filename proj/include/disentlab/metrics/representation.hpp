#pragma once

#include <vector>

#include "disentlab/linalg.hpp"
#include "disentlab/synthdata/dataset.hpp"

namespace disentlab::metrics {

/// Evaluated codes and their ground-truth factor labels. Unit i occupies
/// columns [i*D, (i+1)*D) of `codes`.
struct RepresentationMatrix {
    Matrix codes;          // N x (m*D)
    IndexMatrix factors;   // N x F
    int units = 0;
    int unit_dim = 1;
    synth::Side side = synth::Side::test;

    Eigen::Index rows() const { return codes.rows(); }
    void validate() const;

    /// Labels of factor f as a vector.
    std::vector<int> factor_column(Eigen::Index f) const;
    RepresentationMatrix select_rows(const std::vector<Eigen::Index>& rows) const;
};

struct PostprocessResult {
    RepresentationMatrix train;
    RepresentationMatrix test;
    std::vector<int> degenerate_units;  // zero-variance units, emitted as zero columns
};

/// Replaces each unit's D-column block by its first principal component
/// score, fitted on the train codes only. Identity for D = 1.
PostprocessResult pca_postprocess(const RepresentationMatrix& train, const RepresentationMatrix& test);

}  // namespace disentlab::metrics
