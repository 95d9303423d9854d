#pragma once

#include "disentlab/linalg.hpp"

namespace disentlab::numerics {

enum class PcaStatus { ok, degenerate };

struct PcaModel {
    Vector mean;                 // length d
    Matrix components;           // k x d, orthonormal rows
    Vector explained_variance;   // length k, non-increasing
    PcaStatus status = PcaStatus::ok;

    Eigen::Index input_dim() const { return mean.size(); }
    Eigen::Index rank() const { return components.rows(); }
};

/// Top-k principal directions of the centered data (sample covariance, N-1).
/// Each component's first entry with |c| > 1e-12 is made positive.
PcaModel pca_fit(const Matrix& data, Eigen::Index k);

/// (data - mean) * components^T
Matrix pca_project(const PcaModel& model, const Matrix& data);

/// scores * components + mean
Matrix pca_reconstruct(const PcaModel& model, const Matrix& scores);

}  // namespace disentlab::numerics
