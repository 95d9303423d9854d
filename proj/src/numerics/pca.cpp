#include "disentlab/numerics/pca.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace disentlab::numerics {

PcaModel pca_fit(const Matrix& data, Eigen::Index k) {
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.cols();
    if (n < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
    if (k < 1 || k > std::min(n, d))
        throw std::invalid_argument("pca_fit: k=" + std::to_string(k) + " outside [1, min(N, d)]");
    if (!data.allFinite()) throw std::invalid_argument("pca_fit: non-finite input");

    PcaModel model;
    model.mean = data.colwise().mean().transpose();
    const Matrix centered = data.rowwise() - model.mean.transpose();
    const Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success) throw std::runtime_error("pca_fit: eigendecomposition failed");

    // Eigen returns ascending eigenvalues.
    model.components.resize(k, d);
    model.explained_variance.resize(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const Eigen::Index src = d - 1 - c;
        model.explained_variance(c) = std::max(0.0, eig.eigenvalues()(src));
        Vector v = eig.eigenvectors().col(src);
        for (Eigen::Index j = 0; j < d; ++j) {
            if (std::abs(v(j)) > 1e-12) {
                if (v(j) < 0) v = -v;
                break;
            }
        }
        model.components.row(c) = v.transpose();
    }

    const double scale = std::max(1.0, centered.cwiseAbs().maxCoeff());
    if (model.explained_variance(0) <= 1e-24 * scale * scale) model.status = PcaStatus::degenerate;
    return model;
}

Matrix pca_project(const PcaModel& model, const Matrix& data) {
    if (data.cols() != model.input_dim())
        throw std::invalid_argument("pca_project: data has " + std::to_string(data.cols()) +
                                    " columns, model expects " + std::to_string(model.input_dim()));
    return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Matrix pca_reconstruct(const PcaModel& model, const Matrix& scores) {
    if (scores.cols() != model.rank()) throw std::invalid_argument("pca_reconstruct: rank mismatch");
    return (scores * model.components).rowwise() + model.mean.transpose();
}

}  // namespace disentlab::numerics
