#include "disentlab/metrics/representation.hpp"

#include <stdexcept>

#include "disentlab/numerics/pca.hpp"

namespace disentlab::metrics {

void RepresentationMatrix::validate() const {
    if (units < 1 || unit_dim < 1) throw std::invalid_argument("representation: units and unit_dim must be positive");
    if (codes.cols() != static_cast<Eigen::Index>(units) * unit_dim)
        throw std::invalid_argument("representation: code width does not match unit layout");
    if (codes.rows() != factors.rows()) throw std::invalid_argument("representation: codes and factors misaligned");
    if (!codes.allFinite()) throw std::invalid_argument("representation: non-finite codes");
}

std::vector<int> RepresentationMatrix::factor_column(Eigen::Index f) const {
    std::vector<int> out(static_cast<std::size_t>(factors.rows()));
    for (Eigen::Index r = 0; r < factors.rows(); ++r) out[static_cast<std::size_t>(r)] = factors(r, f);
    return out;
}

RepresentationMatrix RepresentationMatrix::select_rows(const std::vector<Eigen::Index>& rows) const {
    RepresentationMatrix out{Matrix(static_cast<Eigen::Index>(rows.size()), codes.cols()),
                             IndexMatrix(static_cast<Eigen::Index>(rows.size()), factors.cols()), units, unit_dim, side};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.codes.row(static_cast<Eigen::Index>(i)) = codes.row(rows[i]);
        out.factors.row(static_cast<Eigen::Index>(i)) = factors.row(rows[i]);
    }
    return out;
}

PostprocessResult pca_postprocess(const RepresentationMatrix& train, const RepresentationMatrix& test) {
    train.validate();
    test.validate();
    if (train.units != test.units || train.unit_dim != test.unit_dim)
        throw std::invalid_argument("pca_postprocess: train/test layouts differ");
    PostprocessResult out{train, test, {}};
    if (train.unit_dim == 1) return out;

    const int d = train.unit_dim;
    out.train.codes.resize(train.rows(), train.units);
    out.test.codes.resize(test.rows(), test.units);
    out.train.unit_dim = out.test.unit_dim = 1;
    for (int u = 0; u < train.units; ++u) {
        const auto model = numerics::pca_fit(train.codes.middleCols(u * d, d), 1);
        if (model.status == numerics::PcaStatus::degenerate) {
            out.degenerate_units.push_back(u);
            out.train.codes.col(u).setZero();
            out.test.codes.col(u).setZero();
            continue;
        }
        out.train.codes.col(u) = numerics::pca_project(model, train.codes.middleCols(u * d, d)).col(0);
        out.test.codes.col(u) = numerics::pca_project(model, test.codes.middleCols(u * d, d)).col(0);
    }
    return out;
}

}  // namespace disentlab::metrics
