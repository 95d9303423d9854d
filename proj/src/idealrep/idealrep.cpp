#include "disentlab/idealrep/idealrep.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

#include <Eigen/SVD>

#include "disentlab/numerics/rng.hpp"

namespace disentlab::idealrep {

RepresentationMatrix ideal_scalar(const synth::FactorGrid& grid, const IndexMatrix& tuples, synth::Side side) {
    const auto nf = static_cast<Eigen::Index>(grid.num_factors());
    if (tuples.cols() != nf) throw std::invalid_argument("ideal_scalar: tuple width does not match grid");
    RepresentationMatrix rep{Matrix(tuples.rows(), nf), tuples, static_cast<int>(nf), 1, side};
    for (Eigen::Index r = 0; r < tuples.rows(); ++r)
        for (Eigen::Index f = 0; f < nf; ++f) rep.codes(r, f) = grid.normalized(static_cast<std::size_t>(f), tuples(r, f));
    return rep;
}

Matrix embedding_vectors(int units, int unit_dim, std::uint64_t seed) {
    if (units < 1 || unit_dim < 1) throw std::invalid_argument("embedding_vectors: sizes must be positive");
    const numerics::RngStream root(seed);
    Matrix e(units, unit_dim);
    for (int i = 0; i < units; ++i) {
        auto s = root.child(static_cast<std::uint64_t>(i));
        do {
            for (int j = 0; j < unit_dim; ++j) e(i, j) = s.normal();
        } while (e.row(i).norm() < 1e-8);
        e.row(i).normalize();
    }
    return e;
}

RepresentationMatrix map_embed(const RepresentationMatrix& scalar, int unit_dim, std::uint64_t seed) {
    scalar.validate();
    if (scalar.unit_dim != 1) throw std::invalid_argument("map_embed: input must be scalar per unit");
    if (unit_dim < 1) throw std::invalid_argument("map_embed: unit_dim must be positive");
    if (unit_dim == 1) return scalar;
    const Matrix e = embedding_vectors(scalar.units, unit_dim, seed);
    RepresentationMatrix out{Matrix(scalar.rows(), static_cast<Eigen::Index>(scalar.units) * unit_dim), scalar.factors,
                             scalar.units, unit_dim, scalar.side};
    for (int u = 0; u < scalar.units; ++u)
        out.codes.middleCols(static_cast<Eigen::Index>(u) * unit_dim, unit_dim) = scalar.codes.col(u) * e.row(u);
    return out;
}

RepresentationMatrix ideal_vector(const synth::FactorGrid& grid, const IndexMatrix& tuples, int unit_dim,
                                  std::uint64_t embed_seed, synth::Side side) {
    if (unit_dim < 2) throw std::invalid_argument("ideal_vector: unit_dim must be at least 2");
    return map_embed(ideal_scalar(grid, tuples, side), unit_dim, embed_seed);
}

RepresentationMatrix map_repeat(const RepresentationMatrix& scalar, int unit_dim) {
    scalar.validate();
    if (scalar.unit_dim != 1) throw std::invalid_argument("map_repeat: input must be scalar per unit");
    if (unit_dim < 1) throw std::invalid_argument("map_repeat: unit_dim must be positive");
    RepresentationMatrix out{Matrix(scalar.rows(), static_cast<Eigen::Index>(scalar.units) * unit_dim), scalar.factors,
                             scalar.units, unit_dim, scalar.side};
    for (int u = 0; u < scalar.units; ++u)
        for (int j = 0; j < unit_dim; ++j) out.codes.col(static_cast<Eigen::Index>(u) * unit_dim + j) = scalar.codes.col(u);
    return out;
}

std::string to_string(CorruptionKind k) {
    switch (k) {
        case CorruptionKind::none: return "none";
        case CorruptionKind::shifted: return "shifted";
        case CorruptionKind::matrix: return "matrix";
        case CorruptionKind::matrix_shifted: return "matrix_shifted";
    }
    return "none";
}

CorruptionKind corruption_from_string(const std::string& s) {
    for (auto k : {CorruptionKind::none, CorruptionKind::shifted, CorruptionKind::matrix, CorruptionKind::matrix_shifted})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown corruption kind: " + s);
}

void CorruptionSpec::validate() const {
    const bool shifts = kind == CorruptionKind::shifted || kind == CorruptionKind::matrix_shifted;
    if (shifts && alpha_train == alpha_test && beta_train == beta_test)
        throw std::invalid_argument("corruption: train and test shifts must differ");
    if (!(max_condition >= 1.0)) throw std::invalid_argument("corruption: max_condition must be >= 1");
}

Matrix mix_matrix(Eigen::Index n, std::uint64_t seed, double max_condition) {
    if (n < 1) throw std::invalid_argument("mix_matrix: size must be positive");
    const numerics::RngStream root(seed);
    Matrix g(n, n);
    for (std::uint64_t attempt = 0; attempt < 200; ++attempt) {
        auto s = root.child(attempt);
        for (Eigen::Index c = 0; c < n; ++c)
            for (Eigen::Index r = 0; r < n; ++r) g(r, c) = s.normal();
        Eigen::JacobiSVD<Matrix> svd(g);
        const auto& sv = svd.singularValues();
        if (sv(n - 1) > 0.0 && sv(0) / sv(n - 1) <= max_condition) return g;
    }
    Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vector sv = svd.singularValues();
    sv = sv.cwiseMax(sv(0) / max_condition);
    return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

std::pair<RepresentationMatrix, RepresentationMatrix> corrupt(const RepresentationMatrix& train,
                                                              const RepresentationMatrix& test,
                                                              const CorruptionSpec& spec) {
    spec.validate();
    train.validate();
    test.validate();
    if (train.codes.cols() != test.codes.cols()) throw std::invalid_argument("corrupt: code widths differ");
    auto out = std::pair{train, test};
    if (spec.kind == CorruptionKind::matrix || spec.kind == CorruptionKind::matrix_shifted) {
        const Matrix mix = mix_matrix(train.codes.cols(), spec.seed, spec.max_condition);
        out.first.codes = train.codes * mix;
        out.second.codes = test.codes * mix;
    }
    if (spec.kind == CorruptionKind::shifted || spec.kind == CorruptionKind::matrix_shifted) {
        out.first.codes = (spec.alpha_train * out.first.codes.array() + spec.beta_train).matrix();
        out.second.codes = (spec.alpha_test * out.second.codes.array() + spec.beta_test).matrix();
    }
    return out;
}

namespace {

std::string row_label(CorruptionKind k) {
    switch (k) {
        case CorruptionKind::none: return "Ideal";
        case CorruptionKind::shifted: return "Shifted";
        case CorruptionKind::matrix: return "Matrix";
        case CorruptionKind::matrix_shifted: return "Matrix + shifted";
    }
    return "";
}

}  // namespace

std::vector<Table2Row> run_table2(const synth::FactorGrid& grid, const IndexMatrix& train_tuples,
                                  const IndexMatrix& test_tuples, const std::vector<LearnedSource>& sources,
                                  const Table2Options& opts) {
    std::vector<Table2Row> rows;
    auto evaluate = [&](const RepresentationMatrix& tr, const RepresentationMatrix& te) {
        return metrics::evaluate_all(tr, te, grid, opts.eval_seed, opts.eval);
    };
    const std::pair<std::string, std::pair<RepresentationMatrix, RepresentationMatrix>> ideals[] = {
        {"ideal_scalar",
         {ideal_scalar(grid, train_tuples, synth::Side::train), ideal_scalar(grid, test_tuples, synth::Side::test)}},
        {"ideal_vector",
         {ideal_vector(grid, train_tuples, opts.unit_dim, opts.embed_seed, synth::Side::train),
          ideal_vector(grid, test_tuples, opts.unit_dim, opts.embed_seed, synth::Side::test)}},
    };
    for (const auto& [group, pair] : ideals) {
        for (auto kind : {CorruptionKind::none, CorruptionKind::shifted, CorruptionKind::matrix,
                          CorruptionKind::matrix_shifted}) {
            auto spec = opts.corruption;
            spec.kind = kind;
            const auto [tr, te] = corrupt(pair.first, pair.second, spec);
            rows.push_back({group, row_label(kind), evaluate(tr, te)});
        }
    }
    for (const auto& src : sources) {
        rows.push_back({"learned", src.name, evaluate(src.train, src.test)});
        rows.push_back({"mapped", src.name + " embed",
                        evaluate(map_embed(src.train, opts.unit_dim, opts.embed_seed),
                                 map_embed(src.test, opts.unit_dim, opts.embed_seed))});
        rows.push_back({"mapped", src.name + " repeat",
                        evaluate(map_repeat(src.train, opts.unit_dim), map_repeat(src.test, opts.unit_dim))});
    }
    return rows;
}

void write_table2_csv(const std::filesystem::path& path, const std::vector<Table2Row>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "group,method,r2,acc,dci\n" << std::fixed << std::setprecision(4);
    for (const auto& r : rows)
        out << r.group << ',' << r.method << ',' << r.report.r2 << ',' << r.report.acc << ',' << r.report.dci << '\n';
}

}  // namespace disentlab::idealrep
