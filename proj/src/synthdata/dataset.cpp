#include "disentlab/synthdata/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "disentlab/neural/checkpoint.hpp"

namespace disentlab::synth {

namespace {
constexpr char kDatasetMagic[9] = "DLABDATA";
constexpr Eigen::Index kRenderChunk = 4096;
}  // namespace

nlohmann::json ObservationSpec::to_json() const {
    return {{"d_x", d_x},
            {"generator_seed", generator_seed},
            {"noise_std", noise_std},
            {"hidden", hidden},
            {"hidden_gain", hidden_gain}};
}

ObservationSpec ObservationSpec::from_json(const nlohmann::json& j) {
    ObservationSpec s;
    s.d_x = j.value("d_x", s.d_x);
    s.generator_seed = j.value("generator_seed", s.generator_seed);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.hidden = j.value("hidden", s.hidden);
    s.hidden_gain = j.value("hidden_gain", s.hidden_gain);
    if (s.d_x < 1 || s.hidden < 1 || s.noise_std < 0.0) throw std::invalid_argument("ObservationSpec: invalid values");
    return s;
}

ObservationModel::ObservationModel(FactorGrid grid, ObservationSpec spec, bool verify)
    : grid_(std::move(grid)), spec_(spec) {
    grid_.validate();
    const int f = static_cast<int>(grid_.num_factors());
    gen_spec_ = neural::MlpSpec::uniform({f, spec_.hidden, spec_.hidden, spec_.d_x}, neural::Activation::tanh,
                                         spec_.generator_seed);
    gen_params_ = neural::init_params(gen_spec_, 1.0);
    // Hidden layers get a larger gain and small random biases so the map is
    // clearly nonlinear; the output layer is scaled for roughly unit variance.
    numerics::RngStream rng = numerics::RngStream(spec_.generator_seed).child("generator-biases");
    for (std::size_t l = 0; l < gen_spec_.num_layers(); ++l) {
        auto w = gen_params_.weight(l);
        auto b = gen_params_.bias(l);
        if (l + 1 < gen_spec_.num_layers()) {
            w *= spec_.hidden_gain * std::sqrt(3.0);
            for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.5, 0.5);
        } else {
            w *= std::sqrt(3.0);
        }
    }
    if (verify) {
        const double d = min_pairwise_distance();
        if (!(d > 1e-6))
            throw std::runtime_error("ObservationModel: generator is not injective on the grid (min distance " +
                                     std::to_string(d) + ")");
    }
}

Matrix ObservationModel::encode_factors(const IndexMatrix& factors) const {
    if (factors.cols() != static_cast<Eigen::Index>(grid_.num_factors()))
        throw std::invalid_argument("render: factor tuple width does not match grid");
    Matrix u(factors.rows(), factors.cols());
    for (Eigen::Index r = 0; r < factors.rows(); ++r)
        for (Eigen::Index c = 0; c < factors.cols(); ++c) {
            const int v = factors(r, c);
            if (v < 0 || v >= grid_.cardinalities[c])
                throw std::out_of_range("render: factor " + std::to_string(c) + " value " + std::to_string(v) +
                                        " out of range");
            u(r, c) = 2.0 * grid_.normalized(static_cast<std::size_t>(c), v) - 1.0;
        }
    return u;
}

Vector ObservationModel::render(const FactorTuple& factors, numerics::RngStream* noise) const {
    IndexMatrix m(1, static_cast<Eigen::Index>(factors.size()));
    for (std::size_t i = 0; i < factors.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = factors[i];
    Vector x = neural::mlp_apply(gen_spec_, gen_params_, encode_factors(m)).row(0).transpose();
    if (spec_.noise_std > 0.0) {
        if (noise == nullptr) throw std::invalid_argument("render: noise_std > 0 requires a noise stream");
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += spec_.noise_std * noise->normal();
    }
    return x;
}

Matrix ObservationModel::render_batch(const IndexMatrix& factors, const numerics::RngStream* noise) const {
    Matrix x = neural::mlp_apply(gen_spec_, gen_params_, encode_factors(factors));
    if (spec_.noise_std > 0.0) {
        if (noise == nullptr) throw std::invalid_argument("render_batch: noise_std > 0 requires a noise stream");
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            auto s = noise->child(static_cast<std::uint64_t>(r));
            for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) += spec_.noise_std * s.normal();
        }
    }
    return x;
}

double ObservationModel::min_pairwise_distance() const {
    // Any pair closer than the threshold is also closer than it along a
    // random direction, so a sorted sweep over projections finds it exactly.
    constexpr double radius = 1e-3;
    const auto total = grid_.total_combinations();
    std::vector<std::uint64_t> all(total);
    std::iota(all.begin(), all.end(), std::uint64_t{0});
    Matrix obs(static_cast<Eigen::Index>(total), spec_.d_x);
    for (std::uint64_t start = 0; start < total; start += kRenderChunk) {
        const auto n = std::min<std::uint64_t>(kRenderChunk, total - start);
        obs.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) =
            neural::mlp_apply(gen_spec_, gen_params_,
                              encode_factors(tuples_to_matrix(grid_, std::span(all).subspan(start, n))));
    }
    // Sort along one random direction; a few more orthogonal directions
    // prune candidates before the full distance is taken.
    constexpr Eigen::Index kDirs = 8;
    numerics::RngStream rng = numerics::RngStream(spec_.generator_seed).child("injectivity-direction");
    Matrix g(spec_.d_x, std::min<Eigen::Index>(kDirs, spec_.d_x));
    for (Eigen::Index c = 0; c < g.cols(); ++c)
        for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = rng.normal();
    const Matrix dirs = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(g.rows(), g.cols());
    const Matrix proj = (obs * dirs).transpose();  // k x N, one column per point
    const Matrix pts = obs.transpose();            // d_x x N
    std::vector<Eigen::Index> order(static_cast<std::size_t>(proj.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return proj(0, a) < proj(0, b); });
    double best = radius;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto a = order[i];
        for (std::size_t j = i + 1; j < order.size() && proj(0, order[j]) - proj(0, a) < best; ++j) {
            const auto b = order[j];
            if (((proj.col(a) - proj.col(b)).cwiseAbs().array() >= best).any()) continue;
            best = std::min(best, (pts.col(a) - pts.col(b)).norm());
        }
    }
    return best;
}

double ObservationModel::lipschitz_bound() const {
    double bound = 1.0;
    for (std::size_t l = 0; l < gen_spec_.num_layers(); ++l) {
        Eigen::JacobiSVD<Matrix> svd(Matrix(gen_params_.weight(l)));
        bound *= svd.singularValues()(0);
    }
    return bound;
}

std::uint64_t ObservationModel::spec_hash() const {
    nlohmann::json j{{"grid", to_json(grid_)}, {"spec", spec_.to_json()}};
    return numerics::fnv1a64(j.dump());
}

nlohmann::json SplitMask::to_json() const {
    return {{"ratio", {ratio.first, ratio.second}}, {"seed", seed}, {"train", train}, {"test", test}};
}

SplitMask SplitMask::from_json(const nlohmann::json& j) {
    SplitMask m;
    const auto r = j.at("ratio").get<std::vector<int>>();
    m.ratio = {r.at(0), r.at(1)};
    m.seed = j.at("seed").get<std::uint64_t>();
    m.train = j.at("train").get<std::vector<std::uint64_t>>();
    m.test = j.at("test").get<std::vector<std::uint64_t>>();
    return m;
}

SplitMask split_combinations(const FactorGrid& grid, std::pair<int, int> ratio, std::uint64_t seed) {
    grid.validate();
    if (ratio.first <= 0 || ratio.second <= 0) throw std::invalid_argument("split_combinations: ratio parts must be positive");
    const auto total = grid.total_combinations();
    const auto n_train = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(total) * ratio.first / (ratio.first + ratio.second)));
    if (n_train == 0 || n_train >= total)
        throw std::invalid_argument("split_combinations: ratio leaves one side empty");

    const numerics::RngStream root(seed);
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto rng = root.child(static_cast<std::uint64_t>(attempt));
        std::vector<std::uint64_t> perm(total);
        std::iota(perm.begin(), perm.end(), std::uint64_t{0});
        rng.shuffle(std::span<std::uint64_t>(perm));

        std::vector<std::vector<bool>> seen(grid.num_factors());
        for (std::size_t f = 0; f < grid.num_factors(); ++f) seen[f].assign(grid.cardinalities[f], false);
        for (std::uint64_t i = 0; i < n_train; ++i) {
            const auto t = grid.tuple_at(perm[i]);
            for (std::size_t f = 0; f < t.size(); ++f) seen[f][t[f]] = true;
        }
        const bool covered = std::all_of(seen.begin(), seen.end(), [](const auto& v) {
            return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
        });
        if (!covered) continue;

        SplitMask mask;
        mask.ratio = ratio;
        mask.seed = seed;
        mask.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
        mask.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
        std::sort(mask.train.begin(), mask.train.end());
        std::sort(mask.test.begin(), mask.test.end());
        return mask;
    }
    throw std::runtime_error("split_combinations: could not cover every factor value in train after 100 retries");
}

IndexMatrix tuples_to_matrix(const FactorGrid& grid, std::span<const std::uint64_t> indices) {
    IndexMatrix m(static_cast<Eigen::Index>(indices.size()), static_cast<Eigen::Index>(grid.num_factors()));
    for (std::size_t r = 0; r < indices.size(); ++r) {
        auto idx = indices[r];
        for (std::size_t f = grid.num_factors(); f-- > 0;) {
            const auto c = static_cast<std::uint64_t>(grid.cardinalities[f]);
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = static_cast<int>(idx % c);
            idx /= c;
        }
    }
    return m;
}

Batch sample_batch(const ObservationModel& model, const SplitMask& mask, Side side, int batch,
                   numerics::RngStream& rng) {
    const auto& pool = mask.side(side);
    if (pool.empty()) throw std::invalid_argument("sample_batch: requested side is empty");
    std::vector<std::uint64_t> picks(static_cast<std::size_t>(batch));
    for (auto& p : picks) p = pool[rng.below(pool.size())];
    Batch b;
    b.factors = tuples_to_matrix(model.grid(), picks);
    if (model.spec().noise_std > 0.0) {
        const auto noise = rng.child(rng.next_u64());
        b.observations = model.render_batch(b.factors, &noise);
    } else {
        b.observations = model.render_batch(b.factors);
    }
    return b;
}

void export_dataset(const std::filesystem::path& dir, const ObservationModel& model, const SplitMask& mask) {
    std::filesystem::create_directories(dir);
    const auto total = model.grid().total_combinations();
    nlohmann::json header{{"version", 1},
                          {"grid", to_json(model.grid())},
                          {"spec", model.spec().to_json()},
                          {"spec_hash", model.spec_hash()},
                          {"rows", total},
                          {"d_x", model.spec().d_x},
                          {"split", {{"ratio", {mask.ratio.first, mask.ratio.second}},
                                     {"seed", mask.seed},
                                     {"n_train", mask.train.size()},
                                     {"n_test", mask.test.size()}}}};
    const std::string text = header.dump();
    std::ofstream out(dir / "dataset.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / "dataset.bin").string());
    out.write(kDatasetMagic, 8);
    neural::write_u64_le(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));

    const numerics::RngStream noise_root = numerics::RngStream(model.spec().generator_seed).child("export-noise");
    std::vector<std::uint64_t> idx(kRenderChunk);
    for (std::uint64_t start = 0; start < total; start += kRenderChunk) {
        const auto n = std::min<std::uint64_t>(kRenderChunk, total - start);
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), start);
        const auto noise = noise_root.child(start);
        const Matrix x = model.render_batch(tuples_to_matrix(model.grid(), idx), &noise);
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            for (Eigen::Index c = 0; c < x.cols(); ++c) neural::write_f32_le(out, static_cast<float>(x(r, c)));
    }
    if (!out) throw std::runtime_error("write failed: " + (dir / "dataset.bin").string());

    std::ofstream split(dir / "split.json", std::ios::trunc);
    split << mask.to_json().dump() << "\n";
}

namespace {

nlohmann::json read_header_json(std::ifstream& in, const std::filesystem::path& file) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kDatasetMagic, 8) != 0)
        throw std::runtime_error(file.string() + ": not a dataset container");
    const auto len = neural::read_u64_le(in);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    return nlohmann::json::parse(text);
}

}  // namespace

DatasetHeader read_dataset_header(const std::filesystem::path& dir) {
    std::ifstream in(dir / "dataset.bin", std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + (dir / "dataset.bin").string());
    const auto j = read_header_json(in, dir / "dataset.bin");
    DatasetHeader h;
    h.grid = grid_from_json(j.at("grid"));
    h.spec = ObservationSpec::from_json(j.at("spec"));
    h.spec_hash = j.at("spec_hash").get<std::uint64_t>();
    h.rows = j.at("rows").get<std::uint64_t>();
    h.split = j.at("split");
    return h;
}

Matrix read_dataset_observations(const std::filesystem::path& dir) {
    std::ifstream in(dir / "dataset.bin", std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + (dir / "dataset.bin").string());
    const auto j = read_header_json(in, dir / "dataset.bin");
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("d_x").get<Eigen::Index>();
    Matrix x(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) x(r, c) = neural::read_f32_le(in);
    return x;
}

SplitMask read_split(const std::filesystem::path& dir) {
    std::ifstream in(dir / "split.json");
    if (!in) throw std::runtime_error("cannot open " + (dir / "split.json").string());
    return SplitMask::from_json(nlohmann::json::parse(in));
}

}  // namespace disentlab::synth
