#include "disentlab/numerics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "disentlab/errors.hpp"

namespace disentlab::numerics {

std::vector<int> equal_count_bins(std::span<const double> x, int bins) {
    if (bins < 1) throw std::invalid_argument("equal_count_bins: bins must be positive");
    const std::size_t n = x.size();
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    // Edge k is the value at quantile k/bins; a point's bin is the number of
    // distinct edges strictly below or equal to it (ties go together).
    std::vector<double> edges;
    for (int k = 1; k < bins; ++k) {
        const auto idx = static_cast<std::size_t>((static_cast<double>(k) * static_cast<double>(n)) / bins);
        if (idx == 0 || idx >= n) continue;
        const double e = sorted[idx];
        if (e > sorted.front() && (edges.empty() || e > edges.back())) edges.push_back(e);
    }
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), x[i]) - edges.begin());
    return out;
}

namespace {

std::map<int, std::size_t> counts(std::span<const int> labels) {
    std::map<int, std::size_t> c;
    for (int l : labels) ++c[l];
    return c;
}

}  // namespace

double discrete_entropy(std::span<const int> labels) {
    if (labels.empty()) return 0.0;
    const double n = static_cast<double>(labels.size());
    double h = 0.0;
    for (const auto& [_, c] : counts(labels)) {
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

double discrete_mutual_information(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw std::invalid_argument("discrete_mutual_information: length mismatch");
    if (a.empty()) return 0.0;
    const double n = static_cast<double>(a.size());
    const auto ca = counts(a);
    const auto cb = counts(b);
    std::map<std::pair<int, int>, std::size_t> joint;
    for (std::size_t i = 0; i < a.size(); ++i) ++joint[{a[i], b[i]}];
    double mi = 0.0;
    for (const auto& [key, c] : joint) {
        const double pj = static_cast<double>(c) / n;
        const double pa = static_cast<double>(ca.at(key.first)) / n;
        const double pb = static_cast<double>(cb.at(key.second)) / n;
        mi += pj * std::log(pj / (pa * pb));
    }
    return std::max(0.0, mi);
}

double discretized_mutual_information(std::span<const double> x, std::span<const int> y, int bins) {
    if (x.size() != y.size()) throw std::invalid_argument("discretized_mutual_information: length mismatch");
    const auto bx = equal_count_bins(x, bins);
    return discrete_mutual_information(bx, y);
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson_correlation: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("pearson_correlation: need at least 2 points");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0)
        throw std::domain_error("pearson_correlation: constant input, correlation undefined");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& theta, double h) {
    Vector grad(theta.size());
    Vector probe = theta;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        probe(i) = theta(i) + h;
        const double fp = f(probe);
        probe(i) = theta(i) - h;
        const double fm = f(probe);
        probe(i) = theta(i);
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NonFiniteError("finite_difference_gradient: non-finite evaluation at coordinate " +
                                 std::to_string(i));
        grad(i) = (fp - fm) / (2.0 * h);
    }
    return grad;
}

double max_relative_error(const Vector& a, const Vector& b, double floor) {
    if (a.size() != b.size()) throw std::invalid_argument("max_relative_error: size mismatch");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a(i)), std::abs(b(i)), floor});
        worst = std::max(worst, std::abs(a(i) - b(i)) / denom);
    }
    return worst;
}

}  // namespace disentlab::numerics
