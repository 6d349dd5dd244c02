#include "mvsde/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mvsde {

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> atoms, std::size_t dim)
    : atoms_(std::move(atoms)), mean_(dim, 0.0), dim_(dim), count_(0) {
    if (dim_ == 0) throw std::invalid_argument("EmpiricalMeasure: dimension must be >= 1");
    if (atoms_.empty() || atoms_.size() % dim_ != 0)
        throw std::invalid_argument("EmpiricalMeasure: atom buffer of size " +
                                    std::to_string(atoms_.size()) +
                                    " is not a non-empty multiple of d=" + std::to_string(dim_));
    count_ = atoms_.size() / dim_;
    for (double v : atoms_)
        if (!std::isfinite(v)) throw std::invalid_argument("EmpiricalMeasure: non-finite atom");

    for (std::size_t j = 0; j < count_; ++j)
        for (std::size_t q = 0; q < dim_; ++q) mean_[q] += atoms_[j * dim_ + q];
    for (double& m : mean_) m /= static_cast<double>(count_);
}

std::vector<double> mean(const EmpiricalMeasure& mu) {
    return {mu.mean().begin(), mu.mean().end()};
}

double moment(const EmpiricalMeasure& mu, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("moment: p must be >= 1");
    double acc = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        double sq = 0.0;
        for (double v : mu.atom(j)) sq += v * v;
        // p == 2 is the common case; skip the pow round trip.
        acc += (p == 2.0) ? sq : std::pow(sq, 0.5 * p);
    }
    return acc / static_cast<double>(mu.size());
}

namespace {

void require_same_shape(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const char* who) {
    if (mu.size() != nu.size() || mu.dim() != nu.dim())
        throw std::invalid_argument(std::string(who) + ": measures differ in size or dimension (" +
                                    std::to_string(mu.size()) + "x" + std::to_string(mu.dim()) +
                                    " vs " + std::to_string(nu.size()) + "x" +
                                    std::to_string(nu.dim()) + ")");
}

}  // namespace

double w2_distance_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    require_same_shape(mu, nu, "w2_distance_1d");
    if (mu.dim() != 1) throw std::invalid_argument("w2_distance_1d: requires d = 1");
    std::vector<double> xs(mu.atoms().begin(), mu.atoms().end());
    std::vector<double> ys(nu.atoms().begin(), nu.atoms().end());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double acc = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) acc += (xs[k] - ys[k]) * (xs[k] - ys[k]);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

double w2_coupling_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    require_same_shape(mu, nu, "w2_coupling_bound");
    const auto a = mu.atoms();
    const auto b = nu.atoms();
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(acc / static_cast<double>(mu.size()));
}

}  // namespace mvsde
