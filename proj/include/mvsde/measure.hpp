#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mvsde {

/// Uniform-weight empirical measure (1/N) sum_j delta_{x_j} on R^d.
///
/// Atoms are stored row-major (N rows of d entries) and keep their index:
/// atom j is particle j, so identity couplings between two clouds are
/// meaningful. The mean is computed once at construction since nearly every
/// mean-field coefficient reads it.
class EmpiricalMeasure {
public:
    EmpiricalMeasure(std::vector<double> atoms, std::size_t dim);

    std::size_t size() const { return count_; }
    std::size_t dim() const { return dim_; }

    std::span<const double> atom(std::size_t j) const {
        return {atoms_.data() + j * dim_, dim_};
    }
    std::span<const double> atoms() const { return atoms_; }
    std::span<const double> mean() const { return mean_; }

private:
    std::vector<double> atoms_;
    std::vector<double> mean_;
    std::size_t dim_;
    std::size_t count_;
};

/// Componentwise average of the atoms.
std::vector<double> mean(const EmpiricalMeasure& mu);

/// (1/N) sum_j |x_j|^p with the Euclidean norm. Requires p >= 1.
double moment(const EmpiricalMeasure& mu, double p);

/// Exact W2 between two one-dimensional clouds with equal atom counts
/// (sorted pairing is the optimal coupling on the line).
double w2_distance_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// sqrt((1/N) sum_j |x_j - y_j|^2): the W2 upper bound given by pairing
/// atom j of mu with atom j of nu.
double w2_coupling_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

}  // namespace mvsde
