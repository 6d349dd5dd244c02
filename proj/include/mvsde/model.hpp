#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mvsde/measure.hpp"

namespace mvsde {

/// Coefficients of a McKean-Vlasov SDE dX = b(X, mu) dt + sigma(X, mu) dW,
/// together with their space derivatives and Lions (measure) derivatives.
///
/// Vectors are passed as spans: x and y have length d; sigma is written as a
/// row-major d x m matrix (entry (k, l) at k * m + l, column l is sigma^{(l)});
/// every derivative output has length d. Indices k and l are zero-based.
///
/// Implementations must be pure and reentrant: the engine evaluates them from
/// several threads against one read-only measure.
///
/// Contract (documented, not enforced): the drift is one-sided Lipschitz and
/// polynomially Lipschitz with exponent growth_exponent(); sigma and both
/// measure derivatives are Lipschitz in x, y and W2. taming_growth_check()
/// probes the drift side of this by sampling.
class CoefficientModel {
public:
    virtual ~CoefficientModel() = default;

    virtual std::string name() const = 0;
    virtual std::size_t state_dim() const = 0;
    virtual std::size_t noise_dim() const = 0;
    /// rho in the taming divisor 1 + |x|^{rho+2} / n.
    virtual double growth_exponent() const = 0;

    virtual void drift(std::span<const double> x, const EmpiricalMeasure& mu,
                       std::span<double> out) const = 0;
    virtual void diffusion(std::span<const double> x, const EmpiricalMeasure& mu,
                           std::span<double> out) const = 0;

    /// Gradient in x of b^{(k)}.
    virtual void drift_dx(std::size_t k, std::span<const double> x, const EmpiricalMeasure& mu,
                          std::span<double> out) const = 0;
    /// Lions derivative of b^{(k)} evaluated at (x, mu, y).
    virtual void drift_dmu(std::size_t k, std::span<const double> x, const EmpiricalMeasure& mu,
                           std::span<const double> y, std::span<double> out) const = 0;
    virtual void diffusion_dx(std::size_t k, std::size_t l, std::span<const double> x,
                              const EmpiricalMeasure& mu, std::span<double> out) const = 0;
    virtual void diffusion_dmu(std::size_t k, std::size_t l, std::span<const double> x,
                               const EmpiricalMeasure& mu, std::span<const double> y,
                               std::span<double> out) const = 0;

    /// False when diffusion_dmu is identically zero; the engine then skips the
    /// O(N^2) measure-derivative correction.
    virtual bool diffusion_depends_on_measure() const { return true; }

    std::vector<double> drift(std::span<const double> x, const EmpiricalMeasure& mu) const;
    std::vector<double> diffusion(std::span<const double> x, const EmpiricalMeasure& mu) const;
};

/// dX = ((alpha^2/2) X - X^3 + c E[X]) dt + alpha X dW, the mean-field
/// stochastic Ginzburg-Landau equation. d = m = 1, rho = 2.
class GinzburgLandauModel final : public CoefficientModel {
public:
    GinzburgLandauModel(double alpha, double c) : alpha_(alpha), c_(c) {}

    std::string name() const override { return "ginzburg-landau"; }
    std::size_t state_dim() const override { return 1; }
    std::size_t noise_dim() const override { return 1; }
    double growth_exponent() const override { return 2.0; }

    void drift(std::span<const double> x, const EmpiricalMeasure& mu,
               std::span<double> out) const override;
    void diffusion(std::span<const double> x, const EmpiricalMeasure& mu,
                   std::span<double> out) const override;
    void drift_dx(std::size_t k, std::span<const double> x, const EmpiricalMeasure& mu,
                  std::span<double> out) const override;
    void drift_dmu(std::size_t k, std::span<const double> x, const EmpiricalMeasure& mu,
                   std::span<const double> y, std::span<double> out) const override;
    void diffusion_dx(std::size_t k, std::size_t l, std::span<const double> x,
                      const EmpiricalMeasure& mu, std::span<double> out) const override;
    void diffusion_dmu(std::size_t k, std::size_t l, std::span<const double> x,
                       const EmpiricalMeasure& mu, std::span<const double> y,
                       std::span<double> out) const override;
    bool diffusion_depends_on_measure() const override { return false; }

    using CoefficientModel::diffusion;
    using CoefficientModel::drift;

private:
    double alpha_;
    double c_;
};

/// dX = (a X + abar E[X]) dt + (bcoef X + bbar E[X]) dW. d = m = 1, rho = 0.
/// The mean solves M' = (a + abar) M; bbar != 0 makes the measure derivative
/// of the diffusion non-zero.
class LinearMeanFieldModel final : public CoefficientModel {
public:
    LinearMeanFieldModel(double a, double abar, double bcoef, double bbar)
        : a_(a), abar_(abar), bcoef_(bcoef), bbar_(bbar) {}

    std::string name() const override { return "linear-mean-field"; }
    std::size_t state_dim() const override { return 1; }
    std::size_t noise_dim() const override { return 1; }
    double growth_exponent() const override { return 0.0; }

    void drift(std::span<const double> x, const EmpiricalMeasure& mu,
               std::span<double> out) const override;
    void diffusion(std::span<const double> x, const EmpiricalMeasure& mu,
                   std::span<double> out) const override;
    void drift_dx(std::size_t k, std::span<const double> x, const EmpiricalMeasure& mu,
                  std::span<double> out) const override;
    void drift_dmu(std::size_t k, std::span<const double> x, const EmpiricalMeasure& mu,
                   std::span<const double> y, std::span<double> out) const override;
    void diffusion_dx(std::size_t k, std::size_t l, std::span<const double> x,
                      const EmpiricalMeasure& mu, std::span<double> out) const override;
    void diffusion_dmu(std::size_t k, std::size_t l, std::span<const double> x,
                       const EmpiricalMeasure& mu, std::span<const double> y,
                       std::span<double> out) const override;
    bool diffusion_depends_on_measure() const override { return bbar_ != 0.0; }

    using CoefficientModel::diffusion;
    using CoefficientModel::drift;

private:
    double a_;
    double abar_;
    double bcoef_;
    double bbar_;
};

/// b = 0, sigma = s0 (constant). Both schemes are exact for it.
class AdditiveNoiseModel final : public CoefficientModel {
public:
    explicit AdditiveNoiseModel(double sigma) : sigma_(sigma) {}

    std::string name() const override { return "additive-noise"; }
    std::size_t state_dim() const override { return 1; }
    std::size_t noise_dim() const override { return 1; }
    double growth_exponent() const override { return 0.0; }

    void drift(std::span<const double>, const EmpiricalMeasure&,
               std::span<double> out) const override { out[0] = 0.0; }
    void diffusion(std::span<const double>, const EmpiricalMeasure&,
                   std::span<double> out) const override { out[0] = sigma_; }
    void drift_dx(std::size_t, std::span<const double>, const EmpiricalMeasure&,
                  std::span<double> out) const override { out[0] = 0.0; }
    void drift_dmu(std::size_t, std::span<const double>, const EmpiricalMeasure&,
                   std::span<const double>, std::span<double> out) const override { out[0] = 0.0; }
    void diffusion_dx(std::size_t, std::size_t, std::span<const double>,
                      const EmpiricalMeasure&, std::span<double> out) const override { out[0] = 0.0; }
    void diffusion_dmu(std::size_t, std::size_t, std::span<const double>,
                       const EmpiricalMeasure&, std::span<const double>,
                       std::span<double> out) const override { out[0] = 0.0; }
    bool diffusion_depends_on_measure() const override { return false; }

    using CoefficientModel::diffusion;
    using CoefficientModel::drift;

private:
    double sigma_;
};

/// Builds a built-in model by name ("ginzburg-landau", "linear-mean-field",
/// "additive-noise"). Missing parameters default to zero; unknown parameter
/// names throw std::invalid_argument.
std::unique_ptr<CoefficientModel> make_model(const std::string& name,
                                             const std::map<std::string, double>& params);

std::vector<std::string> builtin_model_names();

/// Tamed drift b(x, mu) / (1 + |x|^{rho+2} / n).
void tame_drift(const CoefficientModel& model, std::size_t n, std::span<const double> x,
                const EmpiricalMeasure& mu, std::span<double> out);
std::vector<double> tame_drift(const CoefficientModel& model, std::size_t n,
                               std::span<const double> x, const EmpiricalMeasure& mu);

/// 1 + |x|^{rho+2} / n.
double taming_divisor(double rho, std::size_t n, std::span<const double> x);

struct TamingGrowthReport {
    std::vector<double> norms;   // |x| per sample
    std::vector<double> ratios;  // |b_n| / min{sqrt(n)(1+|x|), (1+|x|)^{rho/2+2}}
    double max_ratio = 0.0;
    /// Log-log slope of ratio against (1 + |x|) over samples with |x| >= 1.
    double tail_slope = 0.0;
    bool growth_detected = false;
};

/// Samples |b_n(x, mu)| against the growth envelope a correctly tamed drift
/// must respect. A positive tail slope means the ratio keeps growing with
/// |x|, i.e. rho is too small for the drift.
TamingGrowthReport taming_growth_check(const CoefficientModel& model, std::size_t n,
                                       std::span<const std::vector<double>> samples,
                                       const EmpiricalMeasure& mu);

}  // namespace mvsde
