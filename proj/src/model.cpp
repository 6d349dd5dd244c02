#include "mvsde/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvsde {

std::vector<double> CoefficientModel::drift(std::span<const double> x,
                                            const EmpiricalMeasure& mu) const {
    std::vector<double> out(state_dim());
    drift(x, mu, out);
    return out;
}

std::vector<double> CoefficientModel::diffusion(std::span<const double> x,
                                                const EmpiricalMeasure& mu) const {
    std::vector<double> out(state_dim() * noise_dim());
    diffusion(x, mu, out);
    return out;
}

// --- Ginzburg-Landau ---------------------------------------------------------

void GinzburgLandauModel::drift(std::span<const double> x, const EmpiricalMeasure& mu,
                                std::span<double> out) const {
    const double v = x[0];
    out[0] = 0.5 * alpha_ * alpha_ * v - v * v * v + c_ * mu.mean()[0];
}

void GinzburgLandauModel::diffusion(std::span<const double> x, const EmpiricalMeasure&,
                                    std::span<double> out) const {
    out[0] = alpha_ * x[0];
}

void GinzburgLandauModel::drift_dx(std::size_t, std::span<const double> x,
                                   const EmpiricalMeasure&, std::span<double> out) const {
    out[0] = 0.5 * alpha_ * alpha_ - 3.0 * x[0] * x[0];
}

void GinzburgLandauModel::drift_dmu(std::size_t, std::span<const double>,
                                    const EmpiricalMeasure&, std::span<const double>,
                                    std::span<double> out) const {
    out[0] = c_;
}

void GinzburgLandauModel::diffusion_dx(std::size_t, std::size_t, std::span<const double>,
                                       const EmpiricalMeasure&, std::span<double> out) const {
    out[0] = alpha_;
}

void GinzburgLandauModel::diffusion_dmu(std::size_t, std::size_t, std::span<const double>,
                                        const EmpiricalMeasure&, std::span<const double>,
                                        std::span<double> out) const {
    out[0] = 0.0;
}

// --- linear mean-field -------------------------------------------------------

void LinearMeanFieldModel::drift(std::span<const double> x, const EmpiricalMeasure& mu,
                                 std::span<double> out) const {
    out[0] = a_ * x[0] + abar_ * mu.mean()[0];
}

void LinearMeanFieldModel::diffusion(std::span<const double> x, const EmpiricalMeasure& mu,
                                     std::span<double> out) const {
    out[0] = bcoef_ * x[0] + bbar_ * mu.mean()[0];
}

void LinearMeanFieldModel::drift_dx(std::size_t, std::span<const double>,
                                    const EmpiricalMeasure&, std::span<double> out) const {
    out[0] = a_;
}

void LinearMeanFieldModel::drift_dmu(std::size_t, std::span<const double>,
                                     const EmpiricalMeasure&, std::span<const double>,
                                     std::span<double> out) const {
    out[0] = abar_;
}

void LinearMeanFieldModel::diffusion_dx(std::size_t, std::size_t, std::span<const double>,
                                        const EmpiricalMeasure&, std::span<double> out) const {
    out[0] = bcoef_;
}

void LinearMeanFieldModel::diffusion_dmu(std::size_t, std::size_t, std::span<const double>,
                                         const EmpiricalMeasure&, std::span<const double>,
                                         std::span<double> out) const {
    out[0] = bbar_;
}

// --- factory -----------------------------------------------------------------

namespace {

double take(std::map<std::string, double>& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) return 0.0;
    const double v = it->second;
    params.erase(it);
    return v;
}

}  // namespace

std::vector<std::string> builtin_model_names() {
    return {"ginzburg-landau", "linear-mean-field", "additive-noise"};
}

std::unique_ptr<CoefficientModel> make_model(const std::string& name,
                                             const std::map<std::string, double>& params) {
    auto rest = params;
    std::unique_ptr<CoefficientModel> model;
    if (name == "ginzburg-landau") {
        const double alpha = take(rest, "alpha");
        const double c = take(rest, "c");
        model = std::make_unique<GinzburgLandauModel>(alpha, c);
    } else if (name == "linear-mean-field") {
        const double a = take(rest, "a");
        const double abar = take(rest, "abar");
        const double bcoef = take(rest, "bcoef");
        const double bbar = take(rest, "bbar");
        model = std::make_unique<LinearMeanFieldModel>(a, abar, bcoef, bbar);
    } else if (name == "additive-noise") {
        model = std::make_unique<AdditiveNoiseModel>(take(rest, "sigma"));
    } else {
        throw std::invalid_argument("unknown model '" + name + "'");
    }
    if (!rest.empty())
        throw std::invalid_argument("model '" + name + "': unknown parameter '" +
                                    rest.begin()->first + "'");
    return model;
}

// --- taming ------------------------------------------------------------------

double taming_divisor(double rho, std::size_t n, std::span<const double> x) {
    double sq = 0.0;
    for (double v : x) sq += v * v;
    const double norm = std::sqrt(sq);
    return 1.0 + std::pow(norm, rho + 2.0) / static_cast<double>(n);
}

void tame_drift(const CoefficientModel& model, std::size_t n, std::span<const double> x,
                const EmpiricalMeasure& mu, std::span<double> out) {
    if (n == 0) throw std::invalid_argument("tame_drift: n must be >= 1");
    model.drift(x, mu, out);
    const double divisor = taming_divisor(model.growth_exponent(), n, x);
    for (double& v : out) v /= divisor;
}

std::vector<double> tame_drift(const CoefficientModel& model, std::size_t n,
                               std::span<const double> x, const EmpiricalMeasure& mu) {
    std::vector<double> out(model.state_dim());
    tame_drift(model, n, x, mu, out);
    return out;
}

TamingGrowthReport taming_growth_check(const CoefficientModel& model, std::size_t n,
                                       std::span<const std::vector<double>> samples,
                                       const EmpiricalMeasure& mu) {
    TamingGrowthReport report;
    const double rho = model.growth_exponent();
    const double root_n = std::sqrt(static_cast<double>(n));
    std::vector<double> bn(model.state_dim());
    std::vector<double> log_r;
    std::vector<double> log_ratio;
    for (const auto& x : samples) {
        tame_drift(model, n, x, mu, bn);
        double nx = 0.0;
        double nb = 0.0;
        for (double v : x) nx += v * v;
        for (double v : bn) nb += v * v;
        nx = std::sqrt(nx);
        nb = std::sqrt(nb);
        const double envelope = std::min(root_n * (1.0 + nx), std::pow(1.0 + nx, 0.5 * rho + 2.0));
        const double ratio = nb / envelope;
        report.norms.push_back(nx);
        report.ratios.push_back(ratio);
        report.max_ratio = std::max(report.max_ratio, ratio);
        if (nx >= 1.0 && ratio > 0.0) {
            log_r.push_back(std::log(1.0 + nx));
            log_ratio.push_back(std::log(ratio));
        }
    }
    if (log_r.size() >= 2) {
        const double k = static_cast<double>(log_r.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < log_r.size(); ++i) {
            sx += log_r[i];
            sy += log_ratio[i];
            sxx += log_r[i] * log_r[i];
            sxy += log_r[i] * log_ratio[i];
        }
        const double denom = k * sxx - sx * sx;
        if (denom > 0.0) report.tail_slope = (k * sxy - sx * sy) / denom;
    }
    report.growth_detected = report.tail_slope > 0.1 || !std::isfinite(report.max_ratio);
    return report;
}

}  // namespace mvsde
