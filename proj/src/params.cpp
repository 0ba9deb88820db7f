#include "ou2f/params.hpp"

#include <cmath>
#include <utility>

#include "ou2f/errors.hpp"

namespace ou2f {

const std::array<std::string, kNumParams>& ModelParams::names() {
    static const std::array<std::string, kNumParams> n = {
        "kappa", "gamma", "mu_xi", "sigma_chi", "sigma_xi",
        "rho",   "lambda_chi", "lambda_xi", "s1", "s2"};
    return n;
}

bool ModelParams::is_valid() const noexcept {
    const ParamVector v = to_vector();
    for (int i = 0; i < kNumParams; ++i)
        if (!std::isfinite(v[i])) return false;
    return kappa > 0.0 && gamma > 0.0 && sigma_chi > 0.0 && sigma_xi > 0.0 &&
           s1 > 0.0 && s2 > 0.0 && rho > -1.0 && rho < 1.0;
}

void ModelParams::validate() const {
    const ParamVector v = to_vector();
    for (int i = 0; i < kNumParams; ++i)
        if (!std::isfinite(v[i]))
            throw ArgumentError("ModelParams: " + names()[i] + " is not finite");
    if (kappa <= 0.0) throw ArgumentError("ModelParams: kappa must be > 0");
    if (gamma <= 0.0) throw ArgumentError("ModelParams: gamma must be > 0");
    if (sigma_chi <= 0.0) throw ArgumentError("ModelParams: sigma_chi must be > 0");
    if (sigma_xi <= 0.0) throw ArgumentError("ModelParams: sigma_xi must be > 0");
    if (s1 <= 0.0) throw ArgumentError("ModelParams: s1 must be > 0");
    if (s2 <= 0.0) throw ArgumentError("ModelParams: s2 must be > 0");
    if (!(rho > -1.0 && rho < 1.0)) throw ArgumentError("ModelParams: rho must lie in (-1, 1)");
}

ModelParams ModelParams::canonicalized() const {
    if (kappa > gamma) return *this;
    ModelParams out = *this;
    std::swap(out.kappa, out.gamma);
    std::swap(out.sigma_chi, out.sigma_xi);
    std::swap(out.lambda_chi, out.lambda_xi);
    return out;
}

ParamVector ModelParams::to_vector() const {
    ParamVector v;
    v << kappa, gamma, mu_xi, sigma_chi, sigma_xi, rho, lambda_chi, lambda_xi, s1, s2;
    return v;
}

ModelParams ModelParams::from_vector(const ParamVector& v) {
    ModelParams p;
    p.kappa = v[0];
    p.gamma = v[1];
    p.mu_xi = v[2];
    p.sigma_chi = v[3];
    p.sigma_xi = v[4];
    p.rho = v[5];
    p.lambda_chi = v[6];
    p.lambda_xi = v[7];
    p.s1 = v[8];
    p.s2 = v[9];
    return p;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.to_vector() == b.to_vector();
}

}  // namespace ou2f
