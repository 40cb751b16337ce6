#include "sepcount/adam.hpp"

#include <cmath>

namespace sepcount {

void AdamState::init(const std::vector<ParamRef>& params) {
    step = 0;
    m.clear();
    v.clear();
    m.reserve(params.size());
    v.reserve(params.size());
    for (const ParamRef& p : params) {
        m.push_back(zeros_like(*p.value));
        v.push_back(zeros_like(*p.value));
    }
}

void AdamState::update(const std::vector<ParamRef>& params) {
    if (params.size() != m.size()) {
        throw ShapeError("adam: parameter count changed since init");
    }
    for (const ParamRef& p : params) {
        if (!p.grad->all_finite()) {
            throw NumericError("adam: non-finite gradient for parameter '" + p.name + "'");
        }
        if (!p.grad->same_shape(*p.value)) {
            throw ShapeError("adam: gradient shape mismatch for parameter '" + p.name + "'");
        }
    }
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& val = *params[i].value;
        const Tensor& g = *params[i].grad;
        for (std::size_t j = 0; j < val.size(); ++j) {
            m[i][j] = cfg.beta1 * m[i][j] + (1.0 - cfg.beta1) * g[j];
            v[i][j] = cfg.beta2 * v[i][j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double mhat = m[i][j] / bc1;
            const double vhat = v[i][j] / bc2;
            val[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

double clip_gradients(const std::vector<ParamRef>& params, double max_norm) {
    double sq = 0.0;
    for (const ParamRef& p : params) {
        for (std::size_t j = 0; j < p.grad->size(); ++j) sq += (*p.grad)[j] * (*p.grad)[j];
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (const ParamRef& p : params) {
            for (std::size_t j = 0; j < p.grad->size(); ++j) (*p.grad)[j] *= scale;
        }
    }
    return norm;
}

void zero_gradients(const std::vector<ParamRef>& params) {
    for (const ParamRef& p : params) p.grad->fill(0.0);
}

}  // namespace sepcount
