#include "atcl/optimizer.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace atcl {

Adam::Adam(std::vector<std::pair<std::string, TensorPtr>> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& [name, t] : params_) {
        (void)name;
        m_.emplace_back(t->size(), 0.0);
        v_.emplace_back(t->size(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        Tensor& t = *params_[p].second;
        const bool has_grad = t.grad.size() == t.value.size();
        for (std::size_t i = 0; i < t.value.size(); ++i) {
            const double g = has_grad ? t.grad[i] : 0.0;
            m_[p][i] = cfg_.beta1 * m_[p][i] + (1.0 - cfg_.beta1) * g;
            v_[p][i] = cfg_.beta2 * v_[p][i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m_[p][i] / bc1;
            const double vhat = v_[p][i] / bc2;
            t.value[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

void Adam::save(std::ostream& out) const {
    out.write(reinterpret_cast<const char*>(&t_), sizeof(t_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        out.write(reinterpret_cast<const char*>(m_[p].data()),
                  static_cast<std::streamsize>(m_[p].size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(v_[p].data()),
                  static_cast<std::streamsize>(v_[p].size() * sizeof(double)));
    }
}

void Adam::load(std::istream& in) {
    in.read(reinterpret_cast<char*>(&t_), sizeof(t_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
        in.read(reinterpret_cast<char*>(m_[p].data()),
                static_cast<std::streamsize>(m_[p].size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(v_[p].data()),
                static_cast<std::streamsize>(v_[p].size() * sizeof(double)));
    }
    require(static_cast<bool>(in), "optimizer state: truncated stream");
}

} // namespace atcl
