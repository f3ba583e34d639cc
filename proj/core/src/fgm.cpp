#include "atcl/fgm.hpp"

#include <cmath>

#include "atcl/common.hpp"

namespace atcl {

namespace {
constexpr double kDegenerateNorm = 1e-12;
}

AdversarialPlan select_candidates(const Batch& batch, const Vocabulary& vocab,
                                  Rng& rng, double epsilon, FgmSign sign) {
    AdversarialPlan plan;
    plan.epsilon = epsilon;
    plan.sign = sign;
    plan.sentences.resize(batch.batch_size);
    std::vector<std::size_t> qualifying;
    for (std::size_t k = 0; k < batch.batch_size; ++k) {
        qualifying.clear();
        for (std::size_t j = 0; j < batch.seq_len; ++j) {
            const std::size_t idx = k * batch.seq_len + j;
            if (!batch.pad_mask[idx]) continue;
            const int id = batch.token_ids[idx];
            if (id >= 0 && static_cast<std::size_t>(id) < vocab.size() &&
                vocab.restricted[static_cast<std::size_t>(id)])
                qualifying.push_back(j);
        }
        if (!qualifying.empty())
            plan.sentences[k].position = qualifying[rng.uniform_index(qualifying.size())];
    }
    return plan;
}

bool fgm_perturb(double* e, const double* g, std::size_t dim, double epsilon,
                 FgmSign sign) {
    require(epsilon > 0.0, "fgm_perturb: epsilon must be positive");
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) norm_sq += g[i] * g[i];
    const double norm = std::sqrt(norm_sq);
    if (norm < kDegenerateNorm) return false;
    const double step = (sign == FgmSign::PaperMinus ? -epsilon : epsilon) / norm;
    for (std::size_t i = 0; i < dim; ++i) e[i] += step * g[i];
    return true;
}

TensorPtr build_adversarial_batch(const TensorPtr& embedded, std::size_t batch,
                                  std::size_t seq, AdversarialPlan& plan) {
    require(embedded && embedded->shape.size() == 2 &&
                embedded->shape[0] == batch * seq,
            "build_adversarial_batch: embedded shape mismatch");
    if (plan.sentences.size() != batch)
        throw InternalError("build_adversarial_batch: plan/batch size mismatch");
    const std::size_t D = embedded->shape[1];

    // constant leaf: no parents, so the FGM direction never receives gradients
    auto out = make_tensor(embedded->shape, embedded->value);
    for (std::size_t k = 0; k < batch; ++k) {
        auto& s = plan.sentences[k];
        if (!s.position) continue;
        const std::size_t row = k * seq + *s.position;
        if (embedded->grad.size() != embedded->value.size())
            throw InternalError(
                "build_adversarial_batch: embedded has no gradient; run backward first");
        const double* g = embedded->grad.data() + row * D;
        double* e = out->value.data() + row * D;
        s.degenerate = !fgm_perturb(e, g, D, plan.epsilon, plan.sign);
    }
    return out;
}

} // namespace atcl
