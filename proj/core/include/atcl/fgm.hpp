#ifndef ATCL_FGM_HPP
#define ATCL_FGM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "atcl/batching.hpp"
#include "atcl/rng.hpp"
#include "atcl/tensor.hpp"
#include "atcl/vocab.hpp"

namespace atcl {

// As printed, the perturbation subtracts the normalized gradient
// (paper-minus); the classic fast-gradient direction adds it. Both are
// supported and tested.
enum class FgmSign { PaperMinus, ClassicPlus };

// One candidate position per sentence (or none when no token qualifies).
// Degenerate entries (zero gradient) are excluded from the adversarial and
// contrastive terms downstream.
struct AdversarialPlan {
    struct Sentence {
        std::optional<std::size_t> position; // within-sentence index
        bool degenerate = false;             // zero-gradient pass-through
    };
    std::vector<Sentence> sentences;
    double epsilon = 0.03;
    FgmSign sign = FgmSign::PaperMinus;

    std::size_t active_count() const {
        std::size_t n = 0;
        for (const auto& s : sentences)
            if (s.position && !s.degenerate) ++n;
        return n;
    }
};

// Uniform choice among mask-qualifying, unpadded positions per sentence.
// RNG consumption order is fixed (sentence index order); one draw is made
// per sentence with at least one qualifying position.
AdversarialPlan select_candidates(const Batch& batch, const Vocabulary& vocab,
                                  Rng& rng, double epsilon, FgmSign sign);

// e' = e -/+ epsilon * g / ||g||2. Returns false (and leaves e untouched)
// when ||g||2 falls under the degeneracy threshold.
bool fgm_perturb(double* e, const double* g, std::size_t dim, double epsilon,
                 FgmSign sign);

// Copies the embedded batch into a fresh constant leaf (stop-gradient) and
// applies the perturbation at each planned candidate. grads must be the
// gradient rows of the clean loss at the embedded positions. Marks
// zero-gradient sentences degenerate in the plan.
TensorPtr build_adversarial_batch(const TensorPtr& embedded, std::size_t batch,
                                  std::size_t seq, AdversarialPlan& plan);

} // namespace atcl

#endif
