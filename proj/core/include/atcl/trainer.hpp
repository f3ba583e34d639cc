#ifndef ATCL_TRAINER_HPP
#define ATCL_TRAINER_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "atcl/batching.hpp"
#include "atcl/config.hpp"
#include "atcl/contrastive.hpp"
#include "atcl/fgm.hpp"
#include "atcl/optimizer.hpp"
#include "atcl/transformer.hpp"
#include "atcl/vocab.hpp"

namespace atcl {

// One training step's metrics; J = L + alpha*L_adv + beta*L_cont, each
// weighted term present only when its weight and inputs are live.
struct StepRecord {
    std::uint64_t step = 0;
    double loss = 0.0;     // L
    double adv_loss = 0.0; // L_adv (0 when inactive)
    double con_loss = 0.0; // L_cont (0 when inactive)
    double objective = 0.0; // J
    std::size_t active_candidates = 0;
    std::size_t degenerate_count = 0;
    std::uint64_t wall_ms = 0;
};

// Owns the model, optimizer, and the named random streams of one run.
// atcl_step is the unit of training: clean pass, gradient-derived embedding
// perturbation, perturbed pass, contrastive pairing, combined update.
class Trainer {
  public:
    Trainer(const TrainConfig& cfg, const Vocabulary& vocab);

    TransformerModel& model() { return *model_; }
    const TransformerModel& model() const { return *model_; }
    Adam& optimizer() { return *adam_; }
    const TrainConfig& config() const { return cfg_; }
    Rng& adversarial_rng() { return adv_rng_; }

    StepRecord atcl_step(const Batch& batch);

    void set_lm_data(std::vector<int> train_stream, std::vector<int> valid_stream);
    void set_nmt_data(std::vector<std::vector<int>> train_src,
                      std::vector<std::vector<int>> train_trg,
                      std::vector<std::vector<int>> valid_src,
                      std::vector<std::vector<int>> valid_trg);

    // Runs to cfg.max_steps, appending one metrics record per step (eval
    // fields at eval intervals) and checkpointing alongside. Resumes from
    // cfg.resume_path when set.
    void run();

    // Serialized optimizer + rng + progress state next to the checkpoint.
    void save_training_state(const std::string& path) const;
    void load_training_state(const std::string& path);

    double validation_perplexity() const;
    double validation_bleu(const Vocabulary& vocab) const;

  private:
    TrainConfig cfg_;
    const Vocabulary& vocab_;
    std::unique_ptr<TransformerModel> model_;
    std::unique_ptr<Adam> adam_;
    Rng adv_rng_;
    std::uint64_t step_ = 0;
    std::uint64_t epoch_ = 0;
    std::uint64_t epoch_pos_ = 0;

    std::vector<int> lm_train_, lm_valid_;
    std::vector<std::vector<int>> nmt_train_src_, nmt_train_trg_;
    std::vector<std::vector<int>> nmt_valid_src_, nmt_valid_trg_;

    std::vector<Batch> epoch_batches(std::uint64_t epoch) const;
};

// One metrics record rendered with the fixed key order
// step, L, L_adv, L_cont, J, [ppl,] [bleu,] wall_ms. Numbers use shortest
// round-trip formatting so identical runs yield identical bytes.
std::string format_metrics_line(const StepRecord& rec, const double* ppl,
                                const double* bleu);

} // namespace atcl

#endif
