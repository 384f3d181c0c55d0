#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "exmo/adam.hpp"
#include "exmo/autoencoder.hpp"
#include "exmo/data.hpp"

namespace exmo {

enum class TrainPhase { pretrain, finetune };

struct TrainPlan {
  TrainPhase phase = TrainPhase::pretrain;
  int epochs = 20;
  int batch_size = 8;
  AdamConfig adam;
  /// Stop after this many optimizer steps; negative means no limit.
  std::int64_t max_steps = -1;
  /// Write a checkpoint every this many steps (0 disables).
  std::int64_t checkpoint_every = 0;
  std::filesystem::path checkpoint_path;
  /// Seed for the per-epoch shuffle; mixed with the phase.
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

struct TrainResult {
  /// Eq. 1 loss of each optimizer step, computed before the update.
  std::vector<double> losses;
  std::optional<std::filesystem::path> last_checkpoint;
};

using StepCallback = std::function<void(std::int64_t step, double loss)>;

/// Minimizes the batch Euclidean reconstruction loss with Adam. The model's
/// metadata (epochs, steps, loss history) is extended in place. Per-item
/// gradients are reduced in batch order, so results do not depend on the
/// thread count. Throws TrainingError on a non-finite loss or gradient; the
/// model is left at the last finite parameters.
TrainResult train(Model& model, const StackSource& data, const TrainPlan& plan, const StepCallback& on_step = {});

/// Mean per-stack Euclidean loss (N = 1) over a source.
double mean_reconstruction_loss(const Model& model, const StackSource& data);

/// Assigns indices [0, n) to `folds` disjoint test folds after a seeded
/// shuffle. Fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> partition_folds(std::size_t n, int folds, std::uint64_t seed);

struct FoldMetrics {
  int fold = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  double mean_test_loss = 0.0;
  double mean_test_motion_score = 0.0;
};

/// K-fold cross validation over whole sequences (each already at the
/// network's input size). Each fold trains a freshly built model on the
/// remaining sequences and scores its test sequences.
std::vector<FoldMetrics> cross_validate(const std::vector<FrameSequence>& sequences, const NetworkConfig& config,
                                        const TrainPlan& plan, int folds = 5, std::uint64_t seed = 0,
                                        int window_step = 1);

}  // namespace exmo
