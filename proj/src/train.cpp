#include "exmo/train.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "exmo/model_io.hpp"
#include "exmo/parallel.hpp"
#include "exmo/rng.hpp"
#include "exmo/scoring.hpp"

namespace exmo {

void TrainPlan::validate() const {
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (!(adam.learning_rate >= 0.0)) throw ArgumentError("learning rate must be >= 0");
  if (checkpoint_every < 0) throw ArgumentError("checkpoint cadence must be >= 0");
  if (checkpoint_every > 0 && checkpoint_path.empty()) throw ArgumentError("checkpoint cadence set without a path");
}

namespace {

struct ItemResult {
  double squared_error = 0.0;
  std::vector<FilterBank<float>> grads;
};

ItemResult run_item(const Model& model, const FrameStack& stack, std::size_t batch) {
  ForwardTrace<float> trace;
  const Tensor out = forward(model, stack.data, &trace);
  ItemResult r;
  const Tensor* in = &stack.data;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = static_cast<double>((*in)[i]) - static_cast<double>(out[i]);
    r.squared_error += d * d;
  }
  r.grads = backward(model, trace, euclidean_loss_gradient(stack.data, out, batch));
  return r;
}

std::string checkpoint_ref(const std::optional<std::filesystem::path>& p) {
  return p ? p->string() : std::string();
}

}  // namespace

TrainResult train(Model& model, const StackSource& data, const TrainPlan& plan, const StepCallback& on_step) {
  plan.validate();
  TrainResult result;
  if (plan.epochs == 0 || plan.max_steps == 0) return result;
  const std::size_t n = data.size();
  if (n < static_cast<std::size_t>(plan.batch_size)) {
    throw ArgumentError("training data has " + std::to_string(n) + " stacks, fewer than batch size " +
                        std::to_string(plan.batch_size));
  }

  for (auto& layer : model.layers) {
    layer.weights.enable_grad();
    layer.bias.enable_grad();
  }
  AdamState<float> state;
  std::vector<std::size_t> order(n);
  const std::uint64_t phase_seed = derive_seed(plan.shuffle_seed, plan.phase == TrainPhase::pretrain ? 1 : 2);
  std::int64_t step = 0;
  bool stop = false;

  for (int epoch = 0; epoch < plan.epochs && !stop; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(phase_seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    for (std::size_t begin = 0; begin < n; begin += plan.batch_size) {
      if (plan.max_steps >= 0 && step >= plan.max_steps) {
        stop = true;
        break;
      }
      const std::size_t batch = std::min<std::size_t>(plan.batch_size, n - begin);
      // Reducing in index order makes the sums independent of the shuffle.
      std::vector<std::size_t> members(order.begin() + begin, order.begin() + begin + batch);
      std::sort(members.begin(), members.end());
      std::vector<ItemResult> items(batch);
      parallel_for(batch, [&](std::size_t i) { items[i] = run_item(model, data.stack(members[i]), batch); });

      double sq = 0.0;
      for (const auto& it : items) sq += it.squared_error;
      const double loss = sq / (2.0 * static_cast<double>(batch));
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at step " + std::to_string(model.metadata.steps_seen + 1),
                            checkpoint_ref(result.last_checkpoint));
      }

      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto gw = model.layers[l].weights.grad();
        auto gb = model.layers[l].bias.grad();
        std::fill(gw.begin(), gw.end(), 0.0f);
        std::fill(gb.begin(), gb.end(), 0.0f);
        for (const auto& it : items) {
          const auto& g = it.grads[l];
          for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += g.weights[i];
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g.bias[i];
        }
      }
      try {
        adam_step(std::span(model.layers), state, plan.adam);
      } catch (const TrainingError& e) {
        throw TrainingError(e.what(), checkpoint_ref(result.last_checkpoint));
      }

      ++step;
      ++model.metadata.steps_seen;
      model.metadata.loss_history.push_back(loss);
      result.losses.push_back(loss);
      if (on_step) on_step(step, loss);
      if (plan.checkpoint_every > 0 && step % plan.checkpoint_every == 0) {
        save_model(model, plan.checkpoint_path);
        result.last_checkpoint = plan.checkpoint_path;
      }
    }
    if (!stop) {
      ++model.metadata.epochs_seen;
      spdlog::debug("epoch {} done, last loss {}", model.metadata.epochs_seen,
                    result.losses.empty() ? 0.0 : result.losses.back());
    }
  }

  for (auto& layer : model.layers) {
    layer.weights.drop_grad();
    layer.bias.drop_grad();
  }
  return result;
}

double mean_reconstruction_loss(const Model& model, const StackSource& data) {
  if (data.size() == 0) throw ArgumentError("mean_reconstruction_loss: empty data");
  std::vector<double> losses(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const FrameStack s = data.stack(i);
    const Tensor out = forward(model, s.data);
    losses[i] = euclidean_loss<float>(std::span(&s.data, 1), std::span(&out, 1));
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

std::vector<std::vector<std::size_t>> partition_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ArgumentError("need at least 2 folds");
  if (n < static_cast<std::size_t>(folds)) {
    throw ArgumentError("cannot split " + std::to_string(n) + " sequences into " + std::to_string(folds) + " folds");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out(folds);
  for (int f = 0; f < folds; ++f) {
    const std::size_t lo = n * f / folds, hi = n * (f + 1) / folds;
    out[f].assign(order.begin() + lo, order.begin() + hi);
    std::sort(out[f].begin(), out[f].end());
  }
  return out;
}

std::vector<FoldMetrics> cross_validate(const std::vector<FrameSequence>& sequences, const NetworkConfig& config,
                                        const TrainPlan& plan, int folds, std::uint64_t seed, int window_step) {
  const auto partition = partition_folds(sequences.size(), folds, seed);
  std::vector<FoldMetrics> metrics;
  for (int f = 0; f < folds; ++f) {
    FoldMetrics m;
    m.fold = f;
    m.test_indices = partition[f];
    std::vector<bool> is_test(sequences.size(), false);
    for (std::size_t i : m.test_indices) is_test[i] = true;

    StackDataset train_set(config.input_size), test_set(config.input_size);
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      if (is_test[i]) {
        test_set.add(sequences[i], window_step);
      } else {
        m.train_indices.push_back(i);
        train_set.add(sequences[i], window_step);
      }
    }
    Model model = build<float>(config);
    train(model, train_set, plan);
    m.mean_test_loss = test_set.size() ? mean_reconstruction_loss(model, test_set) : 0.0;
    double motion = 0.0;
    for (std::size_t i : m.test_indices) motion += aggregate(score_video(model, sequences[i]));
    m.mean_test_motion_score = motion / static_cast<double>(m.test_indices.size());
    spdlog::info("fold {}: test loss {}, mean s_m {}", f + 1, m.mean_test_loss, m.mean_test_motion_score);
    metrics.push_back(std::move(m));
  }
  return metrics;
}

}  // namespace exmo
