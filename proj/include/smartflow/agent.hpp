#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "smartflow/domain.hpp"
#include "smartflow/env.hpp"
#include "smartflow/nn.hpp"

namespace smartflow::agent {

struct Transition {
    std::vector<double> state_vec;       // normalized observation
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state_vec;
    bool done = false;
};

/// Fixed-capacity ring buffer; once full the oldest transition is overwritten.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }

    /// Logical indexing, 0 = oldest surviving transition.
    const Transition& at(std::size_t i) const;

    /// Uniform sample with replacement.
    std::vector<Transition> sample(std::size_t batch, std::mt19937_64& rng) const;

private:
    std::vector<Transition> data_;
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::size_t size_ = 0;
};

/// Epsilon-greedy over a q-value vector. With epsilon 0 this is a pure
/// argmax (lowest index wins ties) and consumes no randomness.
int select_action(const std::vector<double>& q, double epsilon, std::mt19937_64& rng);

/// Bellman targets: y = r for terminal transitions, else
/// y = r + gamma * max_a' Q_target(s', a').
std::vector<double> compute_targets(const std::vector<Transition>& batch,
                                    const nn::Mlp& target_net, double gamma);

/// Copies the online weights into the target network.
void sync_target(const nn::Mlp& net, nn::Mlp& target_net);

/// Linear decay from epsilon_start to epsilon_end over the first
/// decay_fraction * total_timesteps steps, flat afterwards.
double epsilon_at(std::int64_t t, const domain::SimConfig& config);

/// One gradient step on the squared Bellman error of the chosen actions.
/// Owns the optimizer state between calls; returns the pre-update loss.
class DqnTrainer {
public:
    DqnTrainer(double learning_rate, double gamma)
        : optimizer_(learning_rate), gamma_(gamma) {}

    double train_step(nn::Mlp& net, const nn::Mlp& target_net,
                      const std::vector<Transition>& batch);

private:
    nn::AdamOptimizer optimizer_;
    double gamma_;
};

struct TrainResult {
    nn::Mlp net;
    std::vector<double> episode_rewards;
    std::vector<double> moving_avg;   // same length as episode_rewards
    std::vector<double> losses;       // one entry per gradient update
    double final_loss = 0.0;          // mean of the trailing window of losses
    env::EpisodeLog greedy_rollout;   // evaluation episode from reset(seed)
};

/// Full DQN training loop. Fully reproducible: all randomness (weight init,
/// exploration, replay sampling, episode resets) derives from `seed`.
TrainResult train(env::BikeEnv& environment, const domain::SimConfig& config,
                  std::uint64_t seed);

using Policy = std::function<int(const domain::NetworkState&)>;

/// Runs one full episode from reset(reset_seed) under the given policy.
env::EpisodeLog rollout(env::BikeEnv& environment, std::uint64_t reset_seed,
                        const Policy& policy);

/// The trained policy: argmax over q-values of the normalized observation.
Policy greedy_policy(const nn::Mlp& net, const domain::StationRegistry& registry);

/// Uniform-random baseline policy drawing from the shared rng.
Policy random_policy(int action_count, std::mt19937_64& rng);

void save_checkpoint(const nn::Mlp& net, const domain::SimConfig& config,
                     std::size_t n_stations, const std::string& path);

struct Checkpoint {
    nn::Mlp net;
    std::size_t n_stations = 0;
};

/// Throws CheckpointError on unreadable, corrupt, or shape-inconsistent files.
Checkpoint load_checkpoint(const std::string& path);

/// CSV with header episode,reward,moving_avg.
void save_learning_curve(const TrainResult& result, const std::string& path);

/// Deterministic derivation of independent rng streams from one run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace smartflow::agent
