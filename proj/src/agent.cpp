#include "smartflow/agent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smartflow/errors.hpp"
#include "smartflow/util.hpp"

using nlohmann::json;

namespace smartflow::agent {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ContractViolation("ReplayBuffer: capacity must be >= 1");
    data_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
    if (size_ < capacity_) {
        data_.push_back(std::move(t));
        ++size_;
    } else {
        data_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= size_) throw ContractViolation("ReplayBuffer::at: index out of range");
    if (size_ < capacity_) return data_[i];
    return data_[(next_ + i) % capacity_];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch, std::mt19937_64& rng) const {
    if (size_ == 0) throw ContractViolation("ReplayBuffer::sample: buffer is empty");
    std::uniform_int_distribution<std::size_t> dist(0, size_ - 1);
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k) out.push_back(at(dist(rng)));
    return out;
}

int select_action(const std::vector<double>& q, double epsilon, std::mt19937_64& rng) {
    if (q.empty()) throw ContractViolation("select_action: empty q-vector");
    if (epsilon < 0.0 || epsilon > 1.0) throw ContractViolation("select_action: bad epsilon");
    if (epsilon > 0.0) {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng) < epsilon) {
            std::uniform_int_distribution<std::size_t> pick(0, q.size() - 1);
            return static_cast<int>(pick(rng));
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < q.size(); ++i) {
        if (q[i] > q[best]) best = i;
    }
    return static_cast<int>(best);
}

std::vector<double> compute_targets(const std::vector<Transition>& batch,
                                    const nn::Mlp& target_net, double gamma) {
    if (batch.empty()) throw ContractViolation("compute_targets: empty batch");
    nn::Matrix next(batch.size(), target_net.input_dim());
    for (std::size_t k = 0; k < batch.size(); ++k) {
        if (batch[k].next_state_vec.size() != target_net.input_dim()) {
            throw ContractViolation("compute_targets: observation width mismatch");
        }
        std::copy(batch[k].next_state_vec.begin(), batch[k].next_state_vec.end(), next.row(k));
    }
    nn::Matrix q_next = target_net.forward(next);

    std::vector<double> y(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) {
        if (batch[k].done) {
            y[k] = batch[k].reward;
        } else {
            const double* row = q_next.row(k);
            double best = row[0];
            for (std::size_t a = 1; a < q_next.cols; ++a) best = std::max(best, row[a]);
            y[k] = batch[k].reward + gamma * best;
        }
    }
    return y;
}

void sync_target(const nn::Mlp& net, nn::Mlp& target_net) {
    target_net.copy_weights_from(net);
}

double epsilon_at(std::int64_t t, const domain::SimConfig& config) {
    const double decay_steps =
        config.epsilon_decay_fraction * static_cast<double>(config.total_timesteps);
    if (decay_steps <= 0.0) return config.epsilon_end;
    const double frac = std::min(1.0, static_cast<double>(t) / decay_steps);
    return config.epsilon_start - frac * (config.epsilon_start - config.epsilon_end);
}

double DqnTrainer::train_step(nn::Mlp& net, const nn::Mlp& target_net,
                              const std::vector<Transition>& batch) {
    const std::vector<double> y = compute_targets(batch, target_net, gamma_);

    nn::Matrix x(batch.size(), net.input_dim());
    for (std::size_t k = 0; k < batch.size(); ++k) {
        std::copy(batch[k].state_vec.begin(), batch[k].state_vec.end(), x.row(k));
    }
    nn::Mlp::Cache cache;
    nn::Matrix out = net.forward_cached(x, cache);

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    nn::Matrix dout(out.rows, out.cols);
    double loss = 0.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const int a = batch[k].action;
        if (a < 0 || static_cast<std::size_t>(a) >= out.cols) {
            throw ContractViolation("train_step: action index outside network head");
        }
        const double err = out.at(k, a) - y[k];
        loss += err * err * inv_b;
        dout.at(k, a) = 2.0 * err * inv_b;
    }
    if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss encountered (loss=" + std::to_string(loss) + ")");
    }

    nn::Mlp::Gradients grads;
    net.backward(cache, dout, grads);
    optimizer_.step(net, grads);
    return loss;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over seed + stream, keeps the derived streams independent.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

env::EpisodeLog rollout(env::BikeEnv& environment, std::uint64_t reset_seed,
                        const Policy& policy) {
    env::EpisodeLog log;
    log.initial_state = environment.reset(reset_seed);
    while (!environment.done()) {
        const domain::NetworkState before = environment.state();
        const int a = policy(before);
        const env::StepOutcome outcome = environment.step(a);
        env::StepRecord rec;
        rec.state_before = before;
        rec.action = domain::decode_action(a, environment.station_count());
        rec.reward = outcome.reward;
        rec.info = outcome.info;
        rec.inventories_after = outcome.next_state.inventories;
        log.steps.push_back(std::move(rec));
    }
    log.final_state = environment.state();
    return log;
}

Policy greedy_policy(const nn::Mlp& net, const domain::StationRegistry& registry) {
    return [&net, &registry](const domain::NetworkState& s) {
        const std::vector<double> q = net.forward(s.normalized(registry));
        std::mt19937_64 unused(0);
        return select_action(q, 0.0, unused);
    };
}

Policy random_policy(int action_count, std::mt19937_64& rng) {
    return [action_count, &rng](const domain::NetworkState&) {
        std::uniform_int_distribution<int> pick(0, action_count - 1);
        return pick(rng);
    };
}

TrainResult train(env::BikeEnv& environment, const domain::SimConfig& config,
                  std::uint64_t seed) {
    config.validate();
    const std::size_t obs_dim = environment.station_count() + 1;
    const std::size_t n_actions = environment.action_count();
    const std::vector<std::size_t> hidden = {static_cast<std::size_t>(config.hidden1),
                                             static_cast<std::size_t>(config.hidden2)};

    TrainResult result;
    result.net = nn::Mlp(obs_dim, hidden, n_actions, mix_seed(seed, 0));
    nn::Mlp target_net = result.net;

    std::mt19937_64 explore_rng(mix_seed(seed, 1));
    std::mt19937_64 sample_rng(mix_seed(seed, 2));
    std::mt19937_64 reset_rng(mix_seed(seed, 3));

    ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
    DqnTrainer trainer(config.learning_rate, config.gamma);

    const auto& registry = environment.registry();
    domain::NetworkState state = environment.reset(reset_rng());
    std::vector<double> obs = state.normalized(registry);
    double episode_reward = 0.0;

    for (std::int64_t t = 0; t < config.total_timesteps; ++t) {
        const double eps = epsilon_at(t, config);
        const std::vector<double> q = result.net.forward(obs);
        const int action = select_action(q, eps, explore_rng);

        const env::StepOutcome outcome = environment.step(action);
        std::vector<double> next_obs = outcome.next_state.normalized(registry);
        episode_reward += outcome.reward;

        buffer.push(Transition{obs, action, outcome.reward, next_obs, outcome.done});

        if (outcome.done) {
            result.episode_rewards.push_back(episode_reward);
            const std::size_t window =
                std::min<std::size_t>(result.episode_rewards.size(),
                                      static_cast<std::size_t>(config.moving_avg_window));
            double acc = 0.0;
            for (std::size_t k = result.episode_rewards.size() - window;
                 k < result.episode_rewards.size(); ++k) {
                acc += result.episode_rewards[k];
            }
            result.moving_avg.push_back(acc / static_cast<double>(window));
            episode_reward = 0.0;
            state = environment.reset(reset_rng());
            next_obs = state.normalized(registry);
        }
        obs = std::move(next_obs);

        if (t >= config.learning_starts &&
            buffer.size() >= static_cast<std::size_t>(config.batch_size) &&
            t % config.train_freq == 0) {
            const double loss = trainer.train_step(
                result.net, target_net,
                buffer.sample(static_cast<std::size_t>(config.batch_size), sample_rng));
            result.losses.push_back(loss);
        }
        if ((t + 1) % config.target_sync_interval == 0) {
            sync_target(result.net, target_net);
        }
    }

    if (!result.losses.empty()) {
        const std::size_t window = std::min<std::size_t>(
            result.losses.size(), static_cast<std::size_t>(config.moving_avg_window));
        double acc = 0.0;
        for (std::size_t k = result.losses.size() - window; k < result.losses.size(); ++k) {
            acc += result.losses[k];
        }
        result.final_loss = acc / static_cast<double>(window);
    }

    result.greedy_rollout = rollout(environment, seed, greedy_policy(result.net, registry));
    return result;
}

void save_checkpoint(const nn::Mlp& net, const domain::SimConfig& config,
                     std::size_t n_stations, const std::string& path) {
    json layers = json::array();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const nn::Matrix& w = net.weights()[l];
        json rows = json::array();
        for (std::size_t r = 0; r < w.rows; ++r) {
            rows.push_back(std::vector<double>(w.row(r), w.row(r) + w.cols));
        }
        layers.push_back(json{{"w", rows}, {"b", net.biases()[l]}});
    }
    json hidden = json::array();
    for (std::size_t h : net.hidden_sizes()) hidden.push_back(h);
    json doc = {
        {"format", "smartflow-dqn-checkpoint"},
        {"version", 1},
        {"n_stations", n_stations},
        {"input_dim", net.input_dim()},
        {"output_dim", net.output_dim()},
        {"hidden", hidden},
        {"layers", layers},
        {"config",
         {{"gamma", config.gamma},
          {"learning_rate", config.learning_rate},
          {"buffer_capacity", config.buffer_capacity},
          {"learning_starts", config.learning_starts},
          {"train_freq", config.train_freq},
          {"target_sync_interval", config.target_sync_interval},
          {"batch_size", config.batch_size},
          {"total_timesteps", config.total_timesteps},
          {"epsilon_start", config.epsilon_start},
          {"epsilon_end", config.epsilon_end},
          {"epsilon_decay_fraction", config.epsilon_decay_fraction},
          {"episode_hours", config.episode_hours}}},
    };
    util::write_file(path, doc.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    json doc;
    try {
        doc = json::parse(util::read_file(path));
    } catch (const IoError& e) {
        throw CheckpointError(e.what());
    } catch (const json::exception& e) {
        throw CheckpointError("corrupt checkpoint " + path + ": " + e.what());
    }

    try {
        if (doc.at("format").get<std::string>() != "smartflow-dqn-checkpoint") {
            throw CheckpointError("not a checkpoint file: " + path);
        }
        if (doc.at("version").get<int>() != 1) {
            throw CheckpointError("unsupported checkpoint version in " + path);
        }
        const std::size_t input_dim = doc.at("input_dim").get<std::size_t>();
        const std::size_t output_dim = doc.at("output_dim").get<std::size_t>();
        const std::vector<std::size_t> hidden = doc.at("hidden").get<std::vector<std::size_t>>();

        Checkpoint cp;
        cp.n_stations = doc.at("n_stations").get<std::size_t>();
        cp.net = nn::Mlp(input_dim, hidden, output_dim, 0);

        const json& layers = doc.at("layers");
        if (layers.size() != cp.net.layer_count()) {
            throw CheckpointError("layer count mismatch in " + path);
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            nn::Matrix& w = cp.net.weights()[l];
            const json& rows = layers[l].at("w");
            if (rows.size() != w.rows) throw CheckpointError("weight shape mismatch in " + path);
            for (std::size_t r = 0; r < w.rows; ++r) {
                const auto row = rows[r].get<std::vector<double>>();
                if (row.size() != w.cols) {
                    throw CheckpointError("weight shape mismatch in " + path);
                }
                std::copy(row.begin(), row.end(), w.row(r));
            }
            const auto b = layers[l].at("b").get<std::vector<double>>();
            if (b.size() != cp.net.biases()[l].size()) {
                throw CheckpointError("bias shape mismatch in " + path);
            }
            cp.net.biases()[l] = b;
        }
        return cp;
    } catch (const json::exception& e) {
        throw CheckpointError("malformed checkpoint " + path + ": " + e.what());
    }
}

void save_learning_curve(const TrainResult& result, const std::string& path) {
    std::ostringstream out;
    out << "episode,reward,moving_avg\n";
    out.precision(17);
    for (std::size_t i = 0; i < result.episode_rewards.size(); ++i) {
        out << i << ',' << result.episode_rewards[i] << ',' << result.moving_avg[i] << '\n';
    }
    util::write_file(path, out.str());
}

}  // namespace smartflow::agent
