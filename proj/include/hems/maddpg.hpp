#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hems/forecast.hpp"
#include "hems/nn.hpp"
#include "hems/sim.hpp"

namespace hems {

/// Environment state at the beginning of slot t (1-based, 1..T).
struct DrState {
    double e_ec = 0.0;   // kWh
    double ghi = 0.0;    // kW/m^2
    double level = 0.0;  // kWh, ESS level entering the slot
    double price = 0.0;  // currency/kWh
    int t = 1;

    std::vector<double> features() const {
        return {e_ec, ghi, level, price, static_cast<double>(t)};
    }
    void validate(const SystemParams& p) const;
};

struct EnvStep {
    DrState next;
    double reward = 0.0;
    bool done = false;
    double projected_a_ess = 0.0;  // after the level-bound projection
};

/// One environment transition. Preconditions: a_res in [0, E_RES] and a_ess in
/// [-Dh_rate*dt, Ch_rate*dt] (pre-squashed). A level-bound violation is
/// projected away and penalized with -penalty_lambda * overshoot.
EnvStep env_step(const DrState& s, double a_res, double a_ess, const DayProfile& day,
                 const SystemParams& params, double penalty_lambda = 1.0);

struct Transition {
    std::vector<double> state;       // 5 features
    double a_res = 0.0, a_ess = 0.0;
    double reward = 0.0;
    std::vector<double> next_state;  // 5 features
    bool done = false;
};

/// Fixed-capacity FIFO buffer with uniform sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);
    void push(Transition t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& sample(std::mt19937_64& rng) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

/// Actor-critic pair with target copies. The actor maps the 5-feature state
/// to one pre-squash output; act() maps it into [low, high] with tanh.
struct Agent {
    Network actor, critic;
    Network target_actor, target_critic;
    double low = 0.0, high = 1.0;

    double squash(double raw) const;
    double squash_derivative(double raw) const;
    double act(std::span<const double> state) const;
    double act_target(std::span<const double> state) const;
};

struct MaddpgConfig {
    int episodes = 4000;
    double gamma = 0.99;
    double tau = 0.001;
    double lr_actor = 0.001;
    double lr_critic = 0.0001;
    std::vector<int> actor_res_hidden = {100, 100};
    std::vector<int> critic_res_hidden = {100, 200, 200};
    std::vector<int> actor_ess_hidden = {200, 200, 200};
    std::vector<int> critic_ess_hidden = {100, 200, 200};
    std::size_t replay_capacity = 100000;
    int batch = 64;
    // Gaussian exploration noise as a fraction of the action range, decaying
    // linearly from noise_start to noise_end over the first
    // noise_decay_fraction of the episodes.
    double noise_start = 0.3;
    double noise_end = 0.01;
    double noise_decay_fraction = 0.8;
    double penalty_lambda = 1.0;
    std::uint64_t seed = 0;
    // Optional early stop: end training once the mean return over the last
    // stop_window episodes reaches stop_return (NaN disables).
    double stop_return = std::numeric_limits<double>::quiet_NaN();
    int stop_window = 100;
    // Optional wall-clock budget in seconds; training returns whatever it has
    // once the budget is spent (0 disables).
    double max_seconds = 0.0;
};

struct MaddpgAgents {
    Agent res, ess;
    SystemParams params;
    std::vector<double> episode_returns;
};

/// Algorithm 2 step 1: centralized critics over the joint (state, a_res,
/// a_ess), decentralized actors, soft target updates, one gradient step per
/// environment step. Deterministic for a fixed seed.
MaddpgAgents train_agents(const std::vector<DayProfile>& history,
                          const SystemParams& params, const MaddpgConfig& cfg);

/// Deterministic greedy joint action (no exploration noise).
std::pair<double, double> act(const MaddpgAgents& agents, const DrState& s);

/// Return of one full day under the greedy policy (sum of env rewards).
double greedy_day_return(const MaddpgAgents& agents, const DayProfile& day,
                         double penalty_lambda = 1.0);

/// Algorithm 2 step 2: hour-ahead execution with a 1-step consumption
/// forecaster; mode decided by the sign of a_ess.
Strategy maddpg_strategy(const MaddpgAgents& agents, const Forecaster& rnn_ec);

void dump_returns_csv(const std::vector<double>& returns, const std::string& path);

void save_agents(const MaddpgAgents& agents, const std::string& dir);
MaddpgAgents load_agents(const std::string& dir);

}  // namespace hems
