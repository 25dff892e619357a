#include "hems/maddpg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace hems {

namespace {

bool finite(double v) { return std::isfinite(v); }

double res_from_features(double ghi, const SystemParams& p) {
    return res_energy(ghi, p);
}

}  // namespace

void DrState::validate(const SystemParams& p) const {
    if (!finite(e_ec) || !finite(ghi) || !finite(level) || !finite(price))
        throw DomainError("DrState fields must be finite");
    if (e_ec < 0.0 || ghi < 0.0 || price < 0.0)
        throw DomainError("DrState observables must be non-negative");
    if (level < p.level_min - kEnergyTol || level > p.level_max + kEnergyTol)
        throw DomainError("DrState level outside battery bounds");
    if (t < 1 || t > p.slots_per_day)
        throw DomainError("DrState slot index outside 1..T");
}

EnvStep env_step(const DrState& s, double a_res, double a_ess, const DayProfile& day,
                 const SystemParams& params, double penalty_lambda) {
    if (s.t > params.slots_per_day)
        throw DomainError("episode has ended: t exceeds the last slot");
    s.validate(params);
    day.validate(params.slots_per_day);
    const double e_res = res_from_features(s.ghi, params);
    const double ch_cap = params.max_charge_energy();
    const double dh_cap = params.max_discharge_energy();
    if (!finite(a_res) || !finite(a_ess))
        throw DomainError("actions must be finite");
    if (a_res < -kEnergyTol || a_res > e_res + kEnergyTol)
        throw DomainError("a_res outside [0, E_RES]");
    if (a_ess < -dh_cap - kEnergyTol || a_ess > ch_cap + kEnergyTol)
        throw DomainError("a_ess outside the rate bounds");
    a_res = std::clamp(a_res, 0.0, std::min(e_res, s.e_ec));
    a_ess = std::clamp(a_ess, -dh_cap, ch_cap);

    // Level-bound projection with a linear penalty on the cut magnitude.
    double projected = a_ess;
    if (a_ess >= 0.0) {
        const double room =
            std::max(params.level_max - s.level, 0.0) / params.ess_efficiency;
        projected = std::min(a_ess, room);
    } else {
        const double avail =
            std::max(s.level - params.level_min, 0.0) * params.ess_efficiency;
        projected = -std::min(-a_ess, avail);
    }
    const double overshoot = std::abs(a_ess - projected);

    EnvStep out;
    out.projected_a_ess = projected;
    out.reward = -slot_cost_signed(SignedEssAction{projected}, a_res, s.e_ec, e_res,
                                   s.price, params) -
                 penalty_lambda * overshoot;

    const double next_level =
        projected >= 0.0 ? s.level + projected * params.ess_efficiency
                         : s.level + projected / params.ess_efficiency;
    out.next.level = std::clamp(next_level, params.level_min, params.level_max);
    out.next.t = s.t + 1;
    if (s.t == params.slots_per_day) {
        out.done = true;
        out.next.e_ec = out.next.ghi = out.next.price = 0.0;
    } else {
        const auto idx = static_cast<std::size_t>(s.t);  // 0-based index of slot t+1
        out.next.e_ec = day.consumption[idx];
        out.next.ghi = day.irradiation[idx];
        out.next.price = day.price[idx];
    }
    return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw DomainError("replay capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Transition t) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
    } else {
        data_[next_] = std::move(t);  // FIFO overwrite of the oldest slot
        next_ = (next_ + 1) % capacity_;
    }
}

const Transition& ReplayBuffer::sample(std::mt19937_64& rng) const {
    if (data_.empty()) throw DomainError("cannot sample an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    return data_[pick(rng)];
}

double Agent::squash(double raw) const {
    return low + (high - low) * 0.5 * (std::tanh(raw) + 1.0);
}

double Agent::squash_derivative(double raw) const {
    const double th = std::tanh(raw);
    return (high - low) * 0.5 * (1.0 - th * th);
}

double Agent::act(std::span<const double> state) const {
    return squash(actor.predict(state)[0]);
}

double Agent::act_target(std::span<const double> state) const {
    return squash(target_actor.predict(state)[0]);
}

namespace {

Network make_net(int input, const std::vector<int>& hidden, std::uint64_t seed,
                 const Standardizer& x_norm) {
    std::vector<Mlp::LayerSpec> layers;
    for (const int width : hidden) layers.push_back({width, Activation::Relu});
    layers.push_back({1, Activation::Identity});
    Network net;
    net.seed = seed;
    net.model = std::make_unique<Mlp>(input, layers, seed);
    net.x_norm = x_norm;
    net.y_norm.mean = {0.0};
    net.y_norm.std = {1.0};
    return net;
}

Standardizer state_standardizer(const std::vector<DayProfile>& history,
                                const SystemParams& params) {
    std::vector<std::vector<double>> rows;
    for (const auto& day : history)
        for (int t = 0; t < params.slots_per_day; ++t) {
            const auto ts = static_cast<std::size_t>(t);
            rows.push_back({day.consumption[ts], day.irradiation[ts],
                            0.5 * (params.level_min + params.level_max), day.price[ts],
                            static_cast<double>(t + 1)});
        }
    Standardizer s;
    s.fit(rows);
    // The level column is synthetic above; scale it by the physical range.
    s.mean[2] = 0.5 * (params.level_min + params.level_max);
    s.std[2] = std::max((params.level_max - params.level_min) / 2.0, 1e-6);
    return s;
}

Standardizer joint_standardizer(const Standardizer& state, double res_range,
                                double ess_range) {
    Standardizer s = state;
    s.mean.push_back(0.0);
    s.std.push_back(std::max(res_range, 1e-6));
    s.mean.push_back(0.0);
    s.std.push_back(std::max(ess_range, 1e-6));
    return s;
}

void soft_update(Network& target, const Network& source, double tau) {
    auto& tp = target.model->params();
    const auto& sp = source.model->params();
    for (std::size_t i = 0; i < tp.size(); ++i)
        tp[i] = tau * sp[i] + (1.0 - tau) * tp[i];
}

struct Critic {
    Network* net;
    AdamState* opt;
};

}  // namespace

MaddpgAgents train_agents(const std::vector<DayProfile>& history,
                          const SystemParams& params, const MaddpgConfig& cfg) {
    if (history.empty()) throw DataError("MADDPG needs at least one historical day");
    params.validate();
    for (const auto& day : history) day.validate(params.slots_per_day);

    const double ch_cap = params.max_charge_energy();
    const double dh_cap = params.max_discharge_energy();
    double max_res = 0.0;
    for (const auto& day : history)
        for (const double g : day.irradiation)
            max_res = std::max(max_res, res_energy(g, params));

    const Standardizer s_norm = state_standardizer(history, params);
    const Standardizer joint =
        joint_standardizer(s_norm, std::max(max_res, 1.0), dh_cap + ch_cap);

    MaddpgAgents agents;
    agents.params = params;
    agents.res.low = 0.0;
    agents.res.high = 1.0;  // fraction of the slot's E_RES
    agents.res.actor = make_net(5, cfg.actor_res_hidden, cfg.seed + 1, s_norm);
    agents.res.critic = make_net(7, cfg.critic_res_hidden, cfg.seed + 2, joint);
    agents.ess.low = -dh_cap;
    agents.ess.high = ch_cap;
    agents.ess.actor = make_net(5, cfg.actor_ess_hidden, cfg.seed + 3, s_norm);
    agents.ess.critic = make_net(7, cfg.critic_ess_hidden, cfg.seed + 4, joint);
    agents.res.target_actor = agents.res.actor;
    agents.res.target_critic = agents.res.critic;
    agents.ess.target_actor = agents.ess.actor;
    agents.ess.target_critic = agents.ess.critic;

    ReplayBuffer buffer(cfg.replay_capacity);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    AdamState opt_actor_res, opt_critic_res, opt_actor_ess, opt_critic_ess;

    const auto batch = static_cast<std::size_t>(cfg.batch);
    const double decay_span =
        std::max(1.0, cfg.noise_decay_fraction * static_cast<double>(cfg.episodes));

    auto res_kwh = [&](double fraction, double ghi) {
        return fraction * res_energy(ghi, params);
    };
    auto update_critic = [&](Agent& agent, AdamState& opt) {
        std::vector<double> grad(agent.critic.model->params().size(), 0.0);
        double loss = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const Transition& tr = buffer.sample(rng);
            double y = tr.reward;
            if (!tr.done) {
                const double na_res = res_kwh(agents.res.act_target(tr.next_state),
                                              tr.next_state[1]);
                const double na_ess = agents.ess.act_target(tr.next_state);
                std::vector<double> nx = tr.next_state;
                nx.push_back(na_res);
                nx.push_back(na_ess);
                y += cfg.gamma * agent.target_critic.predict(nx)[0];
            }
            std::vector<double> x = tr.state;
            x.push_back(tr.a_res);
            x.push_back(tr.a_ess);
            const double q = agent.critic.predict(x)[0];
            const double err = q - y;
            loss += err * err;
            const std::vector<double> dy = {2.0 * err / static_cast<double>(batch)};
            agent.critic.model->accumulate_gradient(agent.critic.x_norm.apply(x), dy,
                                                    grad);
        }
        if (!finite(loss)) throw TrainingError("critic loss diverged");
        adam_step(agent.critic.model->params(), grad, opt, cfg.lr_critic);
    };

    auto update_actor = [&](Agent& agent, AdamState& opt, bool is_res) {
        std::vector<double> grad(agent.actor.model->params().size(), 0.0);
        for (std::size_t b = 0; b < batch; ++b) {
            const Transition& tr = buffer.sample(rng);
            const double raw = agent.actor.predict(tr.state)[0];
            const double e_res = res_from_features(tr.state[1], params);
            const double own = is_res ? agent.squash(raw) * e_res : agent.squash(raw);
            std::vector<double> x = tr.state;
            x.push_back(is_res ? own : tr.a_res);
            x.push_back(is_res ? tr.a_ess : own);
            std::vector<double> dx;
            std::vector<double> cgrad(agent.critic.model->params().size(), 0.0);
            agent.critic.model->accumulate_gradient(agent.critic.x_norm.apply(x),
                                                    std::vector<double>{1.0}, cgrad, &dx);
            // dQ w.r.t. the raw (standardized) critic input; undo the scaling
            // to get dQ w.r.t. the physical action.
            const std::size_t ai = is_res ? 5 : 6;
            const double dq_da = dx[ai] / agent.critic.x_norm.std[ai];
            double chain = agent.squash_derivative(raw);
            if (is_res) chain *= e_res;
            const double dloss_draw = -dq_da * chain / static_cast<double>(batch);
            agent.actor.model->accumulate_gradient(agent.actor.x_norm.apply(tr.state),
                                                   std::vector<double>{dloss_draw},
                                                   grad);
        }
        adam_step(agent.actor.model->params(), grad, opt, cfg.lr_actor);
    };

    const auto train_start = std::chrono::steady_clock::now();
    for (int episode = 0; episode < cfg.episodes; ++episode) {
        if (cfg.max_seconds > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          train_start)
                    .count() >= cfg.max_seconds)
            break;
        const DayProfile& day =
            history[static_cast<std::size_t>(episode) % history.size()];
        const double frac =
            std::min(1.0, static_cast<double>(episode) / decay_span);
        const double sigma = cfg.noise_start + (cfg.noise_end - cfg.noise_start) * frac;

        DrState s;
        s.e_ec = day.consumption[0];
        s.ghi = day.irradiation[0];
        s.level = params.level_initial;
        s.price = day.price[0];
        s.t = 1;
        double episode_return = 0.0;

        for (int t = 1; t <= params.slots_per_day; ++t) {
            const double e_res = res_from_features(s.ghi, params);
            const auto sf = s.features();
            double frac_res = agents.res.act(sf) + sigma * gauss(rng);
            frac_res = std::clamp(frac_res, 0.0, 1.0);
            double a_ess =
                agents.ess.act(sf) + sigma * (dh_cap + ch_cap) * gauss(rng);
            a_ess = std::clamp(a_ess, -dh_cap, ch_cap);
            const double a_res = frac_res * e_res;

            const EnvStep step = env_step(s, a_res, a_ess, day, params,
                                          cfg.penalty_lambda);
            if (!finite(step.reward))
                throw TrainingError("non-finite reward at episode " +
                                    std::to_string(episode));
            episode_return += step.reward;
            buffer.push({sf, a_res, step.projected_a_ess, step.reward,
                         step.next.features(), step.done});

            if (buffer.size() >= batch) {
                try {
                    update_critic(agents.res, opt_critic_res);
                    update_critic(agents.ess, opt_critic_ess);
                    update_actor(agents.res, opt_actor_res, true);
                    update_actor(agents.ess, opt_actor_ess, false);
                } catch (const TrainingError& e) {
                    throw TrainingError(std::string(e.what()) + " at episode " +
                                        std::to_string(episode));
                }
                soft_update(agents.res.target_actor, agents.res.actor, cfg.tau);
                soft_update(agents.res.target_critic, agents.res.critic, cfg.tau);
                soft_update(agents.ess.target_actor, agents.ess.actor, cfg.tau);
                soft_update(agents.ess.target_critic, agents.ess.critic, cfg.tau);
            }
            if (step.done) break;
            s = step.next;
        }

        agents.episode_returns.push_back(episode_return);
        if (!std::isnan(cfg.stop_return) &&
            agents.episode_returns.size() >= static_cast<std::size_t>(cfg.stop_window)) {
            double mean = 0.0;
            const auto n = static_cast<std::size_t>(cfg.stop_window);
            for (std::size_t i = agents.episode_returns.size() - n;
                 i < agents.episode_returns.size(); ++i)
                mean += agents.episode_returns[i];
            mean /= static_cast<double>(n);
            if (mean >= cfg.stop_return) break;
        }
    }
    return agents;
}

std::pair<double, double> act(const MaddpgAgents& agents, const DrState& s) {
    const auto sf = s.features();
    const double e_res = res_energy(s.ghi, agents.params);
    return {agents.res.act(sf) * e_res, agents.ess.act(sf)};
}

double greedy_day_return(const MaddpgAgents& agents, const DayProfile& day,
                         double penalty_lambda) {
    DrState s;
    s.e_ec = day.consumption[0];
    s.ghi = day.irradiation[0];
    s.level = agents.params.level_initial;
    s.price = day.price[0];
    s.t = 1;
    double total = 0.0;
    for (int t = 1; t <= agents.params.slots_per_day; ++t) {
        const auto [a_res, a_ess] = act(agents, s);
        const EnvStep step = env_step(s, a_res, a_ess, day, agents.params,
                                      penalty_lambda);
        total += step.reward;
        if (step.done) break;
        s = step.next;
    }
    return total;
}

Strategy maddpg_strategy(const MaddpgAgents& agents, const Forecaster& rnn_ec) {
    return [&agents, &rnn_ec](const SlotObservation& obs) {
        const SystemParams& p = agents.params;
        const auto w = static_cast<std::size_t>(rnn_ec.window);
        if (obs.cons_history.size() < w)
            throw DataError("not enough consumption history for the forecaster window");
        const double ec_hat =
            rnn_ec.predict(obs.cons_history.subspan(obs.cons_history.size() - w))[0];
        DrState s;
        s.e_ec = ec_hat;
        s.ghi = obs.ghi;
        s.level = obs.level;
        s.price = obs.price;
        s.t = obs.t + 1;
        const auto [a_res, a_ess] = act(agents, s);
        const double e_res = res_energy(obs.ghi, p);
        const double ch_cap = p.max_charge_energy();
        const double dh_cap = p.max_discharge_energy();

        SlotDispatch d;
        if (a_ess >= 0.0) {
            d.charging = true;
            double rl = std::clamp(a_res, 0.0, std::min(e_res, ec_hat));
            double rc = std::min(std::max(e_res - rl, 0.0), a_ess);
            double gc = std::clamp(a_ess - rc, 0.0, ch_cap - std::min(rc, ch_cap));
            rc = std::min(rc, ch_cap);
            const double room = std::max(p.level_max - obs.level, 0.0) / p.ess_efficiency;
            const double total = rc + gc;
            if (total > room) {
                const double scale = total > 0.0 ? room / total : 0.0;
                rc *= scale;
                gc *= scale;
            }
            d.res_to_load = rl;
            d.res_to_ess = rc;
            d.grid_to_ess = gc;
        } else {
            d.charging = false;
            d.res_to_load = std::min(e_res, ec_hat);
            double total = std::min(-a_ess, dh_cap);
            const double avail =
                std::max(obs.level - p.level_min, 0.0) * p.ess_efficiency;
            total = std::min(total, avail);
            d.ess_to_load = std::min(total, std::max(ec_hat - d.res_to_load, 0.0));
            d.ess_to_sell = total - d.ess_to_load;
        }
        // Re-project the load split against the realized consumption.
        d.res_to_load = std::min(d.res_to_load, obs.e_ec);
        if (!d.charging) {
            const double total = d.ess_to_load + d.ess_to_sell;
            d.ess_to_load = std::min(total, std::max(obs.e_ec - d.res_to_load, 0.0));
            d.ess_to_sell = total - d.ess_to_load;
        }
        return d;
    };
}

void dump_returns_csv(const std::vector<double>& returns, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "episode,return\n";
    char buf[64];
    for (std::size_t i = 0; i < returns.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, returns[i]);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

void save_agents(const MaddpgAgents& agents, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    save_network(agents.res.actor, (base / "res_actor.bin").string());
    save_network(agents.res.critic, (base / "res_critic.bin").string());
    save_network(agents.res.target_actor, (base / "res_target_actor.bin").string());
    save_network(agents.res.target_critic, (base / "res_target_critic.bin").string());
    save_network(agents.ess.actor, (base / "ess_actor.bin").string());
    save_network(agents.ess.critic, (base / "ess_critic.bin").string());
    save_network(agents.ess.target_actor, (base / "ess_target_actor.bin").string());
    save_network(agents.ess.target_critic, (base / "ess_target_critic.bin").string());
    nlohmann::json manifest;
    manifest["kind"] = "maddpg-agents";
    manifest["res_low"] = agents.res.low;
    manifest["res_high"] = agents.res.high;
    manifest["ess_low"] = agents.ess.low;
    manifest["ess_high"] = agents.ess.high;
    manifest["params"] = {{"ess_efficiency", agents.params.ess_efficiency},
                          {"charge_rate", agents.params.charge_rate},
                          {"discharge_rate", agents.params.discharge_rate},
                          {"level_min", agents.params.level_min},
                          {"level_max", agents.params.level_max},
                          {"level_initial", agents.params.level_initial},
                          {"panel_area", agents.params.panel_area},
                          {"res_efficiency", agents.params.res_efficiency},
                          {"sell_ratio", agents.params.sell_ratio},
                          {"slot_duration", agents.params.slot_duration},
                          {"slots_per_day", agents.params.slots_per_day}};
    std::ofstream out(base / "manifest.json");
    if (!out) throw DataError("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

MaddpgAgents load_agents(const std::string& dir) {
    const std::filesystem::path base(dir);
    std::ifstream in(base / "manifest.json");
    if (!in) throw IoError("cannot open manifest in " + dir);
    nlohmann::json manifest;
    in >> manifest;
    if (manifest.value("kind", "") != "maddpg-agents")
        throw DataError(dir + ": not a MADDPG agent bundle");
    MaddpgAgents agents;
    const auto& pj = manifest.at("params");
    agents.params.ess_efficiency = pj.at("ess_efficiency").get<double>();
    agents.params.charge_rate = pj.at("charge_rate").get<double>();
    agents.params.discharge_rate = pj.at("discharge_rate").get<double>();
    agents.params.level_min = pj.at("level_min").get<double>();
    agents.params.level_max = pj.at("level_max").get<double>();
    agents.params.level_initial = pj.at("level_initial").get<double>();
    agents.params.panel_area = pj.at("panel_area").get<double>();
    agents.params.res_efficiency = pj.at("res_efficiency").get<double>();
    agents.params.sell_ratio = pj.at("sell_ratio").get<double>();
    agents.params.slot_duration = pj.at("slot_duration").get<double>();
    agents.params.slots_per_day = pj.at("slots_per_day").get<int>();
    agents.res.low = manifest.at("res_low").get<double>();
    agents.res.high = manifest.at("res_high").get<double>();
    agents.ess.low = manifest.at("ess_low").get<double>();
    agents.ess.high = manifest.at("ess_high").get<double>();
    agents.res.actor = load_network((base / "res_actor.bin").string());
    agents.res.critic = load_network((base / "res_critic.bin").string());
    agents.res.target_actor = load_network((base / "res_target_actor.bin").string());
    agents.res.target_critic = load_network((base / "res_target_critic.bin").string());
    agents.ess.actor = load_network((base / "ess_actor.bin").string());
    agents.ess.critic = load_network((base / "ess_critic.bin").string());
    agents.ess.target_actor = load_network((base / "ess_target_actor.bin").string());
    agents.ess.target_critic = load_network((base / "ess_target_critic.bin").string());
    return agents;
}

}  // namespace hems
