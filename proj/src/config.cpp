#include "hems/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hems {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw DataError("config key '" + key + "': cannot parse number '" + v + "'");
    }
}

long long parse_int(const std::string& v, const std::string& key) {
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw DataError("config key '" + key + "': cannot parse integer '" + v + "'");
    return out;
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<int>(parse_int(trim(item), key)));
    if (out.empty())
        throw DataError("config key '" + key + "': empty integer list");
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

// One table drives parsing, dumping, and the known-key check.
struct Entry {
    std::function<void(Config&, const std::string&, const std::string&)> set;
    std::function<std::string(const Config&)> get;
};

std::map<std::string, Entry> build_schema() {
    std::map<std::string, Entry> schema;
    const auto add = [&](const std::string& key, auto setter, auto getter) {
        schema[key] = {
            [setter, key](Config& c, const std::string& v, const std::string&) {
                setter(c, v, key);
            },
            getter};
    };

#define HEMS_DBL(key, field)                                                      \
    add(key,                                                                      \
        [](Config& c, const std::string& v, const std::string& k) {               \
            c.field = parse_double(v, k);                                         \
        },                                                                        \
        [](const Config& c) { return fmt(c.field); })
#define HEMS_INT(key, field)                                                      \
    add(key,                                                                      \
        [](Config& c, const std::string& v, const std::string& k) {               \
            c.field = static_cast<decltype(c.field)>(parse_int(v, k));            \
        },                                                                        \
        [](const Config& c) { return std::to_string(c.field); })
#define HEMS_LIST(key, field)                                                     \
    add(key,                                                                      \
        [](Config& c, const std::string& v, const std::string& k) {               \
            c.field = parse_int_list(v, k);                                       \
        },                                                                        \
        [](const Config& c) { return fmt(c.field); })

    HEMS_DBL("system.ess_efficiency", system.ess_efficiency);
    HEMS_DBL("system.charge_rate", system.charge_rate);
    HEMS_DBL("system.discharge_rate", system.discharge_rate);
    HEMS_DBL("system.level_min", system.level_min);
    HEMS_DBL("system.level_max", system.level_max);
    HEMS_DBL("system.level_initial", system.level_initial);
    HEMS_DBL("system.panel_area", system.panel_area);
    HEMS_DBL("system.res_efficiency", system.res_efficiency);
    HEMS_DBL("system.sell_ratio", system.sell_ratio);
    HEMS_DBL("system.slot_duration", system.slot_duration);
    HEMS_INT("system.slots_per_day", system.slots_per_day);

    HEMS_INT("data.months", months);
    add("data.home_class",
        [](Config& c, const std::string& v, const std::string& k) {
            if (v != "stable" && v != "fluctuating" && v != "chaos")
                throw DataError("config key '" + k + "': unknown home class '" + v +
                                "'");
            c.home_class = v;
        },
        [](const Config& c) { return c.home_class; });
    HEMS_INT("data.test_months", test_months);

    HEMS_INT("forecast.window", forecast.window);
    HEMS_INT("forecast.layers", forecast.layers);
    HEMS_INT("forecast.hidden", forecast.hidden);
    HEMS_INT("forecast.epochs", forecast.epochs);
    HEMS_INT("forecast.batch", forecast.batch);
    HEMS_DBL("forecast.lr", forecast.lr);
    HEMS_INT("forecast.max_samples", forecast.max_samples);

    HEMS_LIST("imitation.hidden", imitation.hidden);
    HEMS_INT("imitation.epochs", imitation.epochs);
    HEMS_INT("imitation.batch", imitation.batch);
    HEMS_DBL("imitation.lr", imitation.lr);

    HEMS_INT("maddpg.episodes", maddpg.episodes);
    HEMS_DBL("maddpg.gamma", maddpg.gamma);
    HEMS_DBL("maddpg.tau", maddpg.tau);
    HEMS_DBL("maddpg.lr_actor", maddpg.lr_actor);
    HEMS_DBL("maddpg.lr_critic", maddpg.lr_critic);
    HEMS_LIST("maddpg.actor_res_hidden", maddpg.actor_res_hidden);
    HEMS_LIST("maddpg.critic_res_hidden", maddpg.critic_res_hidden);
    HEMS_LIST("maddpg.actor_ess_hidden", maddpg.actor_ess_hidden);
    HEMS_LIST("maddpg.critic_ess_hidden", maddpg.critic_ess_hidden);
    HEMS_INT("maddpg.replay_capacity", maddpg.replay_capacity);
    HEMS_INT("maddpg.batch", maddpg.batch);
    HEMS_DBL("maddpg.noise_start", maddpg.noise_start);
    HEMS_DBL("maddpg.noise_end", maddpg.noise_end);
    HEMS_DBL("maddpg.noise_decay_fraction", maddpg.noise_decay_fraction);
    HEMS_DBL("maddpg.penalty_lambda", maddpg.penalty_lambda);
    HEMS_DBL("maddpg.stop_return", maddpg.stop_return);
    HEMS_INT("maddpg.stop_window", maddpg.stop_window);
    HEMS_DBL("maddpg.max_seconds", maddpg.max_seconds);

    HEMS_INT("milp.node_limit", node_limit);

#undef HEMS_DBL
#undef HEMS_INT
#undef HEMS_LIST
    return schema;
}

const std::map<std::string, Entry>& schema() {
    static const auto s = build_schema();
    return s;
}

}  // namespace

void Config::validate() const {
    system.validate();
    if (months < 2) throw DataError("data.months must be at least 2");
    if (test_months < 1 || test_months >= months)
        throw DataError("data.test_months must leave at least one training month");
    if (forecast.window < 1 || forecast.layers < 1 || forecast.hidden < 1 ||
        forecast.epochs < 1 || forecast.batch < 1 || forecast.lr <= 0.0)
        throw DataError("forecast hyperparameters must be positive");
    if (imitation.epochs < 1 || imitation.batch < 1 || imitation.lr <= 0.0)
        throw DataError("imitation hyperparameters must be positive");
    if (maddpg.episodes < 1 || maddpg.batch < 1 || maddpg.replay_capacity == 0 ||
        maddpg.lr_actor <= 0.0 || maddpg.lr_critic <= 0.0)
        throw DataError("maddpg hyperparameters must be positive");
    if (node_limit < 0) throw DataError("milp.node_limit must be non-negative");
}

Config parse_config(std::istream& in) {
    Config cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw DataError("config line " + std::to_string(line_no) +
                            ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        const auto it = schema().find(key);
        if (it == schema().end())
            throw DataError("config line " + std::to_string(line_no) +
                            ": unknown key '" + key + "'");
        it->second.set(cfg, value, key);
    }
    cfg.validate();
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return parse_config(in);
}

void dump_config(const Config& cfg, std::ostream& out) {
    for (const auto& [key, entry] : schema())
        out << key << " = " << entry.get(cfg) << '\n';
}

}  // namespace hems
