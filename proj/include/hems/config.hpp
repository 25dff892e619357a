#pragma once

#include <iosfwd>
#include <string>

#include "hems/core.hpp"
#include "hems/forecast.hpp"
#include "hems/imitation.hpp"
#include "hems/maddpg.hpp"

namespace hems {

/// Everything the CLI can be told through `--config`: the physical system
/// parameters, data-synthesis choices, and every training hyperparameter.
/// Defaults reproduce the reference setup.
struct Config {
    SystemParams system;

    // Data synthesis and splitting.
    int months = 2;                   // total synthetic length
    std::string home_class = "stable";  // stable | fluctuating | chaos
    int test_months = 1;              // held-out tail

    ForecastOptions forecast;
    ImitationTrainOptions imitation;
    MaddpgConfig maddpg;

    long node_limit = 200000;  // branch-and-bound budget per day

    void validate() const;
};

/// Parses `key = value` lines ('#' starts a comment, blank lines ignored,
/// integer lists comma-separated). Unknown keys and unparsable values are
/// DataErrors naming the offending line.
Config parse_config(std::istream& in);

/// parse_config over a file; missing file is an IoError.
Config load_config(const std::string& path);

/// Writes every key with its current value; the output re-parses to an
/// identical Config.
void dump_config(const Config& cfg, std::ostream& out);

}  // namespace hems
