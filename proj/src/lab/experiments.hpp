#pragma once

#include <string>
#include <vector>

#include "lab/config.hpp"
#include "lab/report.hpp"

namespace klab::lab {

const std::vector<std::string>& experiment_names();
bool is_experiment(const std::string& name);

// Runs one registered experiment. Unknown names throw InvalidArgument.
ExperimentReport run_experiment(const std::string& name, const Config& cfg);

// Cartesian sweep over one key: every value is run with run.single = 1 and the
// experiment's "primary" scalar is fitted log-log against the swept value.
// Fewer than 3 values is an error. A known (experiment, key) pair also gets a
// verdict on the fitted slope.
ExperimentReport sweep_experiment(const std::string& name, const std::string& key, const std::vector<std::string>& values,
                                  const Config& cfg);

}  // namespace klab::lab
