#ifndef TERRA_CORE_POLICIES_HPP
#define TERRA_CORE_POLICIES_HPP

#include <memory>
#include <string>
#include <vector>

#include "core/sim.hpp"

namespace terra {

// Equal-rate progressive filling: every entity (a flow, or one subflow of a
// multipath flow) rises at the same rate until an arc on its route
// saturates. Returns one rate per entity; entities with an empty arc list or
// a dead arc stay at zero.
std::vector<double> progressive_fill(const std::vector<std::vector<int>>& entity_arcs,
                                     std::vector<double> caps);

// perflow | multipath | varys | swan_mcf | terra
std::shared_ptr<Policy> make_policy(const std::string& name);
std::vector<std::string> policy_names();

}  // namespace terra

#endif
