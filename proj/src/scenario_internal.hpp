#pragma once

#include <string>
#include <vector>

#include "intinv/scenario.hpp"

namespace intinv::detail {

struct BuiltinDef {
  CatalogEntry entry;
  ScenarioRunner run;
};

/// Sorted by id.
const std::vector<BuiltinDef>& builtin_registry();
const BuiltinDef* find_builtin(const std::string& id);
/// Empty function when the kind has no inline form.
ScenarioRunner inline_runner(const std::string& kind);

const char* expectation_name(Expectation e);

}  // namespace intinv::detail
