#pragma once

#include <string>
#include <vector>

#include "lrkkt/ipm.hpp"
#include "lrkkt/kkt.hpp"

namespace lrkkt {

std::string instance_to_json(const SubproblemData& data);
SubproblemData instance_from_json(const std::string& text);

void save_instance(const SubproblemData& data, const std::string& path);
SubproblemData load_instance(const std::string& path);

/// Writes manifest.json, instance.json and one snapshot_NNNN.json per entry.
void save_trace(const SubproblemData& data, const std::vector<KKTSnapshot>& trace,
                const std::string& dir);

struct LoadedTrace {
  SubproblemData data;
  std::vector<KKTSnapshot> trace;
};

LoadedTrace load_trace(const std::string& dir);

}  // namespace lrkkt
