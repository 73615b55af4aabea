// Copyright 2026 The Poise Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POISE_REFLECTION_HPP_
#define POISE_REFLECTION_HPP_

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "poise/common.hpp"

namespace poise {

enum class ReflectionTag {
  entropy_collapse,
  all_fail_stagnation,
  reward_gain,
  reward_regression,
  length_drift_up,
  length_drift_down,
  instability,
};

inline const std::vector<std::pair<ReflectionTag, std::string>>& reflection_tag_names() {
  static const std::vector<std::pair<ReflectionTag, std::string>> kNames = {
      {ReflectionTag::entropy_collapse, "entropy_collapse"},
      {ReflectionTag::all_fail_stagnation, "all_fail_stagnation"},
      {ReflectionTag::reward_gain, "reward_gain"},
      {ReflectionTag::reward_regression, "reward_regression"},
      {ReflectionTag::length_drift_up, "length_drift_up"},
      {ReflectionTag::length_drift_down, "length_drift_down"},
      {ReflectionTag::instability, "instability"},
  };
  return kNames;
}

inline std::string to_string(ReflectionTag t) {
  for (const auto& [tag, name] : reflection_tag_names()) {
    if (tag == t) return name;
  }
  throw PoiseError("unknown reflection tag");
}

inline ReflectionTag reflection_tag_from_string(const std::string& name) {
  for (const auto& [tag, n] : reflection_tag_names()) {
    if (n == name) return tag;
  }
  throw PoiseError("unknown reflection tag: " + name);
}

// Rule-based structured diagnosis: tags derived only from trajectory and
// metrics, metric deltas vs the parent, and a templated one-line note.
struct Reflection {
  std::set<ReflectionTag> tags;
  std::map<std::string, double> deltas;
  std::string note;

  bool has(ReflectionTag t) const { return tags.count(t) > 0; }

  bool operator==(const Reflection&) const = default;
};

inline void to_json(nlohmann::json& j, const Reflection& r) {
  std::vector<std::string> tags;
  for (ReflectionTag t : r.tags) tags.push_back(to_string(t));
  j = nlohmann::json{{"tags", tags}, {"deltas", r.deltas}, {"note", r.note}};
}

inline void from_json(const nlohmann::json& j, Reflection& r) {
  r = Reflection{};
  for (const auto& t : j.at("tags")) {
    r.tags.insert(reflection_tag_from_string(t.get<std::string>()));
  }
  r.deltas = j.value("deltas", std::map<std::string, double>{});
  r.note = j.value("note", "");
}

}  // namespace poise

#endif  // POISE_REFLECTION_HPP_
