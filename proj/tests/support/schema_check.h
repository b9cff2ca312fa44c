// Copyright 2026 The CRR Authors.
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


// Validator for the JSON Schema keywords used in schemas/: type, required,
// properties, items, enum, minimum, maximum and local "#/$defs/<name>" refs.

#ifndef CRR_TESTS_SUPPORT_SCHEMA_CHECK_H_
#define CRR_TESTS_SUPPORT_SCHEMA_CHECK_H_

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace crr::testing {

inline bool MatchesType(const nlohmann::json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

inline void CollectViolations(const nlohmann::json& v,
                              const nlohmann::json& schema,
                              const nlohmann::json& root,
                              const std::string& where,
                              std::vector<std::string>& out) {
  if (schema.contains("$ref")) {
    const std::string ref = schema["$ref"];
    const std::string prefix = "#/$defs/";
    if (ref.rfind(prefix, 0) != 0) {
      out.push_back(where + ": unsupported $ref " + ref);
      return;
    }
    CollectViolations(v, root["$defs"][ref.substr(prefix.size())], root,
                      where, out);
    return;
  }
  if (schema.contains("type") && !MatchesType(v, schema["type"])) {
    out.push_back(where + ": expected " + schema["type"].get<std::string>());
    return;
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == v;
    if (!found) out.push_back(where + ": not in enum");
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (schema.contains("minimum") && x < schema["minimum"].get<double>()) {
      out.push_back(where + ": below minimum");
    }
    if (schema.contains("maximum") && x > schema["maximum"].get<double>()) {
      out.push_back(where + ": above maximum");
    }
  }
  if (v.is_object()) {
    for (const auto& key : schema.value("required", nlohmann::json::array())) {
      if (!v.contains(key)) {
        out.push_back(where + ": missing " + key.get<std::string>());
      }
    }
    if (schema.contains("properties")) {
      for (const auto& [key, sub] : schema["properties"].items()) {
        if (v.contains(key)) {
          CollectViolations(v[key], sub, root, where + "." + key, out);
        }
      }
    }
  }
  if (v.is_array() && schema.contains("items")) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      CollectViolations(v[i], schema["items"], root,
                        where + "[" + std::to_string(i) + "]", out);
    }
  }
}

// Violations of `v` against definition `def` of the schema document `root`.
inline std::vector<std::string> SchemaViolations(const nlohmann::json& v,
                                                 const nlohmann::json& root,
                                                 const std::string& def) {
  std::vector<std::string> out;
  CollectViolations(v, root["$defs"][def], root, def, out);
  return out;
}

inline nlohmann::json LoadSchema(const std::string& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

}  // namespace crr::testing

#endif  // CRR_TESTS_SUPPORT_SCHEMA_CHECK_H_
