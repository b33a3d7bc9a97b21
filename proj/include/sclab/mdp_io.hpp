#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sclab/mdp.hpp"

namespace sclab {

/// Parsed MDP document: the model plus its optional embedded behavior policy.
struct MdpSpec {
  Mdp mdp;
  std::optional<Policy> behavior;
};

/// Uniform policy over each state's action list.
inline Policy uniform_policy(const Mdp& mdp) {
  Policy out;
  out.rows.resize(static_cast<std::size_t>(mdp.n_states()));
  for (std::int32_t s : mdp.non_terminal_states()) {
    const auto k = static_cast<std::size_t>(mdp.n_actions(s));
    out.rows[static_cast<std::size_t>(s)].assign(k, 1.0 / static_cast<double>(k));
  }
  return out;
}

/**
 * JSON document layout (schema shipped in docs/mdp.schema.json):
 *   {
 *     "format": "sclab-mdp", "version": 1,
 *     "n_states": int,
 *     "terminal_success": [int...], "terminal_failure": [int...],
 *     "initial_dist": [double per state],
 *     "transitions": [per non-terminal state ascending: [per action: [double per state]]],
 *     "behavior": optional [per non-terminal state: [double per action]]
 *   }
 * All probability vectors are explicit; doubles are emitted in shortest
 * round-trip form, so save/load is bit-exact.
 */
inline nlohmann::json mdp_to_json(const Mdp& mdp, const Policy* behavior = nullptr) {
  nlohmann::json doc;
  doc["format"] = "sclab-mdp";
  doc["version"] = 1;
  doc["n_states"] = mdp.n_states();
  doc["terminal_success"] = mdp.terminal_success();
  doc["terminal_failure"] = mdp.terminal_failure();
  doc["initial_dist"] = mdp.initial_dist();
  nlohmann::json trans = nlohmann::json::array();
  for (std::int32_t s : mdp.non_terminal_states())
    trans.push_back(mdp.transitions()[static_cast<std::size_t>(s)]);
  doc["transitions"] = std::move(trans);
  if (behavior) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::int32_t s : mdp.non_terminal_states()) rows.push_back(behavior->row(s));
    doc["behavior"] = std::move(rows);
  }
  return doc;
}

inline MdpSpec mdp_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", "") != "sclab-mdp")
      throw InvalidParameter("missing or wrong \"format\" field, expected \"sclab-mdp\"");
    const auto n = doc.at("n_states").get<std::int32_t>();
    auto success = doc.at("terminal_success").get<std::vector<std::int32_t>>();
    auto failure = doc.at("terminal_failure").get<std::vector<std::int32_t>>();
    auto initial = doc.at("initial_dist").get<std::vector<double>>();
    const auto& trans_doc = doc.at("transitions");

    std::vector<bool> terminal(static_cast<std::size_t>(std::max(n, 1)), false);
    for (auto s : success)
      if (s >= 0 && s < n) terminal[static_cast<std::size_t>(s)] = true;
    for (auto s : failure)
      if (s >= 0 && s < n) terminal[static_cast<std::size_t>(s)] = true;

    std::vector<std::vector<std::vector<double>>> trans(static_cast<std::size_t>(n));
    std::size_t cursor = 0;
    for (std::int32_t s = 0; s < n; ++s) {
      if (terminal[static_cast<std::size_t>(s)]) continue;
      if (cursor >= trans_doc.size())
        throw DimensionMismatch("transitions has fewer rows than non-terminal states");
      trans[static_cast<std::size_t>(s)] =
          trans_doc[cursor].get<std::vector<std::vector<double>>>();
      ++cursor;
    }
    if (cursor != trans_doc.size())
      throw DimensionMismatch("transitions has more rows than non-terminal states");

    MdpSpec spec{Mdp(n, std::move(trans), std::move(initial), std::move(success),
                     std::move(failure)),
                 std::nullopt};
    if (doc.contains("behavior")) {
      const auto& rows_doc = doc.at("behavior");
      Policy behavior;
      behavior.rows.resize(static_cast<std::size_t>(n));
      std::size_t rc = 0;
      for (std::int32_t s : spec.mdp.non_terminal_states()) {
        if (rc >= rows_doc.size())
          throw DimensionMismatch("behavior has fewer rows than non-terminal states");
        behavior.rows[static_cast<std::size_t>(s)] = rows_doc[rc].get<std::vector<double>>();
        ++rc;
      }
      if (rc != rows_doc.size())
        throw DimensionMismatch("behavior has more rows than non-terminal states");
      spec.behavior = std::move(behavior);
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed MDP document: ") + e.what());
  }
}

inline void save_mdp(const std::string& path, const Mdp& mdp, const Policy* behavior = nullptr) {
  std::ofstream os(path);
  if (!os) throw InvalidParameter("cannot open " + path + " for writing");
  os << mdp_to_json(mdp, behavior).dump(2) << '\n';
}

/// Parses an MDP document, reporting line and column on malformed JSON.
inline MdpSpec load_mdp(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidParameter("cannot open " + path);
  std::stringstream buffer;
  buffer << is.rdbuf();
  const std::string text = buffer.str();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InvalidParameter(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                           ": " + e.what());
  }
  return mdp_from_json(doc);
}

}  // namespace sclab
