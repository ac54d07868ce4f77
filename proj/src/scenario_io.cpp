// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <random>

#include <json.hpp>

#include "uavnet/io.hpp"

namespace uavnet::io {

using nlohmann::json;

namespace {

// Paper-parameter defaults; every field can be overridden by the document.
Scenario<double> default_scenario() {
  Scenario<double> scn;
  scn.num_uavs = 1;
  scn.altitude = 100.0;
  scn.period = 100.0;
  scn.num_slots = 0;  // resolved after the period is known
  scn.max_speed = 50.0;
  scn.min_separation = 100.0;
  scn.max_power = 0.1;
  scn.noise_power = dbm_to_watts(-110.0);
  scn.ref_channel_gain = db_to_linear(-60.0);
  scn.discretization_threshold = 0.5;
  scn.convergence_threshold = 1e-4;
  scn.subslot_factor = 100;
  return scn;
}

double require_number(const json& doc, const std::string& key) {
  if (!doc.contains(key) || !doc[key].is_number()) {
    throw ParseError("scenario: field '" + key + "' must be a number");
  }
  return doc[key].get<double>();
}

}  // namespace

Points<double> generate_users(const GenerationSpec& spec) {
  if (spec.count < 1) throw ParseError("scenario: user_generation.count must be >= 1");
  if (!(spec.region[0] < spec.region[2]) || !(spec.region[1] < spec.region[3])) {
    throw ParseError("scenario: user_generation.region must be [xmin, ymin, xmax, ymax]");
  }
  std::mt19937_64 gen(spec.seed);
  std::uniform_real_distribution<double> ux(spec.region[0], spec.region[2]);
  std::uniform_real_distribution<double> uy(spec.region[1], spec.region[3]);
  Points<double> users(2, spec.count);
  for (int k = 0; k < spec.count; ++k) {
    users(0, k) = ux(gen);
    users(1, k) = uy(gen);
  }
  return users;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("scenario: invalid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw ParseError("scenario: top level must be an object");

  ScenarioFile file;
  file.scenario = default_scenario();
  auto& scn = file.scenario;

  const bool has_users = doc.contains("user_positions");
  const bool has_generation = doc.contains("user_generation");
  if (has_users == has_generation) {
    throw ParseError(
        "scenario: exactly one of 'user_positions' or 'user_generation' is required");
  }
  if (has_users) {
    const auto& users = doc["user_positions"];
    if (!users.is_array() || users.empty()) {
      throw ParseError("scenario: field 'user_positions' must be a non-empty array");
    }
    scn.user_positions.resize(2, static_cast<Eigen::Index>(users.size()));
    for (size_t k = 0; k < users.size(); ++k) {
      if (!users[k].is_array() || users[k].size() != 2 || !users[k][0].is_number() ||
          !users[k][1].is_number()) {
        throw ParseError("scenario: field 'user_positions' entries must be [x, y]");
      }
      scn.user_positions(0, static_cast<Eigen::Index>(k)) = users[k][0].get<double>();
      scn.user_positions(1, static_cast<Eigen::Index>(k)) = users[k][1].get<double>();
    }
  } else {
    const auto& gen = doc["user_generation"];
    GenerationSpec spec;
    spec.count = static_cast<int>(require_number(gen, "count"));
    if (gen.contains("region")) {
      const auto& region = gen["region"];
      if (!region.is_array() || region.size() != 4) {
        throw ParseError("scenario: user_generation.region must have 4 entries");
      }
      for (int i = 0; i < 4; ++i) spec.region[i] = region[i].get<double>();
    }
    if (gen.contains("seed")) spec.seed = gen["seed"].get<uint64_t>();
    file.generation = spec;
    scn.user_positions = generate_users(spec);
  }

  if (doc.contains("num_uavs")) scn.num_uavs = static_cast<int>(require_number(doc, "num_uavs"));
  if (doc.contains("altitude_m")) scn.altitude = require_number(doc, "altitude_m");
  if (doc.contains("period_s")) scn.period = require_number(doc, "period_s");
  if (doc.contains("max_speed_mps")) scn.max_speed = require_number(doc, "max_speed_mps");
  if (doc.contains("min_separation_m")) {
    scn.min_separation = require_number(doc, "min_separation_m");
  }
  if (doc.contains("max_power_w")) scn.max_power = require_number(doc, "max_power_w");
  if (doc.contains("noise_power_w") && doc.contains("noise_power_dbm")) {
    throw ParseError("scenario: give 'noise_power_w' or 'noise_power_dbm', not both");
  }
  if (doc.contains("noise_power_w")) scn.noise_power = require_number(doc, "noise_power_w");
  if (doc.contains("noise_power_dbm")) {
    scn.noise_power = dbm_to_watts(require_number(doc, "noise_power_dbm"));
  }
  if (doc.contains("ref_channel_gain") && doc.contains("ref_gain_db")) {
    throw ParseError("scenario: give 'ref_channel_gain' or 'ref_gain_db', not both");
  }
  if (doc.contains("ref_channel_gain")) {
    scn.ref_channel_gain = require_number(doc, "ref_channel_gain");
  }
  if (doc.contains("ref_gain_db")) {
    scn.ref_channel_gain = db_to_linear(require_number(doc, "ref_gain_db"));
  }
  if (doc.contains("discretization_threshold")) {
    scn.discretization_threshold = require_number(doc, "discretization_threshold");
  }
  if (doc.contains("convergence_threshold")) {
    scn.convergence_threshold = require_number(doc, "convergence_threshold");
  }
  if (doc.contains("subslot_factor")) {
    scn.subslot_factor = static_cast<int>(require_number(doc, "subslot_factor"));
  }
  if (doc.contains("num_slots")) {
    scn.num_slots = static_cast<int>(require_number(doc, "num_slots"));
  } else if (scn.max_speed > 0 && scn.period > 0 && scn.altitude > 0 &&
             scn.discretization_threshold > 0) {
    // Smallest slot count meeting the discretization accuracy.
    scn.num_slots = std::max(
        2, min_slots_for_accuracy(scn.max_speed, scn.period, scn.altitude,
                                  scn.discretization_threshold));
  } else {
    scn.num_slots = 2;  // let validate() name the offending field
  }

  scn.validate();
  return file;
}

void save_scenario(const std::filesystem::path& path, const ScenarioFile& file) {
  const auto& scn = file.scenario;
  json doc;
  if (file.generation) {
    doc["user_generation"] = {{"count", file.generation->count},
                              {"region", file.generation->region},
                              {"seed", file.generation->seed}};
  } else {
    json users = json::array();
    for (int k = 0; k < scn.num_users(); ++k) {
      users.push_back({scn.user_positions(0, k), scn.user_positions(1, k)});
    }
    doc["user_positions"] = users;
  }
  doc["num_uavs"] = scn.num_uavs;
  doc["altitude_m"] = scn.altitude;
  doc["period_s"] = scn.period;
  doc["num_slots"] = scn.num_slots;
  doc["max_speed_mps"] = scn.max_speed;
  doc["min_separation_m"] = scn.min_separation;
  doc["max_power_w"] = scn.max_power;
  doc["noise_power_w"] = scn.noise_power;
  doc["ref_channel_gain"] = scn.ref_channel_gain;
  doc["discretization_threshold"] = scn.discretization_threshold;
  doc["convergence_threshold"] = scn.convergence_threshold;
  doc["subslot_factor"] = scn.subslot_factor;

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ParseError("cannot write scenario file: " + path.string());
    out << doc.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace uavnet::io
