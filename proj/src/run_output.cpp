// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uavnet/io.hpp"

namespace uavnet::io {

using nlohmann::json;

namespace {

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ParseError("cannot write file: " + path.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != expected_header) {
    throw ParseError("file " + path.string() + " has unexpected header '" + line + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

void write_run_output(const std::filesystem::path& dir, const RunOutput& output) {
  std::filesystem::create_directories(dir);

  json summary;
  summary["scheme"] = output.scheme;
  if (output.seed) {
    summary["seed"] = *output.seed;
  } else {
    summary["seed"] = nullptr;
  }
  summary["eta"] = output.eta;
  summary["eta_relaxed"] = output.eta_relaxed;
  summary["per_user_rates"] = output.per_user_rates;
  summary["iterations"] = output.iterations;
  summary["converged"] = output.converged;
  summary["trajectory_warnings"] = output.trajectory_warnings;
  summary["power_warnings"] = output.power_warnings;
  summary["period_s"] = output.period;
  summary["num_users"] = output.num_users;
  summary["num_uavs"] = output.num_uavs;
  summary["num_slots"] = output.num_slots;
  summary["subslot_factor"] = output.subslot_factor;
  atomic_write(dir / "summary.json", summary.dump(2) + "\n");

  const double dt = output.period / output.num_slots;
  {
    std::ostringstream os;
    os << "uav,slot,time_s,x_m,y_m,speed_mps\n";
    const int num_n = output.trajectory.num_slots();
    for (int m = 0; m < output.trajectory.num_uavs(); ++m) {
      for (int n = 0; n < num_n; ++n) {
        // Hop speed toward the next waypoint; the last slot repeats the
        // wrap-around hop of the first.
        const int nxt = n + 1 < num_n ? n + 1 : 1;
        const double speed =
            (output.trajectory.waypoint(m, nxt) - output.trajectory.waypoint(m, n)).norm() / dt;
        os << m << ',' << n << ',' << full(n * dt) << ',' << full(output.trajectory.x(m, n))
           << ',' << full(output.trajectory.y(m, n)) << ',' << full(speed) << "\n";
      }
    }
    atomic_write(dir / "trajectory.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "uav,slot,power_w\n";
    for (int m = 0; m < output.power.num_uavs(); ++m) {
      for (int n = 0; n < output.power.num_slots(); ++n) {
        os << m << ',' << n << ',' << full(output.power.levels(m, n)) << "\n";
      }
    }
    atomic_write(dir / "power.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "user,uav,subslot\n";
    for (int l = 0; l < output.binary_schedule.num_slots(); ++l) {
      for (int k = 0; k < output.binary_schedule.num_users(); ++k) {
        for (int m = 0; m < output.binary_schedule.num_uavs(); ++m) {
          if (output.binary_schedule.weights[l](k, m) > 0.5) {
            os << k << ',' << m << ',' << l << "\n";
          }
        }
      }
    }
    atomic_write(dir / "schedule.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "iteration,eta\n";
    for (size_t i = 0; i < output.trace.size(); ++i) {
      os << i << ',' << full(output.trace[i]) << "\n";
    }
    atomic_write(dir / "trace.csv", os.str());
  }
}

RunOutput load_run_output(const std::filesystem::path& dir) {
  RunOutput out;
  {
    std::ifstream in(dir / "summary.json");
    if (!in) throw ParseError("cannot open " + (dir / "summary.json").string());
    json summary;
    try {
      summary = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError("summary.json: invalid JSON: " + std::string(e.what()));
    }
    out.scheme = summary.at("scheme").get<std::string>();
    if (!summary.at("seed").is_null()) out.seed = summary.at("seed").get<uint64_t>();
    out.eta = summary.at("eta").get<double>();
    out.eta_relaxed = summary.at("eta_relaxed").get<double>();
    out.per_user_rates = summary.at("per_user_rates").get<std::vector<double>>();
    out.iterations = summary.at("iterations").get<int>();
    out.converged = summary.at("converged").get<bool>();
    out.trajectory_warnings = summary.at("trajectory_warnings").get<int>();
    out.power_warnings = summary.at("power_warnings").get<int>();
    out.period = summary.at("period_s").get<double>();
    out.num_users = summary.at("num_users").get<int>();
    out.num_uavs = summary.at("num_uavs").get<int>();
    out.num_slots = summary.at("num_slots").get<int>();
    out.subslot_factor = summary.at("subslot_factor").get<int>();
  }

  out.trajectory = Trajectory<double>(out.num_uavs, out.num_slots);
  for (const auto& row : read_csv(dir / "trajectory.csv", "uav,slot,time_s,x_m,y_m,speed_mps")) {
    if (row.size() != 6) throw ParseError("trajectory.csv: malformed row");
    const int m = std::stoi(row[0]);
    const int n = std::stoi(row[1]);
    if (m < 0 || m >= out.num_uavs || n < 0 || n >= out.num_slots) {
      throw ParseError("trajectory.csv: index out of range");
    }
    out.trajectory.x(m, n) = std::stod(row[3]);
    out.trajectory.y(m, n) = std::stod(row[4]);
  }

  out.power = PowerProfile<double>(MatrixXd::Zero(out.num_uavs, out.num_slots));
  for (const auto& row : read_csv(dir / "power.csv", "uav,slot,power_w")) {
    if (row.size() != 3) throw ParseError("power.csv: malformed row");
    const int m = std::stoi(row[0]);
    const int n = std::stoi(row[1]);
    if (m < 0 || m >= out.num_uavs || n < 0 || n >= out.num_slots) {
      throw ParseError("power.csv: index out of range");
    }
    out.power.levels(m, n) = std::stod(row[2]);
  }

  const int num_sub = out.num_slots * out.subslot_factor;
  out.binary_schedule =
      Schedule<double>(out.num_users, out.num_uavs, num_sub, ScheduleMode::binary);
  for (const auto& row : read_csv(dir / "schedule.csv", "user,uav,subslot")) {
    if (row.size() != 3) throw ParseError("schedule.csv: malformed row");
    const int k = std::stoi(row[0]);
    const int m = std::stoi(row[1]);
    const int l = std::stoi(row[2]);
    if (k < 0 || k >= out.num_users || m < 0 || m >= out.num_uavs || l < 0 || l >= num_sub) {
      throw ParseError("schedule.csv: index out of range");
    }
    out.binary_schedule.weights[l](k, m) = 1.0;
  }

  for (const auto& row : read_csv(dir / "trace.csv", "iteration,eta")) {
    if (row.size() != 2) throw ParseError("trace.csv: malformed row");
    out.trace.push_back(std::stod(row[1]));
  }
  return out;
}

}  // namespace uavnet::io
