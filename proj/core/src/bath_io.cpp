#include "vbdecoh/bath_io.hpp"

#include <fstream>

#include "vbdecoh/errors.hpp"

namespace vbdecoh {

namespace {

nlohmann::json matrix_json(const Mat3& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int a = 0; a < 3; ++a) rows.push_back({m(a, 0), m(a, 1), m(a, 2)});
  return rows;
}

Mat3 matrix_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ValidationError("tensor must be a 3x3 array");
  Mat3 m;
  for (int a = 0; a < 3; ++a) {
    if (!j[a].is_array() || j[a].size() != 3) throw ValidationError("tensor must be a 3x3 array");
    for (int b = 0; b < 3; ++b) m(a, b) = j[a][b].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json bath_to_json(std::span<const BathSpin> bath) {
  nlohmann::json spins = nlohmann::json::array();
  for (const auto& s : bath) {
    spins.push_back({{"position_ang", {s.position.x(), s.position.y(), s.position.z()}},
                     {"species", s.species.label},
                     {"twice_spin", s.species.twice_spin},
                     {"g_N", s.species.g_N},
                     {"C_q_MHz", s.species.C_q},
                     {"A_MHz", matrix_json(s.A)},
                     {"Q_MHz", matrix_json(s.Q)}});
  }
  return {{"format", "vbdecoh-bath/1"}, {"spins", spins}};
}

std::vector<BathSpin> bath_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "vbdecoh-bath/1") throw ValidationError("unknown bath snapshot format");
  std::vector<BathSpin> bath;
  for (const auto& e : j.at("spins")) {
    BathSpin s;
    const auto& p = e.at("position_ang");
    s.position = Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    s.species.label = e.at("species").get<std::string>();
    s.species.twice_spin = e.at("twice_spin").get<int>();
    s.species.g_N = e.at("g_N").get<double>();
    s.species.C_q = e.at("C_q_MHz").get<double>();
    s.A = matrix_from(e.at("A_MHz"));
    s.Q = matrix_from(e.at("Q_MHz"));
    s.validate();
    bath.push_back(std::move(s));
  }
  return bath;
}

void save_bath(const std::filesystem::path& path, std::span<const BathSpin> bath) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << bath_to_json(bath).dump(1) << '\n';
}

std::vector<BathSpin> load_bath(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return bath_from_json(nlohmann::json::parse(in));
}

}  // namespace vbdecoh
