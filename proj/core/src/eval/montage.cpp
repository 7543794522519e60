#include "latalign/eval/montage.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "latalign/error.hpp"

namespace latalign {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Point at polar angle `polar` (from the vertex) and azimuth `az` (from the nose, toward the right).
Eigen::Vector3d sphere(double polar_deg, double az_deg) {
  const double p = polar_deg * kDeg, a = az_deg * kDeg;
  return {std::sin(p) * std::sin(a), std::sin(p) * std::cos(a), std::cos(p)};
}

Eigen::Vector3d slerp(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double t) {
  const double omega = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
  if (omega < 1e-12) return a;
  return (std::sin((1.0 - t) * omega) * a + std::sin(t * omega) * b) / std::sin(omega);
}

// Rows of the 10-10 system: name prefix, midline polar angle (negative = posterior),
// azimuth of the row's 7/8 electrode on the 10% ring.
struct Row {
  const char* prefix;
  double midline;
  double ring_az;
};

}  // namespace

const Electrode* Montage::find(std::string_view electrode) const {
  for (const auto& e : electrodes)
    if (e.name == electrode) return &e;
  return nullptr;
}

Montage standard_1010() {
  static const Row rows[] = {{"AF", 54, 36}, {"F", 36, 54},  {"FC", 18, 72}, {"C", 0, 90},
                             {"CP", -18, 108}, {"P", -36, 126}, {"PO", -54, 144}};
  Montage m;
  m.name = "standard_1010";
  auto add = [&m](const std::string& name, const Eigen::Vector3d& p) {
    m.electrodes.push_back({name, p.x(), p.y(), p.z()});
  };
  add("Fpz", sphere(72, 0));
  add("Fp1", sphere(72, -18));
  add("Fp2", sphere(72, 18));
  add("Oz", sphere(72, 180));
  add("O1", sphere(72, -162));
  add("O2", sphere(72, 162));
  add("Nz", sphere(90, 0));
  add("Iz", sphere(90, 180));
  add("I1", sphere(90, -162));
  add("I2", sphere(90, 162));
  for (const auto& r : rows) {
    const std::string prefix = r.prefix;
    const Eigen::Vector3d mid = r.midline >= 0 ? sphere(r.midline, 0) : sphere(-r.midline, 180);
    add(prefix + "z", mid);
    for (int side : {-1, 1}) {
      const Eigen::Vector3d end = sphere(72, side * r.ring_az);
      const int base = side < 0 ? 1 : 2;
      for (int step = 1; step <= 5; ++step) {
        const int number = base + 2 * (step - 1);
        std::string name = prefix + std::to_string(number);
        // Temporal row: 7/8 and 9/10 carry the "T" label on the central line.
        if (prefix == "C" && step >= 4) name = "T" + std::to_string(number);
        if (prefix == "FC" && step >= 4) name = "FT" + std::to_string(number);
        if (prefix == "CP" && step >= 4) name = "TP" + std::to_string(number);
        const Eigen::Vector3d p =
            step <= 4 ? slerp(mid, end, step / 4.0) : sphere(90, side * r.ring_az);
        add(name, p.normalized());
      }
    }
  }
  return m;
}

Montage load_montage(std::string_view name_or_path) {
  if (name_or_path == "standard_1010" || name_or_path == "standard_1020") {
    Montage m = standard_1010();
    m.name = std::string(name_or_path);
    return m;
  }
  const std::filesystem::path path{std::string(name_or_path)};
  if (!std::filesystem::is_regular_file(path))
    fail(ErrorCode::UnknownMontage, "unknown montage '" + std::string(name_or_path) +
                                        "' (expected standard_1010 or a name,x,y,z CSV file)");
  std::ifstream in(path);
  Montage m;
  m.name = path.filename().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string name, xs, ys, zs;
    if (!std::getline(ss, name, ',') || !std::getline(ss, xs, ',') || !std::getline(ss, ys, ',') ||
        !std::getline(ss, zs, ','))
      fail(ErrorCode::UnknownMontage, path.string() + ":" + std::to_string(lineno) + ": expected name,x,y,z");
    try {
      m.electrodes.push_back({name, std::stod(xs), std::stod(ys), std::stod(zs)});
    } catch (const std::exception&) {
      if (lineno == 1) continue;  // header row
      fail(ErrorCode::UnknownMontage, path.string() + ":" + std::to_string(lineno) + ": bad coordinate");
    }
  }
  require(!m.electrodes.empty(), ErrorCode::UnknownMontage, path.string() + " lists no electrodes");
  return m;
}

}  // namespace latalign
