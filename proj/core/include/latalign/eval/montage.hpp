#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace latalign {

/// Position on the unit head sphere; +x right, +y nose, +z vertex.
struct Electrode {
  std::string name;
  double x = 0.0, y = 0.0, z = 0.0;
};

struct Montage {
  std::string name;
  std::vector<Electrode> electrodes;

  const Electrode* find(std::string_view electrode) const;
};

/// Built-in "standard_1010" spherical layout, or a CSV file with rows name,x,y,z.
/// Throws UnknownMontage for anything else.
Montage load_montage(std::string_view name_or_path);
Montage standard_1010();

}  // namespace latalign
