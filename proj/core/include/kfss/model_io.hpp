#pragma once

// Model interchange format ("kfss-model", version 1). A single JSON document:
//
//   {
//     "format": "kfss-model", "version": 1,
//     "n": 2, "num_sensors": 2,
//     "A": [a00, a01, a10, a11],          // row-major
//     "W": [w00, w01, w10, w11],          // row-major
//     "sensors": [ {"C": [[c00, c01]], "V": [[v00]]}, ... ]
//   }
//
// A dense-noise variant replaces "sensors" with a stacked "C" (list of rows),
// a dense "V" and "sensor_dims" giving each sensor's output count. V must be
// block diagonal over those dims, otherwise the document is rejected.
// Numbers are written with 17 significant digits so values round-trip.

#include <filesystem>
#include <string>
#include <string_view>

#include "kfss/system_model.hpp"

namespace kfss {

inline constexpr int kModelFormatVersion = 1;

std::string to_model_text(const SystemModel& model);
SystemModel parse_model_text(std::string_view text);

SystemModel read_model_file(const std::filesystem::path& path);
void write_model_file(const std::filesystem::path& path, const SystemModel& model);

}  // namespace kfss
