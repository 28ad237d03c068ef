#include "kfss/model_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace kfss {

using nlohmann::json;

namespace {

json flat(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

json rows(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

[[noreturn]] void parse_error(const std::string& msg) {
  throw Error(ErrorCode::kParse, "model file: " + msg);
}

Matrix from_flat(const json& j, Eigen::Index r, Eigen::Index c, const char* name) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(r * c)) {
    parse_error(std::string(name) + " must be a row-major array of " +
                std::to_string(r * c) + " numbers");
  }
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index k = 0; k < c; ++k) {
      const json& v = j[static_cast<std::size_t>(i * c + k)];
      if (!v.is_number()) parse_error(std::string(name) + " has a non-numeric entry");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

Matrix from_rows(const json& j, const char* name) {
  if (!j.is_array() || j.empty()) parse_error(std::string(name) + " must be a list of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      parse_error(std::string(name) + " rows must have equal length");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) parse_error(std::string(name) + " has a non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

std::vector<Sensor> sensors_from_dense(const json& doc, Eigen::Index n) {
  const Matrix c = from_rows(doc.at("C"), "C");
  const Matrix v = from_rows(doc.at("V"), "V");
  if (c.cols() != n) parse_error("C must have n columns");
  if (v.rows() != c.rows() || v.cols() != c.rows()) parse_error("V must match rows of C");
  const auto dims = doc.at("sensor_dims").get<std::vector<int>>();
  Eigen::Index total = 0;
  for (int d : dims) {
    if (d <= 0) parse_error("sensor_dims entries must be positive");
    total += d;
  }
  if (total != c.rows()) parse_error("sensor_dims must sum to the rows of C");

  std::vector<Sensor> sensors;
  Eigen::Index offset = 0;
  for (int d : dims) {
    // Noise across sensors must be uncorrelated: everything outside the
    // diagonal blocks has to vanish.
    for (Eigen::Index i = offset; i < offset + d; ++i) {
      for (Eigen::Index k = 0; k < v.cols(); ++k) {
        if ((k < offset || k >= offset + d) && v(i, k) != 0.0) {
          throw Error(ErrorCode::kCorrelatedNoise,
                      "model file: V is not block diagonal over sensor_dims");
        }
      }
    }
    sensors.push_back({c.middleRows(offset, d), v.block(offset, offset, d, d)});
    offset += d;
  }
  return sensors;
}

}  // namespace

std::string to_model_text(const SystemModel& model) {
  json doc;
  doc["format"] = "kfss-model";
  doc["version"] = kModelFormatVersion;
  doc["n"] = model.state_dim();
  doc["num_sensors"] = model.sensor_count();
  doc["A"] = flat(model.a());
  doc["W"] = flat(model.w());
  json sensors = json::array();
  for (const Sensor& s : model.sensors()) {
    sensors.push_back({{"C", rows(s.c)}, {"V", rows(s.v)}});
  }
  doc["sensors"] = std::move(sensors);
  return doc.dump(2) + "\n";
}

SystemModel parse_model_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    parse_error(e.what());
  }
  try {
    if (doc.value("format", std::string()) != "kfss-model") {
      parse_error("missing or unknown \"format\" (expected \"kfss-model\")");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      parse_error("unsupported version " + std::to_string(version));
    }
    const int n = doc.at("n").get<int>();
    if (n <= 0) parse_error("n must be positive");
    Matrix a = from_flat(doc.at("A"), n, n, "A");
    Matrix w = from_flat(doc.at("W"), n, n, "W");

    std::vector<Sensor> sensors;
    if (doc.contains("sensors")) {
      for (const json& s : doc.at("sensors")) {
        sensors.push_back({from_rows(s.at("C"), "C_i"), from_rows(s.at("V"), "V_i")});
      }
    } else {
      sensors = sensors_from_dense(doc, n);
    }
    if (doc.contains("num_sensors") &&
        doc["num_sensors"].get<std::size_t>() != sensors.size()) {
      parse_error("num_sensors does not match the sensor list");
    }
    return build_model(std::move(a), std::move(w), std::move(sensors));
  } catch (const json::exception& e) {
    parse_error(e.what());
  }
}

SystemModel read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) parse_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_text(buf.str());
}

void write_model_file(const std::filesystem::path& path, const SystemModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kParse, "cannot write " + path.string());
  out << to_model_text(model);
}

}  // namespace kfss
