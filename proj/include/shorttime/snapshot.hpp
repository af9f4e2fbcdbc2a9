#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shorttime/errors.hpp"
#include "shorttime/field.hpp"

namespace shorttime {

// Self-describing field record. Coefficients are listed re, im interleaved in
// row-major ascending mode order (k from -M/2 to M/2-1 on each axis), which
// is independent of the in-memory transform order.
//
//   {"format": "fourier-field", "version": 1, "dim": 1, "modes_per_axis": 16,
//    "period_scale": [1.0], "real_symmetric": true, "mean_zero": true,
//    "coeffs": [re, im, re, im, ...]}
[[nodiscard]] inline nlohmann::json field_to_json(const FourierField& f) {
  const TorusLattice& lat = f.lattice();
  nlohmann::json j;
  j["format"] = "fourier-field";
  j["version"] = 1;
  j["dim"] = lat.dim;
  j["modes_per_axis"] = lat.modes;
  j["period_scale"] = lat.dim == 1 ? nlohmann::json::array({lat.scale[0]})
                                   : nlohmann::json::array({lat.scale[0], lat.scale[1]});
  j["real_symmetric"] = f.real_symmetric();
  j["mean_zero"] = f.mean_zero();
  auto coeffs = nlohmann::json::array();
  const long h = lat.nyquist();
  if (lat.dim == 1) {
    for (long k = -h; k < h; ++k) {
      const cplx c = f.at({k, 0});
      coeffs.push_back(c.real());
      coeffs.push_back(c.imag());
    }
  } else {
    for (long k0 = -h; k0 < h; ++k0) {
      for (long k1 = -h; k1 < h; ++k1) {
        const cplx c = f.at({k0, k1});
        coeffs.push_back(c.real());
        coeffs.push_back(c.imag());
      }
    }
  }
  j["coeffs"] = std::move(coeffs);
  return j;
}

[[nodiscard]] inline FourierField field_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "fourier-field") {
      throw LatticeError("not a fourier-field record");
    }
    const int dim = j.at("dim").get<int>();
    const auto modes = j.at("modes_per_axis").get<std::size_t>();
    const auto& ps = j.at("period_scale");
    std::array<double, 2> scale{ps.at(0).get<double>(), 1.0};
    if (dim == 2) scale[1] = ps.at(1).get<double>();
    const TorusLattice lat = make_lattice(dim, modes, scale);
    const auto& raw = j.at("coeffs");
    if (raw.size() != 2 * lat.size()) throw LatticeError("coefficient list has the wrong length");
    std::vector<cplx> c(lat.size());
    const long h = lat.nyquist();
    std::size_t pos = 0;
    auto take = [&](const Mode& k) {
      c[lat.flat_index(k)] = cplx{raw[pos].get<double>(), raw[pos + 1].get<double>()};
      pos += 2;
    };
    if (dim == 1) {
      for (long k = -h; k < h; ++k) take({k, 0});
    } else {
      for (long k0 = -h; k0 < h; ++k0) {
        for (long k1 = -h; k1 < h; ++k1) take({k0, k1});
      }
    }
    return FourierField(lat, std::move(c), j.at("real_symmetric").get<bool>(),
                        j.at("mean_zero").get<bool>());
  } catch (const nlohmann::json::exception& e) {
    throw LatticeError(std::string("malformed field record: ") + e.what());
  }
}

inline void write_field(const std::filesystem::path& path, const FourierField& f) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << field_to_json(f).dump() << '\n';
}

[[nodiscard]] inline FourierField read_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw LatticeError("malformed field file " + path.string() + ": " + e.what());
  }
  return field_from_json(j);
}

}  // namespace shorttime
