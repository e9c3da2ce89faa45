// Copyright 2026 The FairST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairst/error.hpp"
#include "fairst/ingest/grid.hpp"
#include "fairst/ingest/polygon.hpp"
#include "fairst/tensor/archive.hpp"

namespace fairst {

struct LatLonPolygon {
  std::vector<LatLon> outer;
  std::vector<std::vector<LatLon>> holes;
};

// A census-style areal unit: one or more polygon parts, a head count, and the
// advantaged fraction for every sensitive attribute.
struct DemographicUnit {
  std::vector<LatLonPolygon> parts;
  double population = 0.0;
  std::map<std::string, double> advantaged_fraction;
};

struct DemographicField {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> cell_population;    // allocated head count per cell
  std::vector<double> population_share;   // p_i, sums to 1
  std::map<std::string, std::vector<double>> advantaged;  // w_i^+ per attribute

  std::size_t cells() const { return rows * cols; }

  const std::vector<double>& attribute(const std::string& name) const {
    auto it = advantaged.find(name);
    require(it != advantaged.end(), ErrorKind::invalid_input,
            "unknown sensitive attribute '", name, "'");
    return it->second;
  }

  std::vector<std::string> attribute_names() const {
    std::vector<std::string> names;
    for (const auto& entry : advantaged) names.push_back(entry.first);
    return names;
  }
};

// Builds a field directly from per-cell shares and fractions. Shares are
// renormalized to sum to one.
inline DemographicField make_field(std::size_t rows, std::size_t cols,
                                   std::vector<double> population,
                                   std::map<std::string, std::vector<double>> advantaged) {
  require(population.size() == rows * cols, ErrorKind::invalid_input,
          "population has ", population.size(), " cells, grid has ", rows * cols);
  double total = 0.0;
  for (double p : population) {
    require(std::isfinite(p) && p >= 0.0, ErrorKind::invalid_input,
            "cell population must be finite and nonnegative");
    total += p;
  }
  require(total > 0.0, ErrorKind::invalid_input, "total population is zero");
  DemographicField field;
  field.rows = rows;
  field.cols = cols;
  field.population_share.resize(population.size());
  for (std::size_t i = 0; i < population.size(); ++i)
    field.population_share[i] = population[i] / total;
  field.cell_population = std::move(population);
  for (auto& [name, w] : advantaged) {
    require(w.size() == rows * cols, ErrorKind::invalid_input, "attribute '",
            name, "' has ", w.size(), " cells, grid has ", rows * cols);
    for (double v : w)
      require(v >= 0.0 && v <= 1.0, ErrorKind::invalid_input, "attribute '",
              name, "' fraction ", v, " outside [0, 1]");
  }
  field.advantaged = std::move(advantaged);
  return field;
}

// Area-weighted allocation of unit populations onto grid cells. A cell's
// advantaged fraction is the population-weighted mean over contributing units.
inline DemographicField allocate_demographics(std::span<const DemographicUnit> units,
                                              const GridSpec& grid) {
  const std::size_t n = grid.cell_count();
  std::vector<double> population(n, 0.0);
  std::map<std::string, std::vector<double>> advantaged_pop;
  if (!units.empty())
    for (const auto& entry : units.front().advantaged_fraction)
      advantaged_pop[entry.first].assign(n, 0.0);

  for (std::size_t u = 0; u < units.size(); ++u) {
    const DemographicUnit& unit = units[u];
    require(std::isfinite(unit.population) && unit.population >= 0.0,
            ErrorKind::invalid_input, "unit ", u, " has invalid population ",
            unit.population);
    require(unit.advantaged_fraction.size() == advantaged_pop.size(),
            ErrorKind::invalid_input, "unit ", u,
            " does not carry the same attributes as unit 0");
    for (const auto& [name, frac] : unit.advantaged_fraction) {
      require(advantaged_pop.count(name) > 0, ErrorKind::invalid_input, "unit ",
              u, " has unexpected attribute '", name, "'");
      require(frac >= 0.0 && frac <= 1.0, ErrorKind::invalid_input, "unit ", u,
              " attribute '", name, "' fraction ", frac, " outside [0, 1]");
    }
    require(!unit.parts.empty(), ErrorKind::invalid_input, "unit ", u,
            " has no polygon");
    std::vector<PlanePolygon> parts;
    double unit_area = 0.0;
    for (const LatLonPolygon& part : unit.parts) {
      parts.push_back(make_plane_polygon(grid, part.outer, part.holes));
      unit_area += parts.back().area();
    }
    for (const PlanePolygon& part : parts) {
      const double part_share = part.area() / unit_area;
      for (const CellFraction& cf : cell_fractions(grid, part)) {
        const double allocated = unit.population * part_share * cf.fraction;
        population[cf.cell] += allocated;
        for (const auto& [name, frac] : unit.advantaged_fraction)
          advantaged_pop[name][cf.cell] += allocated * frac;
      }
    }
  }

  std::map<std::string, std::vector<double>> advantaged;
  for (auto& [name, adv] : advantaged_pop) {
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (population[i] > 0.0) w[i] = std::clamp(adv[i] / population[i], 0.0, 1.0);
    advantaged[name] = std::move(w);
  }
  double total = 0.0;
  for (double p : population) total += p;
  require(total > 0.0, ErrorKind::invalid_input,
          "total allocated population is zero");
  return make_field(grid.rows, grid.cols, std::move(population), std::move(advantaged));
}

namespace detail {

inline std::vector<LatLon> parse_ring(const nlohmann::json& coords,
                                      const std::string& where) {
  require(coords.is_array(), ErrorKind::data, where, ": ring is not an array");
  std::vector<LatLon> ring;
  for (const auto& pos : coords) {
    require(pos.is_array() && pos.size() >= 2 && pos[0].is_number() &&
                pos[1].is_number(),
            ErrorKind::data, where, ": malformed position");
    ring.push_back({pos[1].get<double>(), pos[0].get<double>()});
  }
  return ring;
}

inline LatLonPolygon parse_polygon(const nlohmann::json& coords,
                                   const std::string& where) {
  require(coords.is_array() && !coords.empty(), ErrorKind::data, where,
          ": polygon has no rings");
  LatLonPolygon poly;
  poly.outer = parse_ring(coords[0], where);
  for (std::size_t i = 1; i < coords.size(); ++i)
    poly.holes.push_back(parse_ring(coords[i], where));
  return poly;
}

}  // namespace detail

inline constexpr const char* kAdvantagedSuffix = "_adv_frac";

// GeoJSON FeatureCollection of Polygon / MultiPolygon units carrying
// `population` and `<attr>_adv_frac` properties.
inline std::vector<DemographicUnit> parse_demographics_geojson(
    const std::string& text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::data, source, ": invalid JSON: ", e.what());
  }
  require(doc.is_object() && doc.value("type", "") == "FeatureCollection" &&
              doc.contains("features") && doc["features"].is_array(),
          ErrorKind::data, source, ": expected a GeoJSON FeatureCollection");
  std::vector<DemographicUnit> units;
  const std::string suffix = kAdvantagedSuffix;
  std::size_t index = 0;
  for (const auto& feature : doc["features"]) {
    const std::string where = source + ": feature " + std::to_string(index++);
    require(feature.is_object() && feature.contains("geometry") &&
                feature.contains("properties") && feature["properties"].is_object(),
            ErrorKind::data, where, ": missing geometry or properties");
    const auto& props = feature["properties"];
    require(props.contains("population") && props["population"].is_number(),
            ErrorKind::data, where, ": missing numeric 'population'");
    DemographicUnit unit;
    unit.population = props["population"].get<double>();
    for (const auto& [key, value] : props.items()) {
      if (key.size() > suffix.size() &&
          key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0) {
        require(value.is_number(), ErrorKind::data, where, ": '", key,
                "' is not numeric");
        unit.advantaged_fraction[key.substr(0, key.size() - suffix.size())] =
            value.get<double>();
      }
    }
    const auto& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    require(geom.contains("coordinates"), ErrorKind::data, where,
            ": geometry without coordinates");
    if (type == "Polygon") {
      unit.parts.push_back(detail::parse_polygon(geom["coordinates"], where));
    } else if (type == "MultiPolygon") {
      for (const auto& poly : geom["coordinates"])
        unit.parts.push_back(detail::parse_polygon(poly, where));
    } else {
      fail(ErrorKind::data, where, ": unsupported geometry type '", type, "'");
    }
    units.push_back(std::move(unit));
  }
  return units;
}

inline std::vector<DemographicUnit> read_demographics_geojson(
    const std::filesystem::path& path) {
  return parse_demographics_geojson(read_file(path), path.string());
}

inline nlohmann::json ring_to_json(std::span<const LatLon> ring) {
  nlohmann::json out = nlohmann::json::array();
  for (const LatLon& p : ring) out.push_back({p.lon, p.lat});
  if (!ring.empty()) out.push_back({ring.front().lon, ring.front().lat});
  return out;
}

inline std::string demographics_to_geojson(std::span<const DemographicUnit> units) {
  nlohmann::json features = nlohmann::json::array();
  for (const DemographicUnit& unit : units) {
    nlohmann::json props;
    props["population"] = unit.population;
    for (const auto& [name, frac] : unit.advantaged_fraction)
      props[name + kAdvantagedSuffix] = frac;
    nlohmann::json polys = nlohmann::json::array();
    for (const LatLonPolygon& part : unit.parts) {
      nlohmann::json rings = nlohmann::json::array();
      rings.push_back(ring_to_json(part.outer));
      for (const auto& h : part.holes) rings.push_back(ring_to_json(h));
      polys.push_back(std::move(rings));
    }
    nlohmann::json geom;
    if (polys.size() == 1) {
      geom = {{"type", "Polygon"}, {"coordinates", polys[0]}};
    } else {
      geom = {{"type", "MultiPolygon"}, {"coordinates", polys}};
    }
    features.push_back(
        {{"type", "Feature"}, {"properties", props}, {"geometry", geom}});
  }
  return nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}.dump();
}

}  // namespace fairst
