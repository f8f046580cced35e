#pragma once

#include <cstdint>
#include <string>

namespace qcast {

// Deterministic stand-in series with the shape of the real benchmark CSVs
// (same column headers as the documented schemas), for smoke runs and
// offline testing. Hourly weather: four correlated variables with diurnal
// and seasonal structure plus AR(1) noise.
void write_synthetic_weather(const std::string& path, std::size_t rows,
                             std::uint64_t seed);

// Daily air quality: PM10/O3/NO2 features, PM2.5 target, with injected
// missing runs to exercise gap filling.
void write_synthetic_air_quality(const std::string& path, std::size_t rows,
                                 std::uint64_t seed);

// Hourly wind speed at 100 m, single column, no gaps.
void write_synthetic_wind(const std::string& path, std::size_t rows,
                          std::uint64_t seed);

}  // namespace qcast
