#include "qcast/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "qcast/rng.hpp"

namespace qcast {

namespace {

constexpr double kTwoPi = 6.283185307179586;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("synthetic: cannot write " + path);
    out.precision(8);
    return out;
}

// zero-mean AR(1) stream
struct Ar1 {
    double rho, scale, state = 0.0;
    Rng* rng;
    double next() {
        state = rho * state + scale * (rng->uniform() * 2.0 - 1.0);
        return state;
    }
};

}  // namespace

void write_synthetic_weather(const std::string& path, std::size_t rows,
                             std::uint64_t seed) {
    Rng rng(seed);
    auto out = open_out(path);
    out << "Formatted Date,Temperature (C),Humidity,Wind Speed (km/h),"
           "Pressure (millibars)\n";
    Ar1 nt{0.95, 0.8, 0.0, &rng}, nh{0.9, 0.02, 0.0, &rng},
        nw{0.85, 2.0, 0.0, &rng}, np{0.97, 1.2, 0.0, &rng};
    for (std::size_t t = 0; t < rows; ++t) {
        const double day = kTwoPi * double(t) / 24.0;
        const double year = kTwoPi * double(t) / 8760.0;
        const double temp =
            12.0 + 8.0 * std::sin(day - 1.0) + 7.0 * std::sin(year) + nt.next();
        double hum = 0.72 - 0.012 * (temp - 12.0) + nh.next();
        hum = std::min(0.99, std::max(0.05, hum));
        const double wind =
            std::abs(9.0 + 4.0 * std::sin(day + 0.5) + nw.next());
        const double pressure =
            1015.0 + 6.0 * std::sin(kTwoPi * double(t) / 720.0) + np.next();
        out << "ts" << t << "," << temp << "," << hum << "," << wind << ","
            << pressure << "\n";
    }
}

void write_synthetic_air_quality(const std::string& path, std::size_t rows,
                                 std::uint64_t seed) {
    Rng rng(seed);
    auto out = open_out(path);
    out << "date,pm25,pm10,o3,no2\n";
    Ar1 base{0.9, 6.0, 0.0, &rng}, n1{0.8, 4.0, 0.0, &rng},
        n2{0.7, 3.0, 0.0, &rng}, n3{0.7, 3.0, 0.0, &rng};
    std::size_t gap_left = 0;
    for (std::size_t t = 0; t < rows; ++t) {
        const double season = 20.0 * std::sin(kTwoPi * double(t) / 365.0);
        const double level = 45.0 + season + base.next();
        const double pm25 = std::max(2.0, level + n1.next() * 0.3);
        const double pm10 = std::max(4.0, 1.6 * level + n1.next());
        const double o3 = std::max(1.0, 30.0 - 0.2 * season + n2.next());
        const double no2 = std::max(1.0, 18.0 + 0.15 * level + n3.next());
        if (gap_left == 0 && rng.uniform() < 0.01)
            gap_left = 1 + rng.below(6);  // missing runs of 1-6 days
        out << "d" << t << ",";
        if (gap_left > 0) {
            --gap_left;
            out << ",";  // missing pm25
        } else {
            out << pm25 << ",";
        }
        out << pm10 << "," << o3 << "," << no2 << "\n";
    }
}

void write_synthetic_wind(const std::string& path, std::size_t rows,
                          std::uint64_t seed) {
    Rng rng(seed);
    auto out = open_out(path);
    out << "time,wind_speed_100m\n";
    Ar1 n{0.92, 1.5, 0.0, &rng};
    for (std::size_t t = 0; t < rows; ++t) {
        const double day = kTwoPi * double(t) / 24.0;
        const double year = kTwoPi * double(t) / 8760.0;
        const double w = std::abs(14.0 + 5.0 * std::sin(day + 2.0) +
                                  4.0 * std::sin(year) + n.next());
        out << "t" << t << "," << w << "\n";
    }
}

}  // namespace qcast
