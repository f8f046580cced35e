// Writes deterministic synthetic stand-in CSVs shaped like the three
// benchmark datasets (same column headers as the schemas in data/).

#include <CLI11.hpp>

#include <iostream>

#include "qcast/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthetic dataset generator"};
    std::string kind = "weather";
    std::string out = "synthetic.csv";
    std::size_t rows = 13000;
    std::uint64_t seed = 7;
    app.add_option("--kind", kind, "weather|air|wind")->capture_default_str();
    app.add_option("--out", out, "output CSV path")->capture_default_str();
    app.add_option("--rows", rows, "row count")->capture_default_str();
    app.add_option("--seed", seed, "generator seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        if (kind == "weather")
            qcast::write_synthetic_weather(out, rows, seed);
        else if (kind == "air")
            qcast::write_synthetic_air_quality(out, rows, seed);
        else if (kind == "wind")
            qcast::write_synthetic_wind(out, rows, seed);
        else {
            std::cerr << "unknown kind: " << kind << "\n";
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}
