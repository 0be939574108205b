#include "magnopol/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <thread>

int main(int argc, char** argv) {
    CLI::App app{"magnopol: steady states, phase maps, sweeps and calibration fits for coupled photon-magnon modes"};
    app.set_version_flag("--version", MAGNOPOL_VERSION);
    app.require_subcommand(1);

    magnopol::cli::Options opt;
    std::string resolution;
    opt.threads = std::max(1u, std::thread::hardware_concurrency());

    const char* commands[][2] = {
        {"fixed-points", "list fixed points with eigenvalues and classification"},
        {"phase-diagram", "count stable/unstable fixed points over a grid"},
        {"sweep", "hysteretic detuning sweep with spectrogram"},
        {"fit-s11", "fit a reflection dip"},
        {"fit-kittel", "fit the linear field dependence of the magnon frequency"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "JSON config")->required();
        sub->add_option("--out", opt.out, "output directory")->capture_default_str();
        sub->add_option("--threads", opt.threads, "worker threads for grid scans")->check(CLI::PositiveNumber);
        sub->add_option("--resolution", resolution, "grid override NxM (phase-diagram)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : magnopol::cli::invalid_input;
    }

    if (!resolution.empty()) {
        try {
            opt.resolution = magnopol::cli::parse_resolution(resolution);
        } catch (const magnopol::config_error& e) {
            std::cerr << "invalid input: " << e.what() << "\n";
            return magnopol::cli::invalid_input;
        }
    }
    const std::string command = app.get_subcommands().front()->get_name();
    return magnopol::cli::run(command, opt, std::cout, std::cerr);
}
