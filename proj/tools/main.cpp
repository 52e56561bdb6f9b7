#include "commands.hpp"

#include "simgrasp/core.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Similarity-matching grasp planning from single-view point clouds"};
    int exit_code = 0;
    simgrasp::cli::setup(app, &exit_code);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const simgrasp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
