#include "carleman/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Carleman weight construction and weighted resolvent estimates"};
    std::string config;
    std::vector<std::string> overrides;
    app.add_option("config", config, "JSON run configuration (schema_version 1)")->required();
    app.add_option("--set", overrides, "Override a config entry, e.g. --set sweep.h_geometric.count=4")
        ->type_name("KEY=VALUE");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : carleman::kExitError;
    }
    return carleman::run_main(config, overrides, std::cout, std::cerr);
}
