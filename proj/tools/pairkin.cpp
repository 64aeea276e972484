#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "pairkin/pairkin.hpp"

namespace {

// Turns leftover "--key value" and "--key=value" arguments into overrides.
std::vector<std::pair<std::string, std::string>> collect_overrides(
    const std::vector<std::string>& extras) {
    std::vector<std::pair<std::string, std::string>> out;
    for (std::size_t k = 0; k < extras.size(); ++k) {
        const std::string& a = extras[k];
        if (a.rfind("--", 0) != 0) throw pairkin::Error("unexpected argument '" + a + "'");
        const std::string body = a.substr(2);
        const auto eq = body.find('=');
        if (eq != std::string::npos) {
            out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
        } else {
            if (k + 1 >= extras.size()) throw pairkin::Error("missing value for --" + body);
            out.emplace_back(body, extras[++k]);
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kinetic models of binary alignment collisions with duration"};
    std::string mode;
    std::string config_path;
    app.add_option("mode", mode, "moments, particle, grid, instantaneous, sweep or equilibrium")
        ->required();
    app.add_option("--config", config_path, "flat key = value configuration file");
    app.allow_extras();
    CLI11_PARSE(app, argc, argv);

    try {
        std::string text;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw pairkin::Error("cannot read config file '" + config_path + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            text = ss.str();
        }
        auto overrides = collect_overrides(app.remaining());
        overrides.insert(overrides.begin(), {"mode", mode});
        const auto cfg = pairkin::parse_config(text, overrides);
        const auto out = pairkin::execute(cfg);
        std::cout << out.summary.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
