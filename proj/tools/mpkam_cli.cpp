#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpkam/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian systems with multiplicative noise: simulation, OM actions, "
               "most probable paths, tube probabilities and KAM scans"};
  std::string config_file;
  std::string output_dir;
  app.add_option("config", config_file, "JSON run configuration")->required();
  app.add_option("-o,--output-dir", output_dir, "Override output_dir from the config");
  CLI11_PARSE(app, argc, argv);

  std::ifstream in(config_file);
  if (!in) {
    std::cerr << "error: cannot open " << config_file << '\n';
    return mpkam::cli::kValidation;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "error: " << config_file << ": " << (buf.str().empty() ? "config is empty" : e.what())
              << '\n';
    return mpkam::cli::kValidation;
  }
  if (!output_dir.empty() && config.is_object()) config["output_dir"] = output_dir;
  const auto outcome = mpkam::cli::run_json(config, std::cerr);
  if (outcome.exit_code == mpkam::cli::kSuccess) {
    for (const auto& a : outcome.artifacts) std::cout << a << '\n';
    std::cout << "manifest.json\n";
  }
  return outcome.exit_code;
}
