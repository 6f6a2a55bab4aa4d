// Writes the seeded synthetic dataset used for smoke runs and acceptance.
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "oobnet/error.hpp"
#include "oobnet/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic out-of-body dataset", "oobnet-synth"};
  oobnet::synthetic::SyntheticConfig config;
  std::string out;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--seed", config.seed, "Generator seed")->capture_default_str();
  app.add_option("--train", config.train_videos, "Training videos")->capture_default_str();
  app.add_option("--validation", config.validation_videos, "Validation videos")
      ->capture_default_str();
  app.add_option("--test", config.test_videos, "Test videos")->capture_default_str();
  app.add_option("--min-frames", config.min_frames, "Shortest video")->capture_default_str();
  app.add_option("--max-frames", config.max_frames, "Longest video")->capture_default_str();
  app.add_option("--frame-size", config.frame_size, "Frame width and height")
      ->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    oobnet::synthetic::write_dataset(config, out);
  } catch (const oobnet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.category() == oobnet::ErrorCategory::kUsage ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}
