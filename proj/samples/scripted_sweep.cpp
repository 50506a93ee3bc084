// Cost sweep with scripted agents: helping curves for a flat and a
// thresholded helper, neutral curves for two foragers, and the verdict.
//
//   sample_scripted_sweep [episodes] [out_dir]

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "daycare/daycare.hpp"

using namespace daycare;

int main(int argc, char** argv) {
  const int episodes = argc > 1 ? std::atoi(argv[1]) : 10;
  const std::filesystem::path out = argc > 2 ? argv[2] : "scripted_sweep";
  std::filesystem::create_directories(out);

  SweepConfig sweep;
  sweep.episodes = episodes;
  sweep.seed = 1;

  const auto help_a = evaluate(scripted_source("always-helper", "short-forager"), sweep);
  const auto help_b = evaluate(scripted_source("threshold-helper:10", "short-forager"), sweep);
  const auto neutral = evaluate_neutral(scripted_source("cost-threshold-forager:10", "short-forager"), sweep);

  std::cout << "size  always  threshold  far_patch\n";
  for (std::size_t i = 0; i < help_a.rows.size(); ++i)
    std::cout << help_a.rows[i].size << "  " << help_a.rows[i].mean << "  " << help_b.rows[i].mean << "  "
              << neutral.rows[i].mean << "\n";

  write_report(out / "always.csv", help_a);
  write_report(out / "threshold.csv", help_b);
  write_report(out / "neutral.csv", neutral);
  std::ofstream(out / "helping.svg") << render_svg({{"always-helper", &help_a}, {"threshold-helper:10", &help_b}},
                                                   "scripted helping");

  std::cout << compare_moral(help_a, neutral, help_b, neutral).to_text();
  return 0;
}
