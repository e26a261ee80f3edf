// Regenerates the bundled synthetic inputs under data/: a 6-bus and a
// 39-bus-style grid case plus a 1000-sample 2-D deviation history.
// Deterministic for a fixed seed; the repository ships the outputs.

#include <iostream>
#include <string>

#include "pcco/opf.hpp"
#include "pcco/synthetic.hpp"

using namespace pcco;

namespace {

// Nearly linear generation costs: the tiny quadratic terms keep the
// dispatch unique (and the solver strongly convex) while the stage
// objectives stay equal far inside the reported tolerances.
GridCase make_case6() {
  GridCase gc;
  gc.name = "synth6";
  gc.base_mva = 100.0;
  gc.reference_bus = 0;
  gc.demand = {0.0, 55.0, 20.0, 60.0, 25.0, 50.0};
  gc.branches = {
      {0, 1, 11.0, 74.0}, {1, 2, 9.0, 70.0},  {2, 3, 12.0, 80.0}, {3, 4, 10.0, 65.0},
      {4, 5, 8.5, 70.0},  {5, 0, 12.5, 86.0}, {1, 4, 7.5, 55.0},
  };
  gc.generators = {
      {0, 10.0, 160.0, 1.0e-4, 18.0, 110.0},
      {2, 5.0, 120.0, 1.5e-4, 24.0, 90.0},
      {4, 5.0, 110.0, 2.0e-4, 30.0, 80.0},
  };
  gc.renewables = {{3, 36.0}, {5, 24.0}};
  gc.validate();
  return gc;
}

GridCase make_case39() {
  GridCase gc;
  gc.name = "synth39";
  gc.base_mva = 100.0;
  gc.reference_bus = 0;
  Rng rng(39);
  for (int i = 0; i < 39; ++i)
    gc.demand.push_back(i == 0 ? 0.0 : 35.0 + 30.0 * rng.uniform01());
  for (int i = 0; i < 39; ++i) {
    GridBranch br;
    br.from = i;
    br.to = (i + 1) % 39;
    br.susceptance = 8.0 + 6.0 * rng.uniform01();
    br.limit = 150.0 + 120.0 * rng.uniform01();
    gc.branches.push_back(br);
  }
  for (int k = 0; k < 7; ++k) {  // chords: 39 + 7 = 46 branches
    GridBranch br;
    br.from = (5 * k + 2) % 39;
    br.to = (5 * k + 21) % 39;
    br.susceptance = 6.0 + 5.0 * rng.uniform01();
    br.limit = 160.0 + 100.0 * rng.uniform01();
    gc.branches.push_back(br);
  }
  for (int k = 0; k < 10; ++k) {
    GridGenerator g;
    g.bus = (4 * k + 1) % 39;
    g.p_min = 5.0;
    g.p_max = 220.0 + 80.0 * rng.uniform01();
    g.cost_c2 = 0.010 + 0.015 * rng.uniform01();
    g.cost_c1 = 16.0 + 12.0 * rng.uniform01();
    g.cost_c0 = 80.0 + 60.0 * rng.uniform01();
    gc.generators.push_back(g);
  }
  gc.renewables = {{8, 70.0}, {27, 55.0}};
  gc.validate();
  return gc;
}

DataSet make_history(std::size_t count, std::uint64_t seed) {
  std::vector<GaussianComponent> comps(2);
  comps[0].weight = 0.65;
  comps[0].mean = Eigen::Vector2d(0.0, 0.0);
  comps[0].sd = Eigen::Vector2d(2.6, 2.2);
  comps[1].weight = 0.35;
  comps[1].mean = Eigen::Vector2d(4.2, 3.2);
  comps[1].sd = Eigen::Vector2d(3.0, 2.6);
  return sample_gaussian_mixture(comps, count, seed);
}

}  // namespace

int main(int argc, char** argv) {
  std::string dir = "data";
  if (argc > 1) dir = argv[1];
  try {
    make_case6().save_json(dir + "/case6.json");
    make_case39().save_json(dir + "/case39.json");
    make_history(1000, 2024).save_csv(dir + "/wind6.csv");
    std::cout << "wrote " << dir << "/case6.json, case39.json, wind6.csv\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
