// Two unit disks in the field H = x: the numerical potential difference against the
// closed form H(p2) - H(p1) and its small-gap asymptotic, for a shrinking gap.

#include <cstdio>

#include "gapfield/gapfield.hpp"

int main() {
  using namespace gapfield;
  std::printf("%10s %18s %18s %18s %14s\n", "eps", "u|D2 - u|D1", "H(p2) - H(p1)", "asymptotic", "max|grad u|");
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
    Configuration cfg = build_two_disks(1.0, 1.0, eps);
    auto u = solve_u(cfg);
    const auto& d1 = std::get<Disk>(cfg.bodies[0].parts()[0]);
    const auto& d2 = std::get<Disk>(cfg.bodies[1].parts()[0]);
    double closed = two_disk_potential_difference(d1, d2, cfg.background);
    double asym = two_disk_difference_asymptotic(1.0, 1.0, eps, cfg.background);
    double grad = max_gap_gradient(u, gap(cfg, 0, 1)).value;
    std::printf("%10.0e %18.12f %18.12f %18.12f %14.4f\n", eps, u.constants[1] - u.constants[0], closed, asym, grad);
  }
}
