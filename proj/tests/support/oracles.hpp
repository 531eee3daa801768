#pragma once
// Independent slow-path oracles the tests compare against. Everything here is
// deliberately naive: direct summation, rasterized geometry, full-table scans.

#include <cstdint>
#include <vector>

#include "ergolab/adversary.hpp"
#include "ergolab/cone.hpp"
#include "ergolab/systems.hpp"

namespace oracle {

// average of vals over orbit positions start+v+1 .. start+v+L on a cycle
double cyclic_window_mean(const std::vector<double>& vals, std::int64_t start,
                          std::int64_t v, std::int64_t L);

// C(lambda) by rasterizing the union of cross-sections with a fixed step
double raster_cross_section(const std::vector<ergolab::Cone>& cones, double lambda,
                            double step);

// all maximal windows by the quadratic definition: average > eta, length >=
// ell_min, and every strict superwindow has a strictly smaller mean; full
// superwindow-max table instead of the production rolling rows
std::vector<ergolab::BadWindow> brute_bad_windows(const std::vector<double>& values,
                                                  double eta, std::int64_t ell_min);

// first k >= 1 with backward mean below half, direct backward sums; 0 when
// none up to cap
std::int64_t brute_backward_stop(const std::vector<double>& values, std::int64_t x,
                                 double half, std::int64_t cap);

}  // namespace oracle
