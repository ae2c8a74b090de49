#pragma once

// Batch runner: subcommands weyl, fourier-cert, proof-chain, martingale,
// time-change, equivariance, controls. Exit codes: 0 ok, 1 hard invariant
// failure (or soft failure under --strict), 2 configuration error,
// 3 resource / precision / numerical error.

#include <iosfwd>
#include <string>
#include <vector>

#include "hostlab/measure_kit.hpp"

namespace hostlab::cli {

// Presets: cantor3, uniformA (A = base), markov2, bernoulli:p0,p1,...,
// markov:A:row-major entries, ifs:A:d1,d2,...[:w1,w2,...], or a JSON object.
MeasureGen parse_generator(const std::string& spec);

// args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hostlab::cli
