#pragma once

#include <string>

namespace flowprompt {

/// Round to `decimals` fractional digits, ties to even. decimals in [0, 12].
double round_half_even(double value, int decimals);

/// Fixed-point rendering with half-to-even rounding: always exactly
/// `decimals` fractional digits ("20000.0", "0.0474"); no digits and no
/// point when decimals == 0 ("147").
std::string format_fixed(double value, int decimals);

/// Shortest representation that round-trips to the same double ("0.15",
/// "1e-06"). Used wherever a double is written to a bundle file.
std::string format_shortest(double value);

} // namespace flowprompt
