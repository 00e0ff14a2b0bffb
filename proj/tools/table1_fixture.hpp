#pragma once

#include <array>

namespace mel::fixture {

// Published comparison table for the folded node, n = 2k. Column 2 is the
// third derivative in the other normalization, column 3 its rescaling and
// column 4 the closed-form value; digits from `red_from` on (1-based
// significant digit, 0 if none) are the ones flagged as deviating.
struct Table1Row {
    unsigned n;
    const char* col2;
    const char* col3;
    const char* col4;
    unsigned red_from;
};

inline constexpr std::array<Table1Row, 10> table1{{
    {2, "-4.0837336724863e3", "360.9544714", "360.9544714", 0},
    {4, "-9.1263550336787e5", "57039.71895", "57039.71896", 10},
    {6, "-1.2403985652051e8", "6.329882421e6", "6.329882420e6", 10},
    {8, "-1.3867566218372e10", "6.128656321e8", "6.1286563218e8", 10},
    {10, "-1.3996176586682e12", "5.532474570e10", "5.532474568e10", 9},
    {12, "-1.3282386742790e14", "4.792868474e12", "4.792868474e12", 0},
    {14, "-1.2108610331032e16", "4.045202792e14", "4.045202792e14", 0},
    {16, "-1.0738223745005e18", "3.355694922e16", "3.355694920e16", 10},
    {18, "-9.3381989535112e19", "2.751293251e18", "2.751293251e18", 0},
    {20, "-8.0059501510523e21", "2.237731095e20", "2.237731095e20", 0},
}};

}  // namespace mel::fixture
