// Fixed data sets shared by unit and acceptance tests.
#pragma once

#include <vector>

namespace fixture {

// An irregular 20-point sample.
inline const std::vector<double> kPearsonX = {3.1,  7.4,  1.2,  9.9,  4.4,  6.6, 2.05,
                                              8.8,  5.5,  0.3,  12.7, 11.1, 7.75, 3.33,
                                              6.02, 9.4,  1.01, 4.9,  10.5, 2.6};
inline const std::vector<double> kPearsonY = {14.2, 20.1, 9.7,  31.4, 10.0, 25.3, 12.8,
                                              22.2, 19.9, 8.1,  35.6, 30.2, 18.4, 17.7,
                                              21.0, 24.6, 7.3,  16.5, 33.3, 11.9};

}  // namespace fixture
