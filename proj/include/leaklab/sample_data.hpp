#pragma once

#include <cstdint>
#include <string>

namespace leaklab {

// Writes a deterministic synthetic corpus in the exact UCI Adult file layout
// (comma-space fields, "?" markers, banner line and trailing-period labels in
// the test file) under `dir` as adult.data / adult.test.
//
// The joint distribution is calibrated to the published statistics of the
// real dataset: domain sizes (29170/3391 train, 14662/1619 test by
// native-country), income rates and the income-sex / income-race phi
// correlations (0.2146 / 0.0837 on the U.S. subset), attribute marginals and
// missing-value rates. It is a stand-in corpus for demos and tests, not the
// UCI data itself; point the tools at the canonical files to work with the
// real dataset.
struct SampleCounts {
  long train_rows = 0;
  long test_rows = 0;
};

SampleCounts write_sample_adult_files(const std::string& dir,
                                      std::uint64_t seed = 902653589ULL);

}  // namespace leaklab
