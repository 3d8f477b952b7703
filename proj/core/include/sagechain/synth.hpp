#pragma once

#include <cstdint>
#include <string>

#include "sagechain/schema.hpp"

namespace sagechain {

// Row count used when `synth` is not given one.
std::size_t default_synth_rows(DatasetId dataset);

// Seeded surrogate CSV with the dataset's schema columns (features, then
// target-only columns). Stand-in for the public files when they are absent:
// Smart Logistics rows follow Markov traffic regimes that drive waiting time,
// shipment status and delay; DataCo and Shipping rows are class-conditional.
std::string synth_csv(DatasetId dataset, std::size_t rows, std::uint64_t seed);

// Shipping-layout CSV whose shipment mode is linearly separable from the
// numeric features with a wide margin.
std::string separable_csv(std::size_t rows, std::uint64_t seed);

}  // namespace sagechain
