#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rgam {

using Rng = std::mt19937_64;

/// Child seed for a sub-stream, derived by splitmix64 mixing of the master
/// seed with each key in order. Stream b of a replicate loop uses
/// derive_seed(master, {b}), so earlier streams never change when the loop grows.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys);

} // namespace rgam
