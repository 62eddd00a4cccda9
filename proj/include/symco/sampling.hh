/*
 * sampling.hh
 *
 * Seeded helpers for the falsification-style checks; all randomness in the
 * toolkit flows through one std::mt19937_64 whose seed is recorded.
 */

#ifndef SYMCO_SAMPLING_HH_
#define SYMCO_SAMPLING_HH_

#include <random>

#include "symco/box.hh"

namespace symco {

using Rng = std::mt19937_64;

/* uniform over the box union, volume-weighted across boxes */
Vec sample_box(const BoxList& boxes, Rng& rng);

}  // namespace symco

#endif /* SYMCO_SAMPLING_HH_ */
