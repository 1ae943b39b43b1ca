"""Deterministic per-trial seed derivation.

Trial t of a batch with master seed m uses

    seed_t = splitmix64(splitmix64(m) + t)

where splitmix64 is the public-domain 64-bit finalizer (Steele, Lea &
Flood).  The derivation is pure integer arithmetic, so identical
(master_seed, t) pairs give identical trial seeds on every platform and
library version; the per-trial generator is then PCG64 seeded with that
value.
"""

_MASK = (1 << 64) - 1


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4B7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial: int) -> int:
    """Seed for one trial; independent streams across the batch."""
    return splitmix64((splitmix64(master_seed & _MASK) + trial) & _MASK)
