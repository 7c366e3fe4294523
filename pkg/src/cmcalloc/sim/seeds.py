"""Trial seed derivation.

``trial_seed(master, sweep_index, trial_index)`` chains the splitmix64
finalizer: ``s = mix(mix(mix(master) ^ sweep_index) ^ trial_index)``.
Any single (sweep value, trial) can be reproduced without running the rest.
"""

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(master: int, sweep_index: int, trial_index: int) -> int:
    s = splitmix64(int(master) & MASK64)
    s = splitmix64(s ^ (int(sweep_index) & MASK64))
    return splitmix64(s ^ (int(trial_index) & MASK64))
