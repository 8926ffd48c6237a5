"""Deterministic seed derivation.

Child seeds come from the splitmix64 finalizer applied to
``seed + (index + 1) * 0x9E3779B97F4A7C15`` modulo 2**64, so every trial and
every random component gets an independent, reproducible stream.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix(seed: int, index: int) -> int:
    """Child seed number ``index`` of ``seed`` (both taken modulo 2**64)."""
    return splitmix64((int(seed) + (int(index) + 1) * GOLDEN) & MASK64)
