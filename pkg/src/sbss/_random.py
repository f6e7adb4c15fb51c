"""Frozen, platform-independent pseudo random number generation.

The splitters must produce the same folds for the same seed on every
machine and every Python/NumPy release, so they do not use ``random`` or
``numpy.random``. The generator is xoshiro256** with its 256-bit state
filled from a splitmix64 stream seeded by the user seed.

Consumption order is part of the contract: callers draw through
:meth:`Xoshiro256.shuffle` only, in the order documented by each splitter.
"""

_MASK = (1 << 64) - 1


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK


class SplitMix64:
    """splitmix64, used only to expand a 64-bit seed into generator state."""

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)


class Xoshiro256:
    """xoshiro256** 1.0.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed. Values outside ``[0, 2**64)`` raise.
    """

    def __init__(self, seed):
        seed = int(seed)
        if not 0 <= seed <= _MASK:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        sm = SplitMix64(seed)
        self.s = [sm.next() for _ in range(4)]

    def next(self):
        s = self.s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def below(self, bound):
        """Uniform integer in ``[0, bound)`` by rejection (no modulo bias)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) - bound) % bound
        while True:
            r = self.next()
            if r >= threshold:
                return r % bound

    def shuffle(self, items):
        """Fisher-Yates shuffle of a list, in place, high index first."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items
