"""Deterministic 64-bit random number generation.

All randomness in the package flows through one documented scheme so that a
(master seed, stream id) pair fully determines every draw:

* per-stream seeds come from a single splitmix64 output step applied to
  ``master + (stream_id + 1) * GOLDEN`` (mod 2^64),
* each stream is a xoshiro256** generator whose 4-word state is expanded
  from its stream seed with four successive splitmix64 steps.

Draw primitives are documented precisely because consumers promise a fixed
draw order (see the tree construction and Monte Carlo modules).
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns ``(new_state, output)``."""
    state = (state + GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def stream_seed(master_seed: int, stream_id: int) -> int:
    """Derive the 64-bit seed of stream ``stream_id`` from the master seed."""
    if stream_id < 0:
        raise ValueError("stream_id must be non-negative")
    state = (master_seed + (stream_id + 1) * GOLDEN) & MASK64
    _, out = splitmix64_next(state)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """xoshiro256** generator with splitmix64 state expansion.

    ``uniform`` returns a double in [0, 1) built from the top 53 bits;
    ``randint(n)`` is ``floor(uniform() * n)``; ``categorical(p)`` walks the
    cumulative sums of ``p`` with one ``uniform`` draw. These definitions are
    part of the reproducibility contract.
    """

    __slots__ = ("_s",)

    def __init__(self, seed: int):
        state = seed & MASK64
        s = []
        for _ in range(4):
            state, word = splitmix64_next(state)
            s.append(word)
        if not any(s):  # all-zero state is invalid for xoshiro
            s[0] = GOLDEN
        self._s = s

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 1.1102230246251565e-16  # 2^-53

    def randint(self, n: int) -> int:
        """Uniform integer in ``{0, ..., n-1}``."""
        if n <= 0:
            raise ValueError("n must be positive")
        return int(self.uniform() * n)

    def categorical(self, probs) -> int:
        """Index drawn according to the probability vector ``probs``."""
        u = self.uniform()
        acc = 0.0
        last = 0
        for idx, p in enumerate(probs):
            acc += p
            last = idx
            if u < acc:
                return idx
        return last
