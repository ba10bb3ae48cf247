"""Counter-based uniform random streams keyed by ``(seed, stream_id)``.

The generator is SplitMix64: a 64-bit counter advanced by the golden-ratio
increment, pushed through an avalanche finalizer.  Stream ``k`` of master
seed ``s`` starts from ``mix64(mix64(s) + GAMMA * k)``, so every
``(seed, stream_id)`` pair pins the entire draw sequence, independent of
platform and of how many streams run in parallel.

This module is the reference implementation (plain Python integers, masked
to 64 bits).  The numba kernel backend re-implements the identical
arithmetic on ``uint64`` machine words; ``tests/test_backends.py`` asserts
the two produce bit-identical streams.

Uniform draws map a 64-bit word ``z`` to ``((z >> 11) + 1) * 2**-53``,
which lies in ``(0, 1]``:  zero is excluded by construction so that
``-log(u)`` is always finite.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """Avalanche finalizer: bijective mixing of a 64-bit word."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MULT1) & _MASK
    z = ((z ^ (z >> 27)) * _MULT2) & _MASK
    return z ^ (z >> 31)


def stream_state(seed: int, stream_id: int) -> int:
    """Initial counter of stream ``stream_id`` under master ``seed``."""
    return mix64((mix64(seed & _MASK) + _GAMMA * (stream_id & _MASK)) & _MASK)


def next_uint64(state: int) -> tuple[int, int]:
    """Advance the counter one draw; return ``(new_state, word)``."""
    state = (state + _GAMMA) & _MASK
    return state, mix64(state)


def next_uniform(state: int) -> tuple[int, float]:
    """Advance one draw; return ``(new_state, u)`` with ``u`` in (0, 1]."""
    state, z = next_uint64(state)
    return state, ((z >> 11) + 1) * _INV53


class RngStream:
    """Deterministic uniform stream identified by ``(seed, stream_id)``.

    The same pair always reproduces the same sequence; distinct stream ids
    give statistically independent sequences.  Each ``uniform()`` call
    consumes exactly one 64-bit draw.
    """

    __slots__ = ("seed", "stream_id", "_state")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = seed & _MASK
        self.stream_id = stream_id & _MASK
        self._state = stream_state(self.seed, self.stream_id)

    def uint64(self) -> int:
        self._state, z = next_uint64(self._state)
        return z

    def uniform(self) -> float:
        """One uniform draw in (0, 1]."""
        self._state, u = next_uniform(self._state)
        return u

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
