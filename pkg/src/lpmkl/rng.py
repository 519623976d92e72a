"""Counter-based random number generation for reproducible experiments.

The generator is splitmix64: output ``i`` of a stream with seed ``s`` is
``mix64(s + (i+1) * GAMMA)`` where ``mix64`` is the finalizer below and
``GAMMA = 0x9E3779B97F4A7C15``.  Because each output is a pure function of
(seed, counter), any position of the stream can be reproduced exactly from
the seed alone, in any language.

Gaussian variates use the Marsaglia polar method with a fixed consumption
order: uniforms are taken in consecutive pairs ``(u1, u2)``, a pair is
accepted when ``0 < (2*u1-1)^2 + (2*u2-1)^2 < 1``, and each accepted pair
yields two normals consumed first/second.  When a request ends mid-pair the
unused second normal is buffered and consumed by the next request on the
same stream.
"""

from __future__ import annotations

import numpy as np

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1

# factor mapping the top 53 bits of a 64-bit word to [0, 1)
_U53 = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Child seed for substream ``index`` of a master seed.

    Defined as output ``index`` of the master stream; the finalizer places
    child streams at scrambled positions of the +GAMMA orbit, so overlap
    with the parent stream is negligible for any realistic draw count.
    """
    if index < 0:
        raise ValueError("substream index must be nonnegative")
    return mix64((seed + (index + 1) * _GAMMA) & _MASK64)


class CounterRng:
    """Sequential view of a splitmix64 stream with polar Gaussian draws."""

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & _MASK64)
        self._pos = 0  # number of 64-bit outputs consumed so far
        self._spare: float | None = None  # buffered second polar normal

    def _raw_at(self, start: int, count: int) -> np.ndarray:
        """Outputs ``start .. start+count-1`` of the stream (no state change)."""
        idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        z = self._seed + idx * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def uniforms(self, count: int) -> np.ndarray:
        """Next ``count`` doubles uniform on [0, 1)."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        z = self._raw_at(self._pos, count)
        self._pos += count
        return (z >> np.uint64(11)).astype(np.float64) * _U53

    def normals(self, count: int) -> np.ndarray:
        """Next ``count`` standard normal variates (polar method)."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        out = np.empty(count, dtype=np.float64)
        have = 0
        if self._spare is not None and count > 0:
            out[0] = self._spare
            self._spare = None
            have = 1
        while have < count:
            need = count - have
            # acceptance rate is pi/4 per pair, two normals per accepted pair
            n_pairs = max(32, (need * 3) // 4 + 8)
            z = self._raw_at(self._pos, 2 * n_pairs)
            u = (z >> np.uint64(11)).astype(np.float64) * _U53
            v1 = 2.0 * u[0::2] - 1.0
            v2 = 2.0 * u[1::2] - 1.0
            s = v1 * v1 + v2 * v2
            ok = (s > 0.0) & (s < 1.0)
            yielded = np.cumsum(np.where(ok, 2, 0))
            if yielded[-1] < need:
                # consume the whole block and keep filling
                self._pos += 2 * n_pairs
                scale = np.sqrt(-2.0 * np.log(s[ok]) / s[ok])
                pairs = np.column_stack((v1[ok] * scale, v2[ok] * scale))
                got = pairs.size
                out[have:have + got] = pairs.ravel()
                have += got
                continue
            # first pair index at which the request is satisfied
            last = int(np.searchsorted(yielded, need, side="left"))
            self._pos += 2 * (last + 1)
            sel = ok[: last + 1]
            scale = np.sqrt(-2.0 * np.log(s[: last + 1][sel]) / s[: last + 1][sel])
            pairs = np.column_stack(
                (v1[: last + 1][sel] * scale, v2[: last + 1][sel] * scale)
            )
            flat = pairs.ravel()
            if flat.size == need + 1:
                self._spare = float(flat[-1])
                flat = flat[:-1]
            out[have:] = flat
            have = count
        return out

    @property
    def position(self) -> int:
        return self._pos
