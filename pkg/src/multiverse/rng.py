"""Seedable, platform-independent random stream.

xoshiro256++ seeded through splitmix64, as published by Blackman & Vigna:

* the 64-bit seed is expanded into the four state words by four successive
  splitmix64 outputs;
* uniform doubles are ``(x >> 11) * 2**-53`` in ``[0, 1)``;
* normals come from Box-Muller on consecutive output pairs ``(x1, x2)``:
  ``u1 = 1 - uniform(x1)`` (in ``(0, 1]``), ``u2 = uniform(x2)``,
  ``z0 = r cos(2 pi u2)``, ``z1 = r sin(2 pi u2)``, ``r = sqrt(-2 ln u1)``;
  both values are used, in that order;
* bounded integers use the multiply-shift map ``(x * n) >> 64``.

The integer stream is bit-identical everywhere.  Normals additionally depend
on the platform ``log``/``cos``/``sin``, which agree to within an ulp or so.
"""
import numpy as np

from . import _backend

_MASK = (1 << 64) - 1


def splitmix64(x):
    """One splitmix64 step: returns ``(new_state, output)``."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return x, z ^ (z >> 31)


def derive_seed(seed, *tags):
    """Deterministically mix ``seed`` with string/int tags into a new 64-bit seed."""
    x = int(seed) & _MASK
    for tag in tags:
        if isinstance(tag, str):
            for ch in tag.encode("utf-8"):
                x, _ = splitmix64(x ^ ch)
        else:
            x ^= int(tag) & _MASK
        x, out = splitmix64(x)
        x = out
    return x


class Rng:
    def __init__(self, seed, *, kernels=None):
        self.seed = int(seed) & _MASK
        self._k = kernels or _backend.kernels
        x = self.seed
        words = []
        for _ in range(4):
            x, out = splitmix64(x)
            words.append(out)
        self.state = np.array(words, dtype=np.uint64)

    def spawn(self, *tags):
        """Independent child stream keyed by ``tags``; does not advance this one."""
        return Rng(derive_seed(self.seed, *tags), kernels=self._k)

    def next_u64(self):
        return int(self.raw(1)[0])

    def raw(self, n):
        return self._k.xoshiro_fill(self.state, int(n))

    def uniform(self, size=None):
        n = 1 if size is None else int(np.prod(size))
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        return float(u[0]) if size is None else u.reshape(size)

    def normal(self, size=None, scale=1.0):
        n = 1 if size is None else int(np.prod(size))
        pairs = (n + 1) // 2
        x = self.raw(2 * pairs)
        u = (x >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        u1 = 1.0 - u[0::2]
        u2 = u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        ang = 2.0 * np.pi * u2
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(ang)
        z[1::2] = r * np.sin(ang)
        z = scale * z[:n]
        return float(z[0]) if size is None else z.reshape(size)

    def below(self, n):
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * int(n)) >> 64

    def permutation(self, n):
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = list(range(n))
        if n < 2:
            return np.array(perm, dtype=np.int64)
        draws = self.raw(n - 1)
        for k, i in enumerate(range(n - 1, 0, -1)):
            j = (int(draws[k]) * (i + 1)) >> 64
            perm[i], perm[j] = perm[j], perm[i]
        return np.array(perm, dtype=np.int64)
