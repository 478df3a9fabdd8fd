"""Pure numpy versions of the kernels in ``_kernels.pyx``.

Same contract: update ``x`` and ``z`` (uint8 arrays) in place and return
the phase-exponent increment mod 4.
"""
import numpy as np


def czbar_inplace(x: np.ndarray, z: np.ndarray) -> int:
    if x.shape[0] < 2:
        return 0
    acc = int(np.count_nonzero(x[:-1] & x[1:]))
    z[:-1] ^= x[1:]
    z[1:] ^= x[:-1]
    return (2 * acc) % 4


def hbar_inplace(x: np.ndarray, z: np.ndarray) -> int:
    acc = int(np.count_nonzero(x & z))
    t = x.copy()
    x[:] = z
    z[:] = t
    return (2 * acc) % 4


def steps_inplace(x: np.ndarray, z: np.ndarray, count: int) -> int:
    k = 0
    for _ in range(int(count)):
        k += czbar_inplace(x, z) + hbar_inplace(x, z)
    return k % 4
