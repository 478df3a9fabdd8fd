# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled bit kernels for propagating a symplectic Pauli string.

Every function updates ``x`` and ``z`` in place and returns the increment
of the phase exponent ``k`` (mod 4) of ``i**k * prod X**x Z**z``.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline int _czbar(unsigned char[::1] x, unsigned char[::1] z) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t a
    cdef long acc = 0
    if n == 0:
        return 0
    for a in range(n - 1):
        # bond (a, a+1): Z_a ^= X_{a+1}, Z_{a+1} ^= X_a, sign from X_a X_{a+1}
        z[a] ^= x[a + 1]
        z[a + 1] ^= x[a]
        acc += x[a] & x[a + 1]
    return <int>((2 * acc) & 3)


cdef inline int _hbar(unsigned char[::1] x, unsigned char[::1] z) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t a
    cdef long acc = 0
    cdef unsigned char t
    for a in range(n):
        t = x[a]
        acc += t & z[a]
        x[a] = z[a]
        z[a] = t
    return <int>((2 * acc) & 3)


def czbar_inplace(unsigned char[::1] x, unsigned char[::1] z):
    return _czbar(x, z)


def hbar_inplace(unsigned char[::1] x, unsigned char[::1] z):
    return _hbar(x, z)


cdef extern from *:
    int popcount64 "__builtin_popcountll"(unsigned long long) nogil


cdef void _pack(unsigned char[::1] src, unsigned long long[::1] dst) noexcept nogil:
    cdef Py_ssize_t a, n = src.shape[0]
    cdef Py_ssize_t w
    for w in range(dst.shape[0]):
        dst[w] = 0
    for a in range(n):
        if src[a]:
            dst[a >> 6] |= (<unsigned long long>1) << (a & 63)


cdef void _unpack(unsigned long long[::1] src, unsigned char[::1] dst) noexcept nogil:
    cdef Py_ssize_t a, n = dst.shape[0]
    for a in range(n):
        dst[a] = (src[a >> 6] >> (a & 63)) & 1


cdef int _packed_step(unsigned long long[::1] x, unsigned long long[::1] z,
                      unsigned long long last_mask) noexcept nogil:
    """One CZBar then HBar on bit-packed strings (site a is bit a & 63 of word a >> 6)."""
    cdef Py_ssize_t w, nw = x.shape[0]
    cdef unsigned long long up, down, xw, t
    cdef unsigned long long prev = 0
    cdef long acc = 0
    for w in range(nw):
        xw = x[w]
        # up: bit a holds x[a + 1]; down: bit a holds x[a - 1]
        up = xw >> 1
        if w + 1 < nw:
            up |= x[w + 1] << 63
        # x[w - 1] is already overwritten, so use the saved original word
        down = (xw << 1) | (prev >> 63)
        prev = xw
        acc += popcount64(xw & up)
        t = z[w] ^ up ^ down
        if w == nw - 1:
            t &= last_mask
        # HBar: swap the letters, sign from the Y positions
        acc += popcount64(xw & t)
        z[w] = xw
        x[w] = t
    return <int>((2 * acc) & 3)


def steps_inplace(unsigned char[::1] x, unsigned char[::1] z, long count):
    """Apply ``count`` steps of CZBar followed by HBar.

    The strings are bit-packed into 64-bit words for the duration of the
    call, so one step costs about ``n / 64`` word operations.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef long i
    cdef int k = 0
    if n == 0 or count <= 0:
        return 0
    nw = (n + 63) // 64
    xp_arr = np.zeros(nw, dtype=np.uint64)
    zp_arr = np.zeros(nw, dtype=np.uint64)
    cdef unsigned long long[::1] xp = xp_arr
    cdef unsigned long long[::1] zp = zp_arr
    cdef unsigned long long last_mask
    if n % 64 == 0:
        last_mask = ~(<unsigned long long>0)
    else:
        last_mask = ((<unsigned long long>1) << (n % 64)) - 1
    with nogil:
        _pack(x, xp)
        _pack(z, zp)
        for i in range(count):
            k = (k + _packed_step(xp, zp, last_mask)) & 3
        _unpack(xp, x)
        _unpack(zp, z)
    return k
