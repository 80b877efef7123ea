"""Hot loops over the 2**n amplitude / energy arrays.

Every kernel exists twice: an ``@njit`` loop version and a vectorised numpy
version.  The numba path is used when numba imports and ``QEL_DISABLE_NUMBA``
is unset (or "0").  Both paths are always importable through :data:`NUMBA`
and :data:`NUMPY` so the benchmark and the tests can compare them.

Bit convention: bit ``i`` of a basis index (least significant first) is qubit
``i``; spin ``s_i = 1 - 2 * bit_i``.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False

NUMBA_DISABLED = os.environ.get("QEL_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")


def njit(func):
    if not HAS_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


# ---------------------------------------------------------------- numpy path


def _mixer_np(amps, cs, sn):
    """exp(+i t X_q) on every qubit q, with cos/sin of the per-qubit angle."""
    for q in range(cs.shape[0]):
        v = amps.reshape(-1, 2, 1 << q)
        a = v[:, 0, :].copy()
        b = v[:, 1, :]
        v[:, 0, :] = cs[q] * a + 1j * sn[q] * b
        v[:, 1, :] = cs[q] * b + 1j * sn[q] * a


def _phase_np(amps, phases):
    amps *= np.exp(-1j * phases)


def _fwht_np(a):
    """Unnormalised Walsh-Hadamard transform, in place on a real array."""
    n = a.shape[0].bit_length() - 1
    for q in range(n):
        v = a.reshape(-1, 2, 1 << q)
        x = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 1, :] = x - v[:, 1, :]


def _mixer_grad_np(lam, phi, n):
    out = np.empty(n)
    for q in range(n):
        flipped = phi.reshape(-1, 2, 1 << q)[:, ::-1, :].reshape(-1)
        out[q] = 2.0 * np.vdot(lam, flipped).imag
    return out


def _spins_block(start, stop, n):
    z = np.arange(start, stop, dtype=np.int64)
    bits = (z[:, None] >> np.arange(n)) & 1
    return 1.0 - 2.0 * bits


def _ising_min_np(n, h, J, offset):
    """Exhaustive minimum of offset + h.s + sum_{i<j} J_ij s_i s_j.

    Evaluated directly on spin blocks; independent of the transform path.
    ``J`` is symmetric with zero diagonal.
    """
    best, arg = np.inf, 0
    dim = 1 << n
    block = 1 << min(n, 16)
    for start in range(0, dim, block):
        s = _spins_block(start, min(dim, start + block), n)
        e = offset + s @ h + 0.5 * np.einsum("zi,zi->z", s @ J, s)
        k = int(np.argmin(e))
        if e[k] < best:
            best, arg = float(e[k]), start + k
    return arg, best


# ---------------------------------------------------------------- numba path


@njit
def _mixer_nb(amps, cs, sn):
    dim = amps.shape[0]
    for q in range(cs.shape[0]):
        c = cs[q]
        s = 1j * sn[q]
        bit = 1 << q
        for base in range(0, dim, 2 * bit):
            for z in range(base, base + bit):
                a = amps[z]
                b = amps[z + bit]
                amps[z] = c * a + s * b
                amps[z + bit] = c * b + s * a


@njit
def _phase_nb(amps, phases):
    for z in range(amps.shape[0]):
        amps[z] *= np.cos(phases[z]) - 1j * np.sin(phases[z])


@njit
def _fwht_nb(a):
    dim = a.shape[0]
    bit = 1
    while bit < dim:
        for base in range(0, dim, 2 * bit):
            for z in range(base, base + bit):
                x = a[z]
                y = a[z + bit]
                a[z] = x + y
                a[z + bit] = x - y
        bit *= 2


@njit
def _mixer_grad_nb(lam, phi, n):
    out = np.empty(n)
    dim = phi.shape[0]
    for q in range(n):
        bit = 1 << q
        acc = 0.0
        for z in range(dim):
            w = phi[z ^ bit]
            l = lam[z]
            acc += l.real * w.imag - l.imag * w.real
        out[q] = 2.0 * acc
    return out


@njit
def _ising_min_nb(n, h, J, offset):
    """Gray-code walk: each step flips one spin and updates local fields in O(n)."""
    s = np.ones(n)
    field = h.copy()
    for i in range(n):
        for j in range(n):
            field[i] += J[i, j]
    e = offset
    for i in range(n):
        e += h[i]
        for j in range(i + 1, n):
            e += J[i, j]
    best = e
    arg = 0
    gray = 0
    for k in range(1, 1 << n):
        flip = 0
        while not (k >> flip) & 1:
            flip += 1
        e -= 2.0 * s[flip] * field[flip]
        s[flip] = -s[flip]
        for j in range(n):
            field[j] += 2.0 * s[flip] * J[j, flip]
        gray ^= 1 << flip
        if e < best:
            best = e
            arg = gray
    return arg, best


NUMPY = SimpleNamespace(
    name="numpy",
    mixer=_mixer_np,
    phase=_phase_np,
    fwht=_fwht_np,
    mixer_grad=_mixer_grad_np,
    ising_min=_ising_min_np,
)

NUMBA = SimpleNamespace(
    name="numba",
    mixer=_mixer_nb,
    phase=_phase_nb,
    fwht=_fwht_nb,
    mixer_grad=_mixer_grad_nb,
    ising_min=_ising_min_nb,
) if HAS_NUMBA else None

ACTIVE = NUMBA if (HAS_NUMBA and not NUMBA_DISABLED) else NUMPY

mixer = ACTIVE.mixer
phase = ACTIVE.phase
fwht = ACTIVE.fwht
mixer_grad = ACTIVE.mixer_grad
ising_min = ACTIVE.ising_min
