"""Compiled amplitude kernels.

All kernels work in place on a contiguous complex128 array and release the
GIL, so callers may split the pair-index range across threads.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True, fastmath=False)


@njit(**_JIT)
def parity(x):
    x ^= x >> 32
    x ^= x >> 16
    x ^= x >> 8
    x ^= x >> 4
    x ^= x >> 2
    x ^= x >> 1
    return x & 1


@njit(**_JIT)
def _insert_zero(x, b):
    low = x & ((1 << b) - 1)
    return ((x >> b) << (b + 1)) | low


@njit(**_JIT)
def apply_1q_range(psi, m00, m01, m10, m11, k, lo, hi):
    """Update pairs ``lo <= j < hi`` of the 2^(n-1) pairs on bit ``k``."""
    stride = 1 << k
    for j in range(lo, hi):
        i0 = _insert_zero(j, k)
        i1 = i0 | stride
        a = psi[i0]
        b = psi[i1]
        psi[i0] = m00 * a + m01 * b
        psi[i1] = m10 * a + m11 * b


@njit(**_JIT)
def apply_controlled_range(psi, m00, m01, m10, m11, c, t, lo, hi):
    """Update pairs ``lo <= j < hi`` of the 2^(n-2) pairs with bit c set."""
    b_lo = min(c, t)
    b_hi = max(c, t)
    cbit = 1 << c
    tbit = 1 << t
    for j in range(lo, hi):
        i0 = _insert_zero(_insert_zero(j, b_lo), b_hi) | cbit
        i1 = i0 | tbit
        a = psi[i0]
        b = psi[i1]
        psi[i0] = m00 * a + m01 * b
        psi[i1] = m10 * a + m11 * b


@njit(**_JIT)
def apply_ops(psi, mats, targets, controls):
    """Apply a gate sequence; ``controls[g] < 0`` marks a single-qubit gate."""
    size = psi.shape[0]
    for g in range(mats.shape[0]):
        t = targets[g]
        c = controls[g]
        if c < 0:
            apply_1q_range(psi, mats[g, 0, 0], mats[g, 0, 1], mats[g, 1, 0], mats[g, 1, 1],
                           t, 0, size >> 1)
        else:
            apply_controlled_range(psi, mats[g, 0, 0], mats[g, 0, 1], mats[g, 1, 0],
                                   mats[g, 1, 1], c, t, 0, size >> 2)


@njit(**_JIT)
def apply_ops_blocked(psi, mats, targets, controls, block_bits, lo_block, hi_block):
    """Apply a fused gate group block by block (all qubits < block_bits)."""
    bsize = 1 << block_bits
    for blk in range(lo_block, hi_block):
        start = blk * bsize
        apply_ops(psi[start:start + bsize], mats, targets, controls)


@njit(**_JIT)
def pauli_expectation(psi, x, z, offset):
    """sum_i conj(psi[i]) (-1)^{|(g ^ x) & z|} psi[i ^ x] with g = offset | i.

    Returns the complex sum for the operator X^x Z^z; the caller applies the
    i^{|x & z|} factor that turns it into a Pauli string.
    """
    acc = 0.0 + 0.0j
    for i in range(psi.shape[0]):
        j = i ^ x
        v = np.conj(psi[i]) * psi[j]
        if parity((offset | j) & z):
            acc -= v
        else:
            acc += v
    return acc


@njit(**_JIT)
def z_expectations(psi, n):
    """<Z_q> for every qubit q in a single pass."""
    out = np.zeros(n)
    for i in range(psi.shape[0]):
        p = psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
        for q in range(n):
            if (i >> q) & 1:
                out[q] -= p
            else:
                out[q] += p
    return out


@njit(**_JIT)
def norm_squared(psi):
    acc = 0.0
    for i in range(psi.shape[0]):
        acc += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
    return acc


@njit(**_JIT)
def pauli_expectations(psi, xs, zs, phases, offset):
    """Real parts of <P_s> for many strings; ``phases[s]`` is i^{|x & z|}."""
    out = np.empty(xs.shape[0])
    for s in range(xs.shape[0]):
        out[s] = (phases[s] * pauli_expectation(psi, xs[s], zs[s], offset)).real
    return out


@njit(**_JIT)
def run_trajectory(psi, mats, targets, controls, ref, xs, zs, phases):
    """Reset to basis state ``ref``, apply the op sequence, return <P_s>."""
    psi[:] = 0.0
    psi[ref] = 1.0
    apply_ops(psi, mats, targets, controls)
    return pauli_expectations(psi, xs, zs, phases, 0)
