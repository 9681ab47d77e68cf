"""Counting and enumerating values that match a fixed-bits pattern."""

from __future__ import annotations

from typing import Iterator


def _count_below(n: int, mask: int, bits: int) -> int:
    """Number of v in [0, n) with v & mask == bits."""
    if n <= 0:
        return 0
    top = max(n.bit_length(), mask.bit_length())
    if bits >> top:
        return 0
    total = 0
    # walk n from its top bit; wherever n has a 1, count values that copy the
    # prefix above, put 0 here, and range freely over the bits below
    for i in range(top - 1, -1, -1):
        bit = 1 << i
        if n & bit:
            prefix = (n >> (i + 1)) << (i + 1)
            high = ~(bit - 1)
            if (prefix & mask & high) == (bits & high) and not (mask & bit and bits & bit):
                free_below = (bit - 1) & ~mask
                total += 1 << bin(free_below).count("1")
    return total


def count_fixed_bits(lo: int, hi: int, mask: int, bits: int) -> int:
    """Exact count of v in [lo, hi] with ``v & mask == bits``."""
    if bits & ~mask:
        raise ValueError("bits must be a subset of mask")
    if lo > hi:
        return 0
    if mask == 0:
        return hi - lo + 1
    return _count_below(hi + 1, mask, bits) - _count_below(lo, mask, bits)


def _deposit(k: int, free: int) -> int:
    """Scatter the bits of k into the set positions of ``free`` (low to high)."""
    out = 0
    pos = 0
    while k:
        while not (free >> pos) & 1:
            pos += 1
        if k & 1:
            out |= 1 << pos
        k >>= 1
        pos += 1
    return out


def fixed_bits_runs(lo: int, hi: int, mask: int, bits: int) -> Iterator[tuple[int, int]]:
    """Maximal runs of v in [lo, hi] with ``v & mask == bits``, ascending."""
    if bits & ~mask:
        raise ValueError("bits must be a subset of mask")
    if lo > hi:
        return
    if mask == 0:
        yield lo, hi
        return
    low = (mask & -mask).bit_length() - 1
    block = 1 << low
    pmask, pbits = mask >> low, bits >> low
    # prefixes p = v >> low; bit 0 of pmask is set, so valid prefixes are never
    # adjacent and every block is a maximal run
    nbits = max((hi >> low).bit_length(), pmask.bit_length()) + 1
    free = ((1 << nbits) - 1) & ~pmask
    first, last = lo >> low, hi >> low
    rank = count_fixed_bits(0, first - 1, pmask, pbits) if first else 0
    while True:
        p = _deposit(rank, free) | pbits
        if p > last:
            return
        start, end = max(p << low, lo), min((p << low) + block - 1, hi)
        if start <= end:
            yield start, end
        rank += 1
