"""Ciphertext randomness scoring via normalized Gini impurity.

The score looks at the bitwise difference d between a plaintext and its
ciphertext over their common prefix, takes the fraction p1 of bits set in d,
and maps it through

    g = 2 - 2 * (p1^2 + (1 - p1)^2)

which is the two-class Gini impurity rescaled so its range is exactly [0, 1].
g reaches 1 when exactly half the bits changed (what an ideal cipher does in
expectation) and 0 when none or all of them did; low values mean the
ciphertext still carries plaintext structure.

Lengths may differ (padding and tags make ciphertexts longer); the
comparison window is the overlap min(len(P), len(C)) so the metric stays
defined and is not biased by trailing padding octets.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidInputError


@dataclass(frozen=True)
class BitDiff:
    """XOR difference with its population count."""

    diff_octets: bytes
    bit_length: int
    ones_count: int

    def __post_init__(self):
        if self.bit_length <= 0 or self.bit_length != 8 * len(self.diff_octets):
            raise InvalidInputError("bit_length must equal 8x the octet count")
        if not 0 <= self.ones_count <= self.bit_length:
            raise InvalidInputError("ones_count out of range")


@dataclass(frozen=True)
class NgiScore:
    """Ones ratio and its normalized Gini impurity."""

    p1: float
    g: float


def xor_diff(plain: bytes, cipher: bytes) -> BitDiff:
    """XOR the two buffers over their overlap window.

    Both inputs must be non-empty; the window is min(len) octets.
    """
    if not plain or not cipher:
        raise InvalidInputError("xor_diff needs two non-empty octet strings")
    n = min(len(plain), len(cipher))
    d = int.from_bytes(plain[:n], "little") ^ int.from_bytes(cipher[:n], "little")
    return BitDiff(d.to_bytes(n, "little"), 8 * n, d.bit_count())


def ones_ratio(diff: BitDiff) -> float:
    """p1 = ones_count / bit_length."""
    if diff.bit_length <= 0:
        raise InvalidInputError("bit_length must be positive")
    return diff.ones_count / diff.bit_length


def normalized_gini(p1: float) -> float:
    """Map a ones ratio in [0, 1] to the [0, 1]-scaled Gini impurity."""
    if not 0.0 <= p1 <= 1.0:
        raise InvalidInputError(f"p1 must lie in [0, 1], got {p1!r}")
    return 2.0 - 2.0 * (p1 * p1 + (1.0 - p1) * (1.0 - p1))


def score(plain: bytes, cipher: bytes) -> NgiScore:
    """Full pipeline: difference, ones ratio, impurity."""
    p1 = ones_ratio(xor_diff(plain, cipher))
    return NgiScore(p1=p1, g=normalized_gini(p1))
