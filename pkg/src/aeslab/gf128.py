"""GF(2^128) arithmetic in GCM bit order.

Elements are 128-bit Python ints holding the big-endian value of a 16-octet
block. GCM's bit convention maps the coefficient of x^i to bit (127 - i) of
that integer, so the multiplicative identity x^0 is 1 << 127 (block
80 00 ... 00) and the reduction polynomial is x^128 + x^7 + x^2 + x + 1,
which appears as the constant 0xе1 — spelled 0xE1 — shifted to the top byte.

`gmul` is the slow, obviously-correct shift-and-reduce form used as the
oracle; `gmul_table` is the byte-table form the accelerated GHASH kernel is
built on. They must agree everywhere (the test suite checks 10^4 random
pairs plus the algebraic identities).
"""

from __future__ import annotations

_MASK128 = (1 << 128) - 1
_REDUCER = 0xE1 << 120  # x^128 == x^7 + x^2 + x + 1 in the reflected layout
IDENTITY = 1 << 127  # the element x^0


def mul_x(v: int) -> int:
    """Multiply an element by x (one reflected shift with reduction)."""
    if v & 1:
        return (v >> 1) ^ _REDUCER
    return v >> 1


def gmul(a: int, b: int) -> int:
    """Reference product a*b: shift-and-reduce over all 128 bits of b."""
    z = 0
    v = a
    bit = 1 << 127
    while bit:
        if b & bit:
            z ^= v
        v = mul_x(v)
        bit >>= 1
    return z


def _mul_x8(v: int) -> int:
    for _ in range(8):
        v = mul_x(v)
    return v


def shift8_table() -> list[int]:
    """Reduction table for multiplying by x^8 one byte at a time.

    Entry r is the element whose coefficients occupied x^120..x^127 (the low
    byte of the integer form) after multiplication by x^8, i.e. the reduced
    spill-over of an 8-bit right shift.
    """
    return [_mul_x8(r) for r in range(256)]


def product_table(h: int) -> list[int]:
    """256-entry table T[b] = (b at the x^0..x^7 positions) * h.

    Built by doubling h through the eight bit positions of the top byte and
    combining subsets, so construction costs O(256) XORs.
    """
    # top-byte bit j of the index corresponds to coefficient x^(7-j)
    powers = [0] * 8  # powers[j] = h * x^j
    powers[0] = h
    for j in range(1, 8):
        powers[j] = mul_x(powers[j - 1])

    tab = [0] * 256
    for j in range(8):
        tab[1 << j] = powers[7 - j]
    for b in range(1, 256):
        low = b & -b
        rest = b ^ low
        if rest:
            tab[b] = tab[rest] ^ tab[low]
    return tab


def gmul_table(a: int, b: int) -> int:
    """Table-method product: byte-wise Horner scan of a against b's table.

    Equivalent to gmul; kept as the second route of the dual-route check and
    as the executable specification for the accelerated kernel.
    """
    tab = product_table(b)
    shift8 = shift8_table()
    a_bytes = a.to_bytes(16, "big")
    r = tab[a_bytes[15]]
    for k in range(14, -1, -1):
        r = (r >> 8) ^ shift8[r & 0xFF]
        r ^= tab[a_bytes[k]]
    return r


def block_to_int(block: bytes) -> int:
    return int.from_bytes(block, "big")


def int_to_block(v: int) -> bytes:
    return (v & _MASK128).to_bytes(16, "big")
