"""Reference AES block cipher: key schedule and the 16-octet block permutation.

This is the authoritative, pure-Python path. Every other component (modes,
AEAD, accelerated kernels) is checked against it. The S-box is generated at
import time from its algebraic definition (multiplicative inverse in GF(2^8)
followed by an affine map) and self-checked against the bit-matrix form of
that affine map before use.

SECURITY NOTE: nothing here is constant-time. Table lookups and data
dependent branches leak through timing and cache side channels. This package
is a measurement laboratory, not a hardened crypto library; do not use it to
protect real data.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from enum import Enum

from .errors import InvalidInputError, InvalidKeyError

BLOCK_SIZE = 16


# ---------------------------------------------------------------------------
# GF(2^8) arithmetic, reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11b)

def xtime(a: int) -> int:
    """Multiply by x in GF(2^8)."""
    a <<= 1
    if a & 0x100:
        a ^= 0x11B
    return a & 0xFF


def gf256_mul(a: int, b: int) -> int:
    """Multiply two GF(2^8) elements (shift-and-add)."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a = xtime(a)
        b >>= 1
    return r


def _gf256_inv(a: int) -> int:
    # a^254 = a^-1 for a != 0; 0 maps to 0 by convention in the S-box.
    if a == 0:
        return 0
    return pow_gf256(a, 254)


def pow_gf256(a: int, e: int) -> int:
    r = 1
    while e:
        if e & 1:
            r = gf256_mul(r, a)
        a = gf256_mul(a, a)
        e >>= 1
    return r


def _rotl8(x: int, n: int) -> int:
    return ((x << n) | (x >> (8 - n))) & 0xFF


def _build_sbox() -> tuple[bytes, bytes]:
    """Generate the S-box from the algebraic definition and self-check it.

    Forward entry: s = b ^ rotl(b,1) ^ rotl(b,2) ^ rotl(b,3) ^ rotl(b,4) ^ 0x63
    where b is the multiplicative inverse of the index. The check recomputes
    every entry through the explicit affine bit matrix and also verifies the
    inverse table really inverts the forward one.
    """
    sbox = bytearray(256)
    for x in range(256):
        b = _gf256_inv(x)
        sbox[x] = b ^ _rotl8(b, 1) ^ _rotl8(b, 2) ^ _rotl8(b, 3) ^ _rotl8(b, 4) ^ 0x63

    # Affine map as a bit matrix: row i of the matrix is 0xF1 rotated left i.
    for x in range(256):
        b = _gf256_inv(x)
        s = 0
        for i in range(8):
            row = _rotl8(0xF1, i)
            bit = bin(row & b).count("1") & 1
            s |= bit << i
        s ^= 0x63
        if s != sbox[x]:
            raise AssertionError("S-box generation self-check failed at 0x%02x" % x)
    if sbox[0x00] != 0x63 or sbox[0x53] != 0xED:
        raise AssertionError("S-box spot constants do not match")

    inv = bytearray(256)
    for x, s in enumerate(sbox):
        inv[s] = x
    if sorted(sbox) != list(range(256)):
        raise AssertionError("S-box is not a permutation")
    return bytes(sbox), bytes(inv)


SBOX, INV_SBOX = _build_sbox()

# Byte multiplication tables used by MixColumns and its inverse.
MUL2 = bytes(gf256_mul(x, 2) for x in range(256))
MUL3 = bytes(gf256_mul(x, 3) for x in range(256))
MUL9 = bytes(gf256_mul(x, 9) for x in range(256))
MUL11 = bytes(gf256_mul(x, 11) for x in range(256))
MUL13 = bytes(gf256_mul(x, 13) for x in range(256))
MUL14 = bytes(gf256_mul(x, 14) for x in range(256))

# Flat state layout: index = row + 4*column, which is exactly the order the
# 16 input octets arrive in, so loads and stores are identity copies.
_SHIFT_ROWS = [r + 4 * ((c + r) % 4) for c in range(4) for r in range(4)]
_INV_SHIFT_ROWS = [r + 4 * ((c - r) % 4) for c in range(4) for r in range(4)]

_RCON = [0x01]
while len(_RCON) < 14:
    _RCON.append(xtime(_RCON[-1]))


# ---------------------------------------------------------------------------
# Keys and schedules

class KeyVariant(Enum):
    """AES key-length variant; value is the key size in bits."""

    AES128 = 128
    AES192 = 192
    AES256 = 256

    @property
    def key_len(self) -> int:
        return self.value // 8

    @property
    def rounds(self) -> int:
        return {128: 10, 192: 12, 256: 14}[self.value]

    @classmethod
    def from_key_len(cls, n: int) -> "KeyVariant":
        for v in cls:
            if v.key_len == n:
                return v
        raise InvalidKeyError(f"key must be 16, 24 or 32 octets, got {n}")

    @classmethod
    def from_bits(cls, bits: int) -> "KeyVariant":
        try:
            return cls(bits)
        except ValueError:
            raise InvalidKeyError(f"key size must be 128, 192 or 256 bits, got {bits}") from None


@dataclass(frozen=True)
class SecretKey:
    """AES key material; the variant is implied by the octet length."""

    octets: bytes

    def __post_init__(self):
        if not isinstance(self.octets, (bytes, bytearray)):
            raise InvalidKeyError("key octets must be bytes")
        object.__setattr__(self, "octets", bytes(self.octets))
        KeyVariant.from_key_len(len(self.octets))

    @property
    def variant(self) -> KeyVariant:
        return KeyVariant.from_key_len(len(self.octets))

    @property
    def bits(self) -> int:
        return len(self.octets) * 8

    @classmethod
    def from_hex(cls, s: str) -> "SecretKey":
        try:
            raw = bytes.fromhex(s)
        except ValueError:
            raise InvalidKeyError("key hex string is malformed") from None
        return cls(raw)

    @classmethod
    def generate(cls, bits: int = 256) -> "SecretKey":
        return cls(secrets.token_bytes(KeyVariant.from_bits(bits).key_len))

    def hex(self) -> str:
        return self.octets.hex()


class RoundKeySchedule:
    """Expanded round keys: (rounds + 1) blocks of 16 octets.

    Immutable after construction and safe to share between threads; the
    accelerated engine caches derived tables on it.
    """

    __slots__ = ("variant", "round_keys", "_fast_enc", "_fast_dec")

    def __init__(self, variant: KeyVariant, round_keys: tuple[bytes, ...]):
        if len(round_keys) != variant.rounds + 1:
            raise InvalidKeyError("round key count does not match variant")
        self.variant = variant
        self.round_keys = round_keys
        self._fast_enc = None
        self._fast_dec = None

    def __repr__(self):
        return f"RoundKeySchedule({self.variant.name}, {len(self.round_keys)} round keys)"


def key_expand(key: SecretKey | bytes) -> RoundKeySchedule:
    """FIPS-197 key expansion (RotWord/SubWord/Rcon recurrence)."""
    if not isinstance(key, SecretKey):
        key = SecretKey(bytes(key))
    variant = key.variant
    nk = variant.key_len // 4
    nr = variant.rounds

    words = [key.octets[4 * i:4 * i + 4] for i in range(nk)]
    for i in range(nk, 4 * (nr + 1)):
        temp = words[i - 1]
        if i % nk == 0:
            rot = temp[1:] + temp[:1]
            temp = bytes(SBOX[b] for b in rot)
            temp = bytes([temp[0] ^ _RCON[i // nk - 1]]) + temp[1:]
        elif nk > 6 and i % nk == 4:
            temp = bytes(SBOX[b] for b in temp)
        words.append(bytes(a ^ b for a, b in zip(words[i - nk], temp)))

    round_keys = tuple(b"".join(words[4 * r:4 * r + 4]) for r in range(nr + 1))
    return RoundKeySchedule(variant, round_keys)


# ---------------------------------------------------------------------------
# The block permutation and its inverse

def _check_block(block: bytes) -> bytes:
    if len(block) != BLOCK_SIZE:
        raise InvalidInputError(f"block must be exactly {BLOCK_SIZE} octets, got {len(block)}")
    return bytes(block)


def encrypt_block(schedule: RoundKeySchedule, plaintext: bytes) -> bytes:
    """Encrypt one 16-octet block (pure function of schedule and block)."""
    block = _check_block(plaintext)
    rks = schedule.round_keys
    nr = schedule.variant.rounds

    s = [b ^ k for b, k in zip(block, rks[0])]
    for rnd in range(1, nr):
        s = [SBOX[b] for b in s]
        s = [s[i] for i in _SHIFT_ROWS]
        m = []
        for c in range(0, 16, 4):
            a0, a1, a2, a3 = s[c], s[c + 1], s[c + 2], s[c + 3]
            m.append(MUL2[a0] ^ MUL3[a1] ^ a2 ^ a3)
            m.append(a0 ^ MUL2[a1] ^ MUL3[a2] ^ a3)
            m.append(a0 ^ a1 ^ MUL2[a2] ^ MUL3[a3])
            m.append(MUL3[a0] ^ a1 ^ a2 ^ MUL2[a3])
        s = [b ^ k for b, k in zip(m, rks[rnd])]
    # Final round drops MixColumns.
    s = [SBOX[b] for b in s]
    s = [s[i] for i in _SHIFT_ROWS]
    return bytes(b ^ k for b, k in zip(s, rks[nr]))


def decrypt_block(schedule: RoundKeySchedule, ciphertext: bytes) -> bytes:
    """Invert encrypt_block under the same schedule."""
    block = _check_block(ciphertext)
    rks = schedule.round_keys
    nr = schedule.variant.rounds

    s = [b ^ k for b, k in zip(block, rks[nr])]
    for rnd in range(nr - 1, 0, -1):
        s = [s[i] for i in _INV_SHIFT_ROWS]
        s = [INV_SBOX[b] for b in s]
        s = [b ^ k for b, k in zip(s, rks[rnd])]
        m = []
        for c in range(0, 16, 4):
            a0, a1, a2, a3 = s[c], s[c + 1], s[c + 2], s[c + 3]
            m.append(MUL14[a0] ^ MUL11[a1] ^ MUL13[a2] ^ MUL9[a3])
            m.append(MUL9[a0] ^ MUL14[a1] ^ MUL11[a2] ^ MUL13[a3])
            m.append(MUL13[a0] ^ MUL9[a1] ^ MUL14[a2] ^ MUL11[a3])
            m.append(MUL11[a0] ^ MUL13[a1] ^ MUL9[a2] ^ MUL14[a3])
        s = m
    s = [s[i] for i in _INV_SHIFT_ROWS]
    s = [INV_SBOX[b] for b in s]
    return bytes(b ^ k for b, k in zip(s, rks[0]))
