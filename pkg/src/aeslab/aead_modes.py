"""Authenticated modes: GCM (counter mode + GHASH tag) and CCM (CBC-MAC tag
then counter-mode encryption).

Both seal operations return a SealedMessage whose tag field is always the
full 16 octets; shorter CCM tags exist internally only so the standard
known-answer vectors can be exercised. Open operations verify before any
plaintext leaves the function, and the tag comparison examines every octet
regardless of where a mismatch occurs.

The GHASH subkey is the block encryption of the all-zero block, and the GCM
pre-counter block J0 is nonce || 00000001 for the fixed 12-octet nonces this
package supports.
"""

from __future__ import annotations

import hmac
import secrets

from . import engine
from .aes_core import BLOCK_SIZE, SecretKey, key_expand
from .block_modes import Mode, SealedMessage, _check_mode, _run_chunked
from .errors import AuthenticationError, InvalidInputError, NonceError

GCM_NONCE_LEN = 12
CCM_NONCE_RANGE = range(7, 14)
TAG_LEN = 16

_GCM_MAX_PLAINTEXT = (1 << 36) - 32


def generate_nonce(length: int = 12) -> bytes:
    """Fresh random nonce; 12 octets suits both modes."""
    return secrets.token_bytes(length)


def _zpad(data: bytes) -> bytes:
    r = len(data) % BLOCK_SIZE
    return data + bytes(BLOCK_SIZE - r) if r else data


# ---------------------------------------------------------------------------
# GHASH

def ghash_subkey(schedule) -> bytes:
    """H: the block encryption of the all-zero block."""
    return engine.ecb_encrypt_blocks(schedule, bytes(BLOCK_SIZE), path="reference")


def ghash(h_subkey: bytes, aad: bytes, ciphertext: bytes, path: str = "auto") -> bytes:
    """Polynomial hash over GF(2^128) keyed by H.

    AAD and ciphertext are zero-padded to 16-octet boundaries and followed by
    the block holding their bit lengths (each 64-bit, big-endian); the fold is
    Y_i = (Y_{i-1} xor X_i) * H.
    """
    if len(h_subkey) != BLOCK_SIZE:
        raise InvalidInputError("GHASH subkey must be 16 octets")
    lengths = (8 * len(aad)).to_bytes(8, "big") + (8 * len(ciphertext)).to_bytes(8, "big")
    return engine.ghash_blocks(h_subkey, _zpad(aad) + _zpad(ciphertext) + lengths, path)


# ---------------------------------------------------------------------------
# GCM

def _gcm_j0(nonce: bytes) -> bytes:
    if len(nonce) != GCM_NONCE_LEN:
        raise NonceError("GCM nonce must be exactly 12 octets")
    return nonce + b"\x00\x00\x00\x01"


def gcm_seal(key: SecretKey, nonce: bytes | None = None, aad: bytes = b"",
             plaintext: bytes = b"", *, workers: int | None = None,
             path: str = "auto") -> SealedMessage:
    """Encrypt with CTR starting at counter 2 and tag with GHASH xor E(J0)."""
    if nonce is None:
        nonce = generate_nonce(GCM_NONCE_LEN)
    j0 = _gcm_j0(nonce)
    if len(plaintext) > _GCM_MAX_PLAINTEXT:
        raise InvalidInputError("plaintext exceeds the GCM length bound")
    schedule = key_expand(key)
    if workers and workers > 1:
        body = _run_chunked(
            plaintext, workers,
            lambda a, b: engine.ctr_xor(schedule, plaintext[a:b], j0, 4,
                                        block_offset=1 + a // BLOCK_SIZE, path=path))
    else:
        body = engine.ctr_xor(schedule, plaintext, j0, 4, block_offset=1, path=path)
    h = ghash_subkey(schedule)
    s = ghash(h, aad, body, path)
    ej0 = engine.ecb_encrypt_blocks(schedule, j0, path="reference")
    tag = bytes(a ^ b for a, b in zip(s, ej0))
    return SealedMessage(Mode.GCM, key.variant, bytes(nonce), body, tag)


def gcm_open(key: SecretKey, msg: SealedMessage, aad: bytes = b"", *,
             workers: int | None = None, path: str = "auto") -> bytes:
    """Verify the tag over the received ciphertext, then decrypt.

    Raises AuthenticationError if any bit of nonce, AAD, ciphertext or tag
    was altered; no plaintext is produced in that case.
    """
    _check_mode(msg, Mode.GCM, key)
    j0 = _gcm_j0(msg.header)
    schedule = key_expand(key)
    h = ghash_subkey(schedule)
    s = ghash(h, aad, msg.body, path)
    ej0 = engine.ecb_encrypt_blocks(schedule, j0, path="reference")
    expected = bytes(a ^ b for a, b in zip(s, ej0))
    if not hmac.compare_digest(expected, msg.tag):
        raise AuthenticationError("GCM tag verification failed")
    if workers and workers > 1:
        return _run_chunked(
            msg.body, workers,
            lambda a, b: engine.ctr_xor(schedule, msg.body[a:b], j0, 4,
                                        block_offset=1 + a // BLOCK_SIZE, path=path))
    return engine.ctr_xor(schedule, msg.body, j0, 4, block_offset=1, path=path)


# ---------------------------------------------------------------------------
# CCM

def _ccm_q(nonce: bytes) -> int:
    if len(nonce) not in CCM_NONCE_RANGE:
        raise NonceError("CCM nonce must be 7..13 octets")
    return 15 - len(nonce)


def _ccm_mac_input(nonce: bytes, aad: bytes, plaintext: bytes, tag_len: int) -> bytes:
    q = _ccm_q(nonce)
    flags = (0x40 if aad else 0) | (((tag_len - 2) // 2) << 3) | (q - 1)
    b0 = bytes([flags]) + nonce + len(plaintext).to_bytes(q, "big")
    if aad:
        if len(aad) < (1 << 16) - (1 << 8):
            enc = len(aad).to_bytes(2, "big")
        elif len(aad) < (1 << 32):
            enc = b"\xff\xfe" + len(aad).to_bytes(4, "big")
        else:
            enc = b"\xff\xff" + len(aad).to_bytes(8, "big")
        aad_part = _zpad(enc + aad)
    else:
        aad_part = b""
    return b0 + aad_part + _zpad(plaintext)


def _ccm_counter0(nonce: bytes) -> bytes:
    q = _ccm_q(nonce)
    return bytes([q - 1]) + nonce + bytes(q)


def _ccm_seal_raw(key: SecretKey, nonce: bytes, aad: bytes, plaintext: bytes,
                  tag_len: int, path: str = "auto") -> tuple[bytes, bytes]:
    """Core CCM: returns (ciphertext, tag of tag_len octets).

    tag_len below 16 exists solely so the standard vectors can be checked;
    the public API always uses the full 16.
    """
    if tag_len not in (4, 6, 8, 10, 12, 14, 16):
        raise InvalidInputError("CCM tag length must be an even value in 4..16")
    q = _ccm_q(nonce)
    if len(plaintext) >= (1 << (8 * q)):
        raise InvalidInputError(
            f"plaintext too long for a {len(nonce)}-octet nonce (q={q})")
    schedule = key_expand(key)
    t = engine.cbc_mac(schedule, _ccm_mac_input(nonce, aad, plaintext, tag_len), path)
    a0 = _ccm_counter0(nonce)
    s0 = engine.ecb_encrypt_blocks(schedule, a0, path="reference")
    body = engine.ctr_xor(schedule, plaintext, a0, q, block_offset=1, path=path)
    tag = bytes(x ^ y for x, y in zip(t, s0))[:tag_len]
    return body, tag


def ccm_seal(key: SecretKey, nonce: bytes | None = None, aad: bytes = b"",
             plaintext: bytes = b"", *, path: str = "auto") -> SealedMessage:
    """CBC-MAC the formatted message, then encrypt payload with counter mode."""
    if nonce is None:
        nonce = generate_nonce(12)
    body, tag = _ccm_seal_raw(key, bytes(nonce), aad, plaintext, TAG_LEN, path)
    return SealedMessage(Mode.CCM, key.variant, bytes(nonce), body, tag)


def ccm_open(key: SecretKey, msg: SealedMessage, aad: bytes = b"", *,
             path: str = "auto") -> bytes:
    """Decrypt, recompute the CBC-MAC over the recovered payload, verify.

    The recovered plaintext never leaves this function unless the tag
    matches on all 16 octets.
    """
    _check_mode(msg, Mode.CCM, key)
    nonce = msg.header
    q = _ccm_q(nonce)
    schedule = key_expand(key)
    a0 = _ccm_counter0(nonce)
    plaintext = engine.ctr_xor(schedule, msg.body, a0, q, block_offset=1, path=path)
    t = engine.cbc_mac(schedule, _ccm_mac_input(nonce, aad, plaintext, TAG_LEN), path)
    s0 = engine.ecb_encrypt_blocks(schedule, a0, path="reference")
    expected = bytes(x ^ y for x, y in zip(t, s0))
    if not hmac.compare_digest(expected, msg.tag):
        raise AuthenticationError("CCM tag verification failed")
    return plaintext
