"""Block-processing engine: reference loops plus optional compiled kernels.

The pure-Python reference path (built on aes_core and gf128) is the
authoritative implementation. When numba is importable, T-table kernels
provide an accelerated path that must produce octet-identical output; the
test suite drives both routes against each other. Dispatch is controlled per
call with ``path``:

    "auto"      - accelerated when available and the job is large enough
    "fast"      - force the accelerated path (raises if unavailable)
    "reference" - force the pure-Python path

Every operation is a pure function of its arguments; nothing here holds
mutable shared state beyond per-schedule table caches, so concurrent use is
safe. The kernels are compiled nogil so thread pools can genuinely overlap.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import aes_core, gf128
from .aes_core import (BLOCK_SIZE, INV_SBOX, MUL2, MUL3, MUL9, MUL11, MUL13,
                       MUL14, SBOX, RoundKeySchedule)

try:
    from numba import njit

    HAVE_FAST = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_FAST = False

# Jobs below this size stay on the reference path: the fixed cost of
# marshalling into kernels outweighs the win, and small-input callers
# (vector suites, tag blocks) keep zero JIT latency.
FAST_THRESHOLD = 1024

_M64 = (1 << 64) - 1


def _use_fast(path: str, nbytes: int) -> bool:
    if path == "reference":
        return False
    if path == "fast":
        if not HAVE_FAST:
            raise RuntimeError("accelerated path requested but numba is unavailable")
        return True
    if path != "auto":
        raise ValueError(f"unknown engine path {path!r}")
    return HAVE_FAST and nbytes >= FAST_THRESHOLD


# ---------------------------------------------------------------------------
# Table construction (from the self-checked aes_core tables)

def _build_tables():
    te = np.zeros((4, 256), dtype=np.int64)
    td = np.zeros((4, 256), dtype=np.int64)
    for x in range(256):
        s = SBOX[x]
        s2, s3 = MUL2[s], MUL3[s]
        te[0, x] = (s2 << 24) | (s << 16) | (s << 8) | s3
        te[1, x] = (s3 << 24) | (s2 << 16) | (s << 8) | s
        te[2, x] = (s << 24) | (s3 << 16) | (s2 << 8) | s
        te[3, x] = (s << 24) | (s << 16) | (s3 << 8) | s2
        i = INV_SBOX[x]
        i9, i11, i13, i14 = MUL9[i], MUL11[i], MUL13[i], MUL14[i]
        td[0, x] = (i14 << 24) | (i9 << 16) | (i13 << 8) | i11
        td[1, x] = (i11 << 24) | (i14 << 16) | (i9 << 8) | i13
        td[2, x] = (i13 << 24) | (i11 << 16) | (i14 << 8) | i9
        td[3, x] = (i9 << 24) | (i13 << 16) | (i11 << 8) | i14
    sb = np.frombuffer(SBOX, dtype=np.uint8).astype(np.int64)
    isb = np.frombuffer(INV_SBOX, dtype=np.uint8).astype(np.int64)
    return te, td, sb, isb


_TE, _TD, _SB, _ISB = _build_tables()


def _inv_mix_columns(rk: bytes) -> bytes:
    out = bytearray(16)
    for c in range(0, 16, 4):
        a0, a1, a2, a3 = rk[c], rk[c + 1], rk[c + 2], rk[c + 3]
        out[c] = MUL14[a0] ^ MUL11[a1] ^ MUL13[a2] ^ MUL9[a3]
        out[c + 1] = MUL9[a0] ^ MUL14[a1] ^ MUL11[a2] ^ MUL13[a3]
        out[c + 2] = MUL13[a0] ^ MUL9[a1] ^ MUL14[a2] ^ MUL11[a3]
        out[c + 3] = MUL11[a0] ^ MUL13[a1] ^ MUL9[a2] ^ MUL14[a3]
    return bytes(out)


def _enc_words(schedule: RoundKeySchedule) -> np.ndarray:
    if schedule._fast_enc is None:
        raw = b"".join(schedule.round_keys)
        schedule._fast_enc = np.frombuffer(raw, dtype=">u4").astype(np.int64)
    return schedule._fast_enc


def _dec_words(schedule: RoundKeySchedule) -> np.ndarray:
    # Equivalent-inverse-cipher keys: reversed schedule with InvMixColumns
    # applied to every round key except the two end ones.
    if schedule._fast_dec is None:
        nr = schedule.variant.rounds
        rks = schedule.round_keys
        dks = [rks[nr]]
        dks += [_inv_mix_columns(rks[nr - i]) for i in range(1, nr)]
        dks.append(rks[0])
        schedule._fast_dec = np.frombuffer(b"".join(dks), dtype=">u4").astype(np.int64)
    return schedule._fast_dec


# ---------------------------------------------------------------------------
# Compiled kernels

if HAVE_FAST:

    @njit(cache=True, nogil=True)
    def _enc4(w0, w1, w2, w3, rk, te, sb):
        nr = rk.shape[0] // 4 - 1
        w0 ^= rk[0]
        w1 ^= rk[1]
        w2 ^= rk[2]
        w3 ^= rk[3]
        for r in range(1, nr):
            k = 4 * r
            t0 = te[0, (w0 >> 24) & 0xFF] ^ te[1, (w1 >> 16) & 0xFF] ^ te[2, (w2 >> 8) & 0xFF] ^ te[3, w3 & 0xFF] ^ rk[k]
            t1 = te[0, (w1 >> 24) & 0xFF] ^ te[1, (w2 >> 16) & 0xFF] ^ te[2, (w3 >> 8) & 0xFF] ^ te[3, w0 & 0xFF] ^ rk[k + 1]
            t2 = te[0, (w2 >> 24) & 0xFF] ^ te[1, (w3 >> 16) & 0xFF] ^ te[2, (w0 >> 8) & 0xFF] ^ te[3, w1 & 0xFF] ^ rk[k + 2]
            t3 = te[0, (w3 >> 24) & 0xFF] ^ te[1, (w0 >> 16) & 0xFF] ^ te[2, (w1 >> 8) & 0xFF] ^ te[3, w2 & 0xFF] ^ rk[k + 3]
            w0, w1, w2, w3 = t0, t1, t2, t3
        k = 4 * nr
        f0 = (sb[(w0 >> 24) & 0xFF] << 24) | (sb[(w1 >> 16) & 0xFF] << 16) | (sb[(w2 >> 8) & 0xFF] << 8) | sb[w3 & 0xFF]
        f1 = (sb[(w1 >> 24) & 0xFF] << 24) | (sb[(w2 >> 16) & 0xFF] << 16) | (sb[(w3 >> 8) & 0xFF] << 8) | sb[w0 & 0xFF]
        f2 = (sb[(w2 >> 24) & 0xFF] << 24) | (sb[(w3 >> 16) & 0xFF] << 16) | (sb[(w0 >> 8) & 0xFF] << 8) | sb[w1 & 0xFF]
        f3 = (sb[(w3 >> 24) & 0xFF] << 24) | (sb[(w0 >> 16) & 0xFF] << 16) | (sb[(w1 >> 8) & 0xFF] << 8) | sb[w2 & 0xFF]
        return f0 ^ rk[k], f1 ^ rk[k + 1], f2 ^ rk[k + 2], f3 ^ rk[k + 3]

    @njit(cache=True, nogil=True)
    def _dec4(w0, w1, w2, w3, dk, td, isb):
        nr = dk.shape[0] // 4 - 1
        w0 ^= dk[0]
        w1 ^= dk[1]
        w2 ^= dk[2]
        w3 ^= dk[3]
        for r in range(1, nr):
            k = 4 * r
            t0 = td[0, (w0 >> 24) & 0xFF] ^ td[1, (w3 >> 16) & 0xFF] ^ td[2, (w2 >> 8) & 0xFF] ^ td[3, w1 & 0xFF] ^ dk[k]
            t1 = td[0, (w1 >> 24) & 0xFF] ^ td[1, (w0 >> 16) & 0xFF] ^ td[2, (w3 >> 8) & 0xFF] ^ td[3, w2 & 0xFF] ^ dk[k + 1]
            t2 = td[0, (w2 >> 24) & 0xFF] ^ td[1, (w1 >> 16) & 0xFF] ^ td[2, (w0 >> 8) & 0xFF] ^ td[3, w3 & 0xFF] ^ dk[k + 2]
            t3 = td[0, (w3 >> 24) & 0xFF] ^ td[1, (w2 >> 16) & 0xFF] ^ td[2, (w1 >> 8) & 0xFF] ^ td[3, w0 & 0xFF] ^ dk[k + 3]
            w0, w1, w2, w3 = t0, t1, t2, t3
        k = 4 * nr
        f0 = (isb[(w0 >> 24) & 0xFF] << 24) | (isb[(w3 >> 16) & 0xFF] << 16) | (isb[(w2 >> 8) & 0xFF] << 8) | isb[w1 & 0xFF]
        f1 = (isb[(w1 >> 24) & 0xFF] << 24) | (isb[(w0 >> 16) & 0xFF] << 16) | (isb[(w3 >> 8) & 0xFF] << 8) | isb[w2 & 0xFF]
        f2 = (isb[(w2 >> 24) & 0xFF] << 24) | (isb[(w1 >> 16) & 0xFF] << 16) | (isb[(w0 >> 8) & 0xFF] << 8) | isb[w3 & 0xFF]
        f3 = (isb[(w3 >> 24) & 0xFF] << 24) | (isb[(w2 >> 16) & 0xFF] << 16) | (isb[(w1 >> 8) & 0xFF] << 8) | isb[w0 & 0xFF]
        return f0 ^ dk[k], f1 ^ dk[k + 1], f2 ^ dk[k + 2], f3 ^ dk[k + 3]

    @njit(cache=True, nogil=True)
    def _load(buf, off):
        # int64 words keep numba's type unification away from uint64/float64
        w0 = (np.int64(buf[off]) << 24) | (np.int64(buf[off + 1]) << 16) | (np.int64(buf[off + 2]) << 8) | np.int64(buf[off + 3])
        w1 = (np.int64(buf[off + 4]) << 24) | (np.int64(buf[off + 5]) << 16) | (np.int64(buf[off + 6]) << 8) | np.int64(buf[off + 7])
        w2 = (np.int64(buf[off + 8]) << 24) | (np.int64(buf[off + 9]) << 16) | (np.int64(buf[off + 10]) << 8) | np.int64(buf[off + 11])
        w3 = (np.int64(buf[off + 12]) << 24) | (np.int64(buf[off + 13]) << 16) | (np.int64(buf[off + 14]) << 8) | np.int64(buf[off + 15])
        return w0, w1, w2, w3

    @njit(cache=True, nogil=True)
    def _store(buf, off, w0, w1, w2, w3):
        buf[off] = (w0 >> 24) & 0xFF
        buf[off + 1] = (w0 >> 16) & 0xFF
        buf[off + 2] = (w0 >> 8) & 0xFF
        buf[off + 3] = w0 & 0xFF
        buf[off + 4] = (w1 >> 24) & 0xFF
        buf[off + 5] = (w1 >> 16) & 0xFF
        buf[off + 6] = (w1 >> 8) & 0xFF
        buf[off + 7] = w1 & 0xFF
        buf[off + 8] = (w2 >> 24) & 0xFF
        buf[off + 9] = (w2 >> 16) & 0xFF
        buf[off + 10] = (w2 >> 8) & 0xFF
        buf[off + 11] = w2 & 0xFF
        buf[off + 12] = (w3 >> 24) & 0xFF
        buf[off + 13] = (w3 >> 16) & 0xFF
        buf[off + 14] = (w3 >> 8) & 0xFF
        buf[off + 15] = w3 & 0xFF

    @njit(cache=True, nogil=True)
    def _ecb_enc_kernel(data, out, rk, te, sb):
        for off in range(0, data.shape[0], 16):
            w0, w1, w2, w3 = _load(data, off)
            w0, w1, w2, w3 = _enc4(w0, w1, w2, w3, rk, te, sb)
            _store(out, off, w0, w1, w2, w3)

    @njit(cache=True, nogil=True)
    def _ecb_dec_kernel(data, out, dk, td, isb):
        for off in range(0, data.shape[0], 16):
            w0, w1, w2, w3 = _load(data, off)
            w0, w1, w2, w3 = _dec4(w0, w1, w2, w3, dk, td, isb)
            _store(out, off, w0, w1, w2, w3)

    @njit(cache=True, nogil=True)
    def _cbc_enc_kernel(data, out, rk, iv, te, sb):
        p0, p1, p2, p3 = _load(iv, 0)
        for off in range(0, data.shape[0], 16):
            w0, w1, w2, w3 = _load(data, off)
            p0, p1, p2, p3 = _enc4(w0 ^ p0, w1 ^ p1, w2 ^ p2, w3 ^ p3, rk, te, sb)
            _store(out, off, p0, p1, p2, p3)

    @njit(cache=True, nogil=True)
    def _cbc_dec_kernel(data, out, dk, iv, td, isb):
        p0, p1, p2, p3 = _load(iv, 0)
        for off in range(0, data.shape[0], 16):
            c0, c1, c2, c3 = _load(data, off)
            w0, w1, w2, w3 = _dec4(c0, c1, c2, c3, dk, td, isb)
            _store(out, off, w0 ^ p0, w1 ^ p1, w2 ^ p2, w3 ^ p3)
            p0, p1, p2, p3 = c0, c1, c2, c3

    @njit(cache=True, nogil=True)
    def _cbc_mac_kernel(data, y, rk, te, sb):
        y0, y1, y2, y3 = _load(y, 0)
        for off in range(0, data.shape[0], 16):
            w0, w1, w2, w3 = _load(data, off)
            y0, y1, y2, y3 = _enc4(w0 ^ y0, w1 ^ y1, w2 ^ y2, w3 ^ y3, rk, te, sb)
        _store(y, 0, y0, y1, y2, y3)

    @njit(cache=True, nogil=True)
    def _ctr_xor_kernel(data, out, rk, block0, ctr_len, ctr0, mask, te, sb):
        n = data.shape[0]
        nblocks = (n + 15) // 16
        pre = 16 - ctr_len
        cb = np.empty(16, np.uint8)
        ks = np.empty(16, np.uint8)
        for i in range(pre):
            cb[i] = block0[i]
        for i in range(nblocks):
            c = (ctr0 + np.uint64(i)) & mask
            for j in range(ctr_len - 1, -1, -1):
                cb[pre + j] = np.uint8(c & np.uint64(0xFF))
                c >>= np.uint64(8)
            w0, w1, w2, w3 = _load(cb, 0)
            w0, w1, w2, w3 = _enc4(w0, w1, w2, w3, rk, te, sb)
            off = 16 * i
            if off + 16 <= n:
                d0, d1, d2, d3 = _load(data, off)
                _store(out, off, d0 ^ w0, d1 ^ w1, d2 ^ w2, d3 ^ w3)
            else:
                _store(ks, 0, w0, w1, w2, w3)
                for j in range(off, n):
                    out[j] = data[j] ^ ks[j - off]

    @njit(cache=True, nogil=True)
    def _ghash_kernel(blocks, y, tab_hi, tab_lo, rem_hi, rem_lo):
        yh = y[0]
        yl = y[1]
        for off in range(0, blocks.shape[0], 16):
            for j in range(8):
                yh ^= np.uint64(blocks[off + j]) << np.uint64(8 * (7 - j))
                yl ^= np.uint64(blocks[off + 8 + j]) << np.uint64(8 * (7 - j))
            # multiply (yh, yl) by H: Horner scan over the 16 bytes
            b = yl & np.uint64(0xFF)
            rh = tab_hi[b]
            rl = tab_lo[b]
            for k in range(14, -1, -1):
                rem = rl & np.uint64(0xFF)
                rl = (rl >> np.uint64(8)) | (rh << np.uint64(56))
                rh = rh >> np.uint64(8)
                rh ^= rem_hi[rem]
                rl ^= rem_lo[rem]
                if k < 8:
                    b = (yh >> np.uint64(8 * (7 - k))) & np.uint64(0xFF)
                else:
                    b = (yl >> np.uint64(8 * (15 - k))) & np.uint64(0xFF)
                rh ^= tab_hi[b]
                rl ^= tab_lo[b]
            yh, yl = rh, rl
        y[0] = yh
        y[1] = yl


def _as_u8(data: bytes) -> np.ndarray:
    return np.frombuffer(data, dtype=np.uint8)


# ---------------------------------------------------------------------------
# ECB over whole buffers

def ecb_encrypt_blocks(schedule: RoundKeySchedule, data: bytes, path: str = "auto") -> bytes:
    """Encrypt a buffer whose length is a multiple of 16, block by block."""
    if len(data) % BLOCK_SIZE:
        raise ValueError("buffer length must be a multiple of 16")
    if _use_fast(path, len(data)):
        out = np.empty(len(data), np.uint8)
        _ecb_enc_kernel(_as_u8(data), out, _enc_words(schedule), _TE, _SB)
        return out.tobytes()
    return b"".join(
        aes_core.encrypt_block(schedule, data[o:o + 16]) for o in range(0, len(data), 16)
    )


def ecb_decrypt_blocks(schedule: RoundKeySchedule, data: bytes, path: str = "auto") -> bytes:
    if len(data) % BLOCK_SIZE:
        raise ValueError("buffer length must be a multiple of 16")
    if _use_fast(path, len(data)):
        out = np.empty(len(data), np.uint8)
        _ecb_dec_kernel(_as_u8(data), out, _dec_words(schedule), _TD, _ISB)
        return out.tobytes()
    return b"".join(
        aes_core.decrypt_block(schedule, data[o:o + 16]) for o in range(0, len(data), 16)
    )


# ---------------------------------------------------------------------------
# CBC chaining

def cbc_encrypt_blocks(schedule, data: bytes, iv: bytes, path: str = "auto") -> bytes:
    if len(data) % BLOCK_SIZE:
        raise ValueError("buffer length must be a multiple of 16")
    if _use_fast(path, len(data)):
        out = np.empty(len(data), np.uint8)
        _cbc_enc_kernel(_as_u8(data), out, _enc_words(schedule), _as_u8(iv), _TE, _SB)
        return out.tobytes()
    out = bytearray()
    prev = iv
    for o in range(0, len(data), 16):
        x = bytes(a ^ b for a, b in zip(data[o:o + 16], prev))
        prev = aes_core.encrypt_block(schedule, x)
        out += prev
    return bytes(out)


def cbc_decrypt_blocks(schedule, data: bytes, iv: bytes, path: str = "auto") -> bytes:
    if len(data) % BLOCK_SIZE:
        raise ValueError("buffer length must be a multiple of 16")
    if _use_fast(path, len(data)):
        out = np.empty(len(data), np.uint8)
        _cbc_dec_kernel(_as_u8(data), out, _dec_words(schedule), _as_u8(iv), _TD, _ISB)
        return out.tobytes()
    out = bytearray()
    prev = iv
    for o in range(0, len(data), 16):
        c = data[o:o + 16]
        p = aes_core.decrypt_block(schedule, c)
        out += bytes(a ^ b for a, b in zip(p, prev))
        prev = c
    return bytes(out)


def cbc_mac(schedule, data: bytes, path: str = "auto") -> bytes:
    """CBC-MAC fold with a zero IV over a 16-aligned buffer."""
    if len(data) % BLOCK_SIZE:
        raise ValueError("buffer length must be a multiple of 16")
    if _use_fast(path, len(data)):
        y = np.zeros(16, np.uint8)
        _cbc_mac_kernel(_as_u8(data), y, _enc_words(schedule), _TE, _SB)
        return y.tobytes()
    y = bytes(16)
    for o in range(0, len(data), 16):
        x = bytes(a ^ b for a, b in zip(data[o:o + 16], y))
        y = aes_core.encrypt_block(schedule, x)
    return y


# ---------------------------------------------------------------------------
# Counter keystream XOR (shared by CTR, CCM payload, GCM body)

def ctr_xor(schedule, data: bytes, block0: bytes, ctr_len: int,
            block_offset: int = 0, path: str = "auto") -> bytes:
    """XOR data with the keystream E(block0), E(block0 + 1), ...

    The counter is the trailing ``ctr_len`` octets of ``block0``, big-endian,
    incremented per block with the carry confined to those octets.
    ``block_offset`` starts the keystream that many blocks in, which lets
    chunked callers reproduce the exact serial output.
    """
    if len(block0) != BLOCK_SIZE:
        raise ValueError("counter block must be 16 octets")
    if not 1 <= ctr_len <= 8:
        raise ValueError("counter width must be 1..8 octets")
    mask = (1 << (8 * ctr_len)) - 1
    ctr0 = (int.from_bytes(block0[16 - ctr_len:], "big") + block_offset) & mask
    if _use_fast(path, len(data)):
        out = np.empty(len(data), np.uint8)
        _ctr_xor_kernel(_as_u8(data), out, _enc_words(schedule), _as_u8(block0),
                        ctr_len, np.uint64(ctr0), np.uint64(mask), _TE, _SB)
        return out.tobytes()
    out = bytearray()
    prefix = block0[:16 - ctr_len]
    nblocks = (len(data) + 15) // 16
    for i in range(nblocks):
        cb = prefix + (((ctr0 + i) & mask).to_bytes(ctr_len, "big"))
        ks = aes_core.encrypt_block(schedule, cb)
        chunk = data[16 * i:16 * i + 16]
        out += bytes(a ^ b for a, b in zip(chunk, ks))
    return bytes(out)


# ---------------------------------------------------------------------------
# GHASH fold

_GHASH_MIN_FAST = 64  # table setup is cheap, but tiny folds stay pure


@lru_cache(maxsize=256)
def _ghash_tables(h_subkey: bytes):
    h = gf128.block_to_int(h_subkey)
    tab = gf128.product_table(h)
    tab_hi = np.array([t >> 64 for t in tab], dtype=np.uint64)
    tab_lo = np.array([t & _M64 for t in tab], dtype=np.uint64)
    return tab_hi, tab_lo


@lru_cache(maxsize=1)
def _rem8_tables():
    rem = gf128.shift8_table()
    hi = np.array([r >> 64 for r in rem], dtype=np.uint64)
    lo = np.array([r & _M64 for r in rem], dtype=np.uint64)
    return hi, lo


def ghash_blocks(h_subkey: bytes, blocks: bytes, path: str = "auto") -> bytes:
    """Fold Y_i = (Y_{i-1} xor X_i) * H over a 16-aligned buffer, Y_0 = 0."""
    if len(blocks) % BLOCK_SIZE:
        raise ValueError("GHASH input must be zero-padded to 16 octets")
    if _use_fast(path, len(blocks)) and len(blocks) >= _GHASH_MIN_FAST:
        tab_hi, tab_lo = _ghash_tables(bytes(h_subkey))
        rem_hi, rem_lo = _rem8_tables()
        y = np.zeros(2, np.uint64)
        _ghash_kernel(_as_u8(blocks), y, tab_hi, tab_lo, rem_hi, rem_lo)
        return (int(y[0]).to_bytes(8, "big") + int(y[1]).to_bytes(8, "big"))
    h = gf128.block_to_int(h_subkey)
    y = 0
    for o in range(0, len(blocks), 16):
        y = gf128.gmul(y ^ gf128.block_to_int(blocks[o:o + 16]), h)
    return gf128.int_to_block(y)
