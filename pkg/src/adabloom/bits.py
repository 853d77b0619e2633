"""Bit storage and hashing shared by every filter variant.

A Bloom-style filter needs an R-bit array and K hash functions mapping
items to positions in [0, R). Instead of K independent hash functions,
the whole family is derived from two 64-bit base hashes via double
hashing, h_i(x) = h_a(x) + i*h_b(x) mod R (Kirsch & Mitzenmacher,
"Less hashing, same performance", 2006), the standard engineering
substitute with negligible effect on the false positive rate. The
stride hash h_b is forced odd so the probe sequence cannot degenerate
when R is even.

Base hashes are FNV-1a over the item bytes, salted with two constants
derived from the family seed, then passed through a 64-bit finalizer
for avalanche. Everything is deterministic: the same (seed, item, i, R)
yields the same index on any platform. All intermediate arithmetic
wraps at 64 bits, which lets the scalar path and the numpy batch path
produce identical indices.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BitVector",
    "HashFamily",
    "hash_indices",
    "set_indices",
    "test_indices",
    "splitmix64",
]

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_BYTE_MASKS = np.array([1, 2, 4, 8, 16, 32, 64, 128], dtype=np.uint8)


def splitmix64(x: int) -> int:
    """One splitmix64 step; doubles as a cheap 64-bit mixer for seed derivation."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _avalanche(h: int) -> int:
    # murmur3 fmix64: FNV alone has weak avalanche in the low bits
    h ^= h >> 33
    h = (h * 0xFF51AFD7ED558CCD) & _MASK64
    h ^= h >> 33
    h = (h * 0xC4CEB9FE1A85EC53) & _MASK64
    return h ^ (h >> 33)


def _avalanche_array(h: np.ndarray) -> np.ndarray:
    h = h ^ (h >> np.uint64(33))
    h = h * np.uint64(0xFF51AFD7ED558CCD)
    h = h ^ (h >> np.uint64(33))
    h = h * np.uint64(0xC4CEB9FE1A85EC53)
    return h ^ (h >> np.uint64(33))


def _base_hash(data: bytes, salt: int) -> int:
    h = (_FNV_OFFSET ^ salt) & _MASK64
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return _avalanche(h)


def _item_bytes(item: bytes | str) -> bytes:
    if isinstance(item, bytes):
        return item
    if isinstance(item, str):
        return item.encode("utf-8")
    if isinstance(item, (bytearray, memoryview)):
        return bytes(item)
    raise TypeError(f"items must be bytes or str, got {type(item).__name__}")


class HashFamily:
    """Indexed hash family h_i(x) = (h_a(x) + i*h_b(x)) mod R over byte strings.

    ``lane`` derives an independent-looking family from the same master
    seed by remixing the base hashes. Per-item base hashes can then be
    computed once and remixed cheaply per lane, which the disjoint
    filter uses for its per-group filters and the sandwiched filter for
    its initial filter.
    """

    __slots__ = ("seed", "lane", "_salt_a", "_salt_b", "_lane_a", "_lane_b")

    def __init__(self, seed: int, lane: int = 0):
        self.seed = seed & _MASK64
        self.lane = int(lane)
        self._salt_a = splitmix64(self.seed ^ 0x243F6A8885A308D3)
        self._salt_b = splitmix64(self.seed ^ 0x13198A2E03707344)
        if self.lane:
            base = splitmix64(self.seed ^ ((self.lane * 0xA24BAED4963EE407) & _MASK64))
            self._lane_a = base
            self._lane_b = splitmix64(base)
        else:
            self._lane_a = 0
            self._lane_b = 0

    def base_pair(self, item: bytes | str) -> tuple[int, int]:
        """Lane-independent base hashes of one item."""
        data = _item_bytes(item)
        return _base_hash(data, self._salt_a), _base_hash(data, self._salt_b)

    def base_pairs(self, items: Iterable[bytes | str]) -> tuple[np.ndarray, np.ndarray]:
        """Base hashes for a batch of items, as two uint64 arrays."""
        items = list(items)
        a = np.empty(len(items), dtype=np.uint64)
        b = np.empty(len(items), dtype=np.uint64)
        salt_a, salt_b = self._salt_a, self._salt_b
        for i, item in enumerate(items):
            data = _item_bytes(item)
            a[i] = _base_hash(data, salt_a)
            b[i] = _base_hash(data, salt_b)
        return a, b

    def pair(self, item: bytes | str) -> tuple[int, int]:
        """Final (h_a, h_b) for this lane; h_b is forced odd."""
        a, b = self.base_pair(item)
        if self.lane:
            a = _avalanche(a ^ self._lane_a)
            b = _avalanche(b ^ self._lane_b)
        return a, b | 1

    def remix_pairs(self, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Turn base-hash arrays into this lane's (h_a, h_b) arrays."""
        if self.lane:
            a = _avalanche_array(a ^ np.uint64(self._lane_a))
            b = _avalanche_array(b ^ np.uint64(self._lane_b))
        return a, b | np.uint64(1)

    def indices(self, item: bytes | str, k: int, r: int) -> list[int]:
        """First k member hashes of ``item`` reduced to [0, r)."""
        if r < 1:
            raise ValueError(f"hash range r must be >= 1, got {r}")
        if k < 0:
            raise ValueError(f"hash count k must be >= 0, got {k}")
        a, b = self.pair(item)
        return [((a + i * b) & _MASK64) % r for i in range(k)]


def hash_indices(item: bytes | str, k: int, r: int, family: HashFamily) -> list[int]:
    """Evaluate the first k members of ``family`` at ``item``, modulo r."""
    return family.indices(item, k, r)


class BitVector:
    """Fixed-length packed bit array; insert-only and freezable.

    Bit i lives at byte i // 8, position i % 8 (LSB first), the same
    layout used by the serialization container. After :meth:`freeze`
    the vector is immutable and safe for concurrent readers.
    """

    __slots__ = ("_nbits", "_buf", "_frozen")

    def __init__(self, length_bits: int):
        if length_bits < 1:
            raise ValueError(f"bit vector length must be >= 1, got {length_bits}")
        self._nbits = int(length_bits)
        self._buf = np.zeros((self._nbits + 7) // 8, dtype=np.uint8)
        self._frozen = False

    @property
    def length_bits(self) -> int:
        return self._nbits

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "BitVector":
        self._frozen = True
        return self

    def _writable(self) -> None:
        if self._frozen:
            raise RuntimeError("cannot set bits on a frozen BitVector")

    def set_bits(self, indices: Iterable[int]) -> None:
        self._writable()
        buf, nbits = self._buf, self._nbits
        for idx in indices:
            if not 0 <= idx < nbits:
                raise IndexError(f"bit index {idx} out of range for {nbits}-bit vector")
            buf[idx >> 3] |= _BYTE_MASKS[idx & 7]

    def test_bits(self, indices: Iterable[int]) -> bool:
        """True iff every listed bit is set; vacuously true for no indices."""
        buf, nbits = self._buf, self._nbits
        for idx in indices:
            if not 0 <= idx < nbits:
                raise IndexError(f"bit index {idx} out of range for {nbits}-bit vector")
            if not buf[idx >> 3] & _BYTE_MASKS[idx & 7]:
                return False
        return True

    def set_hashed(self, a: np.ndarray, b: np.ndarray, k: int) -> None:
        """Set the first k double-hashing positions for a batch of items."""
        self._writable()
        if k < 0:
            raise ValueError(f"hash count k must be >= 0, got {k}")
        if k == 0 or len(a) == 0:
            return
        r = np.uint64(self._nbits)
        if k > 64 and len(a) < 4096:
            # many probes over few items: outer products beat k passes
            slab = max(1, 2**22 // len(a))
            for start in range(0, k, slab):
                cols = np.arange(start, min(k, start + slab), dtype=np.uint64)
                idx = (a[:, None] + b[:, None] * cols[None, :]).ravel() % r
                byte = (idx >> np.uint64(3)).astype(np.intp)
                np.bitwise_or.at(self._buf, byte,
                                 _BYTE_MASKS[(idx & np.uint64(7)).astype(np.intp)])
            return
        for i in range(k):
            idx = (a + b * np.uint64(i)) % r
            byte = (idx >> np.uint64(3)).astype(np.intp)
            np.bitwise_or.at(self._buf, byte, _BYTE_MASKS[(idx & np.uint64(7)).astype(np.intp)])

    def test_hashed(self, a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
        """Boolean array: are all of the first k positions set, per item."""
        if k < 0:
            raise ValueError(f"hash count k must be >= 0, got {k}")
        n = len(a)
        result = np.ones(n, dtype=bool)
        if k == 0 or n == 0:
            return result
        r = np.uint64(self._nbits)
        buf = self._buf
        pos = np.arange(n)
        i = 0
        while i < k and pos.size:
            if k - i > 64 and pos.size < 2048:
                # few survivors, many probes left: outer-product slabs
                slab = max(1, 2**22 // pos.size)
                cols = np.arange(i, min(k, i + slab), dtype=np.uint64)
                idx = (a[:, None] + b[:, None] * cols[None, :]) % r
                hit = ((buf[(idx >> np.uint64(3)).astype(np.intp)]
                        & _BYTE_MASKS[(idx & np.uint64(7)).astype(np.intp)]) != 0).all(axis=1)
                i += len(cols)
            else:
                idx = (a + b * np.uint64(i)) % r
                hit = (buf[(idx >> np.uint64(3)).astype(np.intp)]
                       & _BYTE_MASKS[(idx & np.uint64(7)).astype(np.intp)]) != 0
                i += 1
            if not hit.all():
                result[pos[~hit]] = False
                pos, a, b = pos[hit], a[hit], b[hit]
        return result

    def popcount(self) -> int:
        return int(np.unpackbits(self._buf).sum())

    def load_fraction(self) -> float:
        return self.popcount() / self._nbits

    def to_bytes(self) -> bytes:
        return self._buf.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, length_bits: int, frozen: bool = True) -> "BitVector":
        bv = cls(length_bits)
        expected = (length_bits + 7) // 8
        if len(data) != expected:
            raise ValueError(f"expected {expected} bytes for {length_bits} bits, got {len(data)}")
        bv._buf[:] = np.frombuffer(data, dtype=np.uint8)
        bv._frozen = frozen
        return bv

    def __repr__(self) -> str:
        return f"BitVector({self._nbits} bits, {self.popcount()} set)"


def set_indices(bv: BitVector, indices: Sequence[int]) -> BitVector:
    """Set every listed bit; returns the same (updated) vector."""
    bv.set_bits(indices)
    return bv


def test_indices(bv: BitVector, indices: Sequence[int]) -> bool:
    """True iff every listed bit is set (empty sequence tests true)."""
    return bv.test_bits(indices)
