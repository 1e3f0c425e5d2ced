"""Keyed toy hash and the seeded shuffle that realises the disarrangement secret.

Both are built on the SplitMix64 step so results are bit-exact on any platform.
The hash is *not* cryptographic; it only has to be deterministic and mix well.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Callable, Iterator, Sequence

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

HashFunction = Callable[[bytes, int], Sequence[int]]


def mix64(s: int) -> tuple[int, int]:
    """One SplitMix64 step: returns ``(new_state, output)``."""
    s = (s + GOLDEN_GAMMA) & MASK64
    z = s
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return s, z ^ (z >> 31)


def mix64_out(s: int) -> int:
    return mix64(s)[1]


def splitmix_stream(seed: int) -> Iterator[int]:
    state = seed & MASK64
    while True:
        state, out = mix64(state)
        yield out


def derive_seed(seed: int, tag: str) -> int:
    """Independent 64-bit sub-seed for a named random stream."""
    state = seed & MASK64
    for ch in tag.encode():
        state = mix64_out(state ^ ch)
    return mix64_out(state)


def keyed_hash(key: int, msg: bytes, hash_len: int) -> tuple[int, ...]:
    """Digest bits, most significant first: ``(x'_{M-1}, ..., x'_0)``."""
    if hash_len < 1:
        raise ValueError("hash_len must be >= 1")
    state = key & MASK64
    for i, b in enumerate(msg):
        state = mix64_out(state ^ (b + 0x100 * (i % 251)))
    bits: list[int] = []
    stream = splitmix_stream(state)
    for _ in range(-(-hash_len // 64)):
        word = next(stream)
        bits.extend((word >> (63 - j)) & 1 for j in range(64))
    return tuple(bits[:hash_len])


@dataclass(frozen=True)
class KeyedHash:
    """Shared hash ``H`` with its secret key bound; swap in any ``HashFunction``."""

    key: int
    hash_len: int

    def __call__(self, msg: bytes) -> tuple[int, ...]:
        return keyed_hash(self.key, msg, self.hash_len)


def shuffle_indices(l: int, n_total: int) -> list[int]:
    """Fisher-Yates permutation of ``range(n_total)`` driven by ``l``."""
    arr = list(range(n_total))
    stream = splitmix_stream(l)
    for i in range(n_total - 1, 0, -1):
        j = next(stream) % (i + 1)
        arr[i], arr[j] = arr[j], arr[i]
    return arr


def sampling_positions(l: int, n_total: int, n_sampling: int) -> tuple[int, ...]:
    """Positions taken by the sampling pairs, in assignment order.

    Treat as a set when only membership matters; the order fixes which sampling
    pair lands where.
    """
    if n_total < 0 or not 0 <= n_sampling <= n_total:
        raise ValueError(f"need 0 <= n_sampling <= n_total, got {n_sampling}, {n_total}")
    return tuple(shuffle_indices(l, n_total)[:n_sampling])


# --- fixture vectors --------------------------------------------------------


@dataclass(frozen=True)
class HashVector:
    key: int
    message: bytes
    length: int
    digest_hex: str


@dataclass(frozen=True)
class PermVector:
    l: int
    n_total: int
    n_sampling: int
    positions: tuple[int, ...]


def bits_to_hex(bits: Sequence[int]) -> str:
    padded = list(bits) + [0] * (-len(bits) % 4)
    value = 0
    for b in padded:
        value = value << 1 | b
    return format(value, f"0{len(padded) // 4}x")


def _data_lines(name: str) -> list[list[str]]:
    text = resources.files("qpcsim").joinpath("data", name).read_text()
    return [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


def load_hash_vectors() -> list[HashVector]:
    return [
        HashVector(int(k, 16), b"" if m == "-" else bytes.fromhex(m), int(n), d)
        for k, m, n, d in _data_lines("hash_vectors.txt")
    ]


def load_perm_vectors() -> list[PermVector]:
    return [
        PermVector(int(l, 16), int(n), int(k), () if p == "-" else tuple(int(v) for v in p.split(",")))
        for l, n, k, p in _data_lines("perm_vectors.txt")
    ]


def verify_vectors() -> list[dict]:
    """Recompute every fixture vector; one result dict per vector."""
    results = []
    for v in load_hash_vectors():
        got = bits_to_hex(keyed_hash(v.key, v.message, v.length))
        results.append({
            "kind": "hash",
            "key": format(v.key, "016x"),
            "length": v.length,
            "expected": v.digest_hex,
            "got": got,
            "ok": got == v.digest_hex,
        })
    for v in load_perm_vectors():
        got = sampling_positions(v.l, v.n_total, v.n_sampling)
        results.append({
            "kind": "permutation",
            "l": format(v.l, "016x"),
            "n_total": v.n_total,
            "n_sampling": v.n_sampling,
            "expected": list(v.positions),
            "got": list(got),
            "ok": got == v.positions,
        })
    return results
