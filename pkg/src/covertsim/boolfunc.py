"""Boolean function families wrapped by every oracle in the library.

A BooleanFunction maps n input bits to w output bits. Inputs and outputs are
bit-packed ints with the convention of :mod:`covertsim.gf2`. Closed-form
bodies (Parity, Quadratic, ...) exist so that protocols at n = 10-12 avoid
2^n * n truth-table storage; TruthTable is the universal fallback.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .gf2 import bits_to_str, dot, parity, str_to_bits

MAX_TABLE_ARITY = 20  # eval_all materializes 2^n entries


@dataclass(frozen=True)
class TruthTable:
    values: tuple[int, ...]  # one w-bit value per input, index = input bits


@dataclass(frozen=True)
class Parity:
    s: int  # f(x) = s·x


@dataclass(frozen=True)
class Quadratic:
    rows: tuple[int, ...]  # row masks of upper-triangular A; f(x) = x^T A x

    def __post_init__(self):
        n = len(self.rows)
        for i, row in enumerate(self.rows):
            if row & ((1 << i) - 1):
                raise ValueError("Quadratic body must be upper-triangular")
            if row >> n:
                raise ValueError("row mask wider than arity")


@dataclass(frozen=True)
class PaddedXor:
    f: "BooleanFunction"  # h(x, y) = f(x) xor g(y), width 1
    g: "BooleanFunction"


@dataclass(frozen=True)
class TensorPower:
    f: "BooleanFunction"  # F(x_1..x_m) = f(x_1) xor ... xor f(x_m)
    m: int


@dataclass(frozen=True)
class SimonFunction:
    """Width-n function with f(x) = f(x xor s); injective when s = 0.

    labels[i] is the output attached to the i-th coset representative in
    increasing order (representatives are the x with x <= x xor s). The
    labeling is instance data: the promise fixes only the coset structure.
    """

    s: int
    labels: tuple[int, ...]

    # rank lookup built lazily per instance
    _rank: dict = field(default_factory=dict, compare=False, hash=False, repr=False)


Body = Union[TruthTable, Parity, Quadratic, PaddedXor, TensorPower, SimonFunction]


@dataclass(frozen=True)
class BooleanFunction:
    n: int
    w: int
    body: Body

    def __post_init__(self):
        b = self.body
        if isinstance(b, TruthTable) and len(b.values) != 1 << self.n:
            raise ValueError("truth table length must be 2^n")
        if isinstance(b, (Parity, Quadratic)) and self.w != 1:
            raise ValueError("Parity/Quadratic bodies have width 1")
        if isinstance(b, Quadratic) and len(b.rows) != self.n:
            raise ValueError("Quadratic needs one row mask per input bit")
        if isinstance(b, PaddedXor) and (
            self.w != 1 or self.n != b.f.n + b.g.n or b.f.w != 1 or b.g.w != 1
        ):
            raise ValueError("PaddedXor pads two width-1 functions")
        if isinstance(b, TensorPower) and (
            self.n != b.f.n * b.m or self.w != b.f.w
        ):
            raise ValueError("TensorPower arity mismatch")
        if isinstance(b, SimonFunction):
            if self.w != self.n:
                raise ValueError("Simon functions have width n")
            n_cosets = 1 << self.n if b.s == 0 else 1 << (self.n - 1)
            if len(b.labels) != n_cosets:
                raise ValueError("labeling must cover every coset")
            if len(set(b.labels)) != n_cosets:
                raise ValueError("Simon labeling must be injective")

    def __call__(self, x: int) -> int:
        return evaluate(self, x)


def evaluate(f: BooleanFunction, x: int) -> int:
    """f(x) as a w-bit int. Works at any arity (no table materialized)."""
    if x >> f.n:
        raise ValueError(f"input has more than {f.n} bits")
    b = f.body
    if isinstance(b, TruthTable):
        return b.values[x]
    if isinstance(b, Parity):
        return dot(b.s, x)
    if isinstance(b, Quadratic):
        acc = 0
        for i in range(f.n):
            if (x >> i) & 1:
                acc ^= dot(b.rows[i], x)
        return acc
    if isinstance(b, PaddedXor):
        lo = x & ((1 << b.f.n) - 1)
        return evaluate(b.f, lo) ^ evaluate(b.g, x >> b.f.n)
    if isinstance(b, TensorPower):
        mask = (1 << b.f.n) - 1
        acc = 0
        for _ in range(b.m):
            acc ^= evaluate(b.f, x & mask)
            x >>= b.f.n
        return acc
    if isinstance(b, SimonFunction):
        rep = x if b.s == 0 else min(x, x ^ b.s)
        if not b._rank:
            reps = (
                range(1 << f.n)
                if b.s == 0
                else [v for v in range(1 << f.n) if v <= (v ^ b.s)]
            )
            b._rank.update({v: i for i, v in enumerate(reps)})
        return b.labels[b._rank[rep]]
    raise TypeError(f"unknown body {type(b)}")


@lru_cache(maxsize=256)
def _table_cache(f: BooleanFunction) -> np.ndarray:
    n = f.n
    b = f.body
    xs = np.arange(1 << n, dtype=np.uint64)
    if isinstance(b, TruthTable):
        return np.array(b.values, dtype=np.uint64)
    if isinstance(b, Parity):
        return (np.bitwise_count(xs & np.uint64(b.s)) & 1).astype(np.uint64)
    if isinstance(b, Quadratic):
        acc = np.zeros(1 << n, dtype=np.uint64)
        for i in range(n):
            xi = (xs >> np.uint64(i)) & np.uint64(1)
            acc ^= xi & (np.bitwise_count(xs & np.uint64(b.rows[i])) & 1).astype(np.uint64)
        return acc
    if isinstance(b, PaddedXor):
        tf = _table_cache(b.f)
        tg = _table_cache(b.g)
        return tf[xs & np.uint64((1 << b.f.n) - 1)] ^ tg[xs >> np.uint64(b.f.n)]
    if isinstance(b, TensorPower):
        tf = _table_cache(b.f)
        acc = np.zeros(1 << n, dtype=np.uint64)
        y = xs.copy()
        mask = np.uint64((1 << b.f.n) - 1)
        for _ in range(b.m):
            acc ^= tf[y & mask]
            y >>= np.uint64(b.f.n)
        return acc
    # SimonFunction and anything else: pointwise
    return np.array([evaluate(f, int(x)) for x in xs], dtype=np.uint64)


def eval_all(f: BooleanFunction) -> np.ndarray:
    """Vector of f(x) over all 2^n inputs (little-endian index)."""
    if f.n > MAX_TABLE_ARITY:
        raise ValueError(f"arity {f.n} too large to tabulate")
    return _table_cache(f)


def sign_vector(f: BooleanFunction) -> np.ndarray:
    """(-1)^f(x) over all inputs; requires width 1."""
    if f.w != 1:
        raise ValueError("sign vector requires a width-1 function")
    return 1.0 - 2.0 * eval_all(f).astype(np.float64)


# --- constructors -----------------------------------------------------------


def truth_table(values: Sequence[int], w: int = 1) -> BooleanFunction:
    n = (len(values) - 1).bit_length()
    return BooleanFunction(n=n, w=w, body=TruthTable(values=tuple(int(v) for v in values)))


def parity_fn(s: int, n: int) -> BooleanFunction:
    return BooleanFunction(n=n, w=1, body=Parity(s=s))


def quadratic_fn(rows: Sequence[int], n: int) -> BooleanFunction:
    return BooleanFunction(n=n, w=1, body=Quadratic(rows=tuple(rows)))


def quadratic_from_matrix(mat: Sequence[Sequence[int]]) -> BooleanFunction:
    n = len(mat)
    rows = [sum((int(mat[i][j]) & 1) << j for j in range(n)) for i in range(n)]
    return quadratic_fn(rows, n)


def padded_xor(f: BooleanFunction, g: BooleanFunction) -> BooleanFunction:
    return BooleanFunction(n=f.n + g.n, w=1, body=PaddedXor(f=f, g=g))


def tensor_power(f: BooleanFunction, m: int) -> BooleanFunction:
    return BooleanFunction(n=f.n * m, w=f.w, body=TensorPower(f=f, m=m))


def constant_fn(n: int, value: int = 0) -> BooleanFunction:
    return truth_table([value] * (1 << n), w=max(1, value.bit_length()))


def simon_fn(s: int, labels: Sequence[int], n: int) -> BooleanFunction:
    return BooleanFunction(n=n, w=n, body=SimonFunction(s=s, labels=tuple(labels)))


def random_truth_table(n: int, rng, w: int = 1) -> BooleanFunction:
    vals = rng.integers(0, 1 << w, size=1 << n)
    return truth_table([int(v) for v in vals], w=w)


def random_simon_fn(n: int, s: int, rng) -> BooleanFunction:
    """Uniformly random injective labeling for the given period (0 = 1-to-1)."""
    n_cosets = 1 << n if s == 0 else 1 << (n - 1)
    labels = rng.permutation(1 << n)[:n_cosets]
    return simon_fn(s, [int(v) for v in labels], n)


# --- Walsh-Hadamard and Forrelation -----------------------------------------


def walsh_hadamard(v: np.ndarray) -> np.ndarray:
    """Unnormalized transform W[x] = sum_y (-1)^{x·y} v[y] (in O(n 2^n))."""
    out = np.array(v, dtype=np.float64, copy=True)
    h = 1
    while h < len(out):
        out = out.reshape(-1, 2 * h)
        a = out[:, :h].copy()
        b = out[:, h:].copy()
        out[:, :h] = a + b
        out[:, h:] = a - b
        out = out.reshape(-1)
        h *= 2
    return out


def _phi_double_sum(f: BooleanFunction, g: BooleanFunction) -> float:
    n = f.n
    sf = sign_vector(f)
    sg = sign_vector(g)
    xs = np.arange(1 << n, dtype=np.uint64)
    chi = 1.0 - 2.0 * (np.bitwise_count(xs[:, None] & xs[None, :]) & 1).astype(
        np.float64
    )
    return float(sf @ chi @ sg) / 2 ** (3 * n / 2)


def _phi_walsh(f: BooleanFunction, g: BooleanFunction) -> float:
    sf = sign_vector(f)
    wg = walsh_hadamard(sign_vector(g))
    return float(sf @ wg) / 2 ** (3 * f.n / 2)


def forrelation_phi(f: BooleanFunction, g: BooleanFunction) -> float:
    """Phi(f, g) = 2^{-3n/2} sum_{x,y} (-1)^{f(x) + x·y + g(y)}, exactly.

    Literal double sum below n = 8, fast transform above; the two paths are
    tested against each other.
    """
    if f.n != g.n:
        raise ValueError("arity mismatch")
    if f.w != 1 or g.w != 1:
        raise ValueError("forrelation takes width-1 functions")
    if f.n > 14:
        raise ValueError("brute-force bound is n <= 14")
    if f.n <= 8:
        return _phi_double_sum(f, g)
    return _phi_walsh(f, g)


# --- serialization -----------------------------------------------------------


def _bits_to_hex(bits: Sequence[int]) -> str:
    by = bytearray((len(bits) + 7) // 8)
    for i, b in enumerate(bits):
        if b:
            by[i // 8] |= 1 << (i % 8)
    return by.hex()


def _hex_to_bits(h: str, count: int) -> list[int]:
    by = bytes.fromhex(h)
    return [(by[i // 8] >> (i % 8)) & 1 for i in range(count)]


def to_json_dict(f: BooleanFunction) -> dict:
    """{kind, n, w, payload} per the wire format (hex-encoded bit payloads)."""
    b = f.body
    if isinstance(b, TruthTable):
        bits = []
        for v in b.values:
            bits.extend((v >> j) & 1 for j in range(f.w))
        return {"kind": "truth_table", "n": f.n, "w": f.w, "payload": _bits_to_hex(bits)}
    if isinstance(b, Parity):
        return {"kind": "parity", "n": f.n, "w": 1, "payload": bits_to_str(b.s, f.n)}
    if isinstance(b, Quadratic):
        bits = []
        for i in range(f.n):
            bits.extend((b.rows[i] >> j) & 1 for j in range(f.n))
        return {"kind": "quadratic", "n": f.n, "w": 1, "payload": _bits_to_hex(bits)}
    if isinstance(b, PaddedXor):
        return {
            "kind": "padded_xor",
            "n": f.n,
            "w": 1,
            "payload": {"f": to_json_dict(b.f), "g": to_json_dict(b.g)},
        }
    if isinstance(b, TensorPower):
        return {
            "kind": "tensor_power",
            "n": f.n,
            "w": f.w,
            "payload": {"f": to_json_dict(b.f), "m": b.m},
        }
    if isinstance(b, SimonFunction):
        return {
            "kind": "simon",
            "n": f.n,
            "w": f.w,
            "payload": {
                "period": bits_to_str(b.s, f.n),
                "labels": [bits_to_str(v, f.n) for v in b.labels],
            },
        }
    raise TypeError(f"unknown body {type(b)}")


def from_json_dict(d: dict) -> BooleanFunction:
    kind, n, w, payload = d["kind"], d["n"], d["w"], d["payload"]
    if kind == "truth_table":
        bits = _hex_to_bits(payload, (1 << n) * w)
        values = [
            sum(bits[i * w + j] << j for j in range(w)) for i in range(1 << n)
        ]
        return truth_table(values, w=w)
    if kind == "parity":
        return parity_fn(str_to_bits(payload), n)
    if kind == "quadratic":
        bits = _hex_to_bits(payload, n * n)
        rows = [sum(bits[i * n + j] << j for j in range(n)) for i in range(n)]
        return quadratic_fn(rows, n)
    if kind == "padded_xor":
        return padded_xor(from_json_dict(payload["f"]), from_json_dict(payload["g"]))
    if kind == "tensor_power":
        return tensor_power(from_json_dict(payload["f"]), payload["m"])
    if kind == "simon":
        return simon_fn(
            str_to_bits(payload["period"]),
            [str_to_bits(v) for v in payload["labels"]],
            n,
        )
    raise ValueError(f"unknown kind {kind!r}")
