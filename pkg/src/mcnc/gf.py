"""Arithmetic over the binary extension fields GF(2^m) for m in {1, 4, 8}.

Symbols are small ints in [0, 2^m). Addition is XOR. Multiplication is
carry-less polynomial multiplication reduced by a fixed irreducible
polynomial per field size:

    m = 1   x + 1               0b11
    m = 4   x^4 + x + 1         0b10011
    m = 8   x^8 + x^4 + x^3 + x + 1   0x11b

Only these (m, poly) pairs are accepted. Multiplication and inversion go
through precomputed tables; the tables are built once per field size and
shared between FieldSpec instances.
"""

from __future__ import annotations

from typing import Dict, Tuple

import numpy as np


#: Allowed reduction polynomials, by extension degree.
POLYNOMIALS: Dict[int, int] = {
    1: 0b11,
    4: 0b10011,
    8: 0x11B,
}

#: Symbols packed per byte, by extension degree.
_PER_BYTE = {1: 8, 4: 2, 8: 1}


class FieldSpecError(ValueError):
    """Raised for an (m, poly) pair outside the allowed table."""


class ZeroInverseError(ZeroDivisionError):
    """Raised when inverting the zero symbol."""


class LengthMismatchError(ValueError):
    """Raised when two symbol vectors of different lengths are combined."""


class FieldMismatchError(ValueError):
    """Raised when operands belong to different fields."""


def _mul_raw(a: int, b: int, m: int, poly: int) -> int:
    # Shift-and-add carry-less product with reduction folded into each shift,
    # so intermediate values never exceed m bits.
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        a <<= 1
        if a & (1 << m):
            a ^= poly
        b >>= 1
    return acc


def _build_tables(m: int, poly: int) -> Tuple[np.ndarray, np.ndarray]:
    q = 1 << m
    mul = np.zeros((q, q), dtype=np.uint8)
    for a in range(q):
        for b in range(a, q):
            p = _mul_raw(a, b, m, poly)
            mul[a, b] = p
            mul[b, a] = p
    inv = np.zeros(q, dtype=np.uint8)
    for a in range(1, q):
        row = mul[a]
        hits = np.nonzero(row == 1)[0]
        if len(hits) != 1:
            raise FieldSpecError(f"0x{poly:x} does not define a field for m={m}")
        inv[a] = hits[0]
    mul.setflags(write=False)
    inv.setflags(write=False)
    return mul, inv


_TABLE_CACHE: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}


class FieldSpec:
    """A concrete field GF(2^m), with its multiplication and inverse tables."""

    __slots__ = ("m", "poly", "order", "mul_table", "inv_table")

    def __init__(self, m: int, poly: int | None = None):
        if m not in POLYNOMIALS:
            raise FieldSpecError(f"unsupported extension degree m={m}")
        if poly is None:
            poly = POLYNOMIALS[m]
        elif poly != POLYNOMIALS[m]:
            raise FieldSpecError(
                f"polynomial 0x{poly:x} is not the fixed choice for m={m}"
            )
        self.m = m
        self.poly = poly
        self.order = 1 << m
        if m not in _TABLE_CACHE:
            _TABLE_CACHE[m] = _build_tables(m, poly)
        self.mul_table, self.inv_table = _TABLE_CACHE[m]

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and other.m == self.m

    def __hash__(self):
        return hash(("FieldSpec", self.m))

    def __repr__(self):
        return f"FieldSpec(m={self.m}, poly=0x{self.poly:x})"


def _check_symbol(spec: FieldSpec, value: int, name: str) -> None:
    if not 0 <= value < spec.order:
        raise ValueError(f"{name}={value!r} outside GF(2^{spec.m})")


def gf_mul(spec: FieldSpec, a: int, b: int) -> int:
    """Product of two symbols."""
    _check_symbol(spec, a, "a")
    _check_symbol(spec, b, "b")
    return int(spec.mul_table[a, b])


def gf_inv(spec: FieldSpec, a: int) -> int:
    """Multiplicative inverse of a nonzero symbol."""
    _check_symbol(spec, a, "a")
    if a == 0:
        raise ZeroInverseError("zero has no multiplicative inverse")
    return int(spec.inv_table[a])


def vec_axpy(spec: FieldSpec, dst, c: int, src) -> None:
    """In-place fused update ``dst[i] ^= c * src[i]``.

    ``dst`` and ``src`` may be numpy uint8 arrays of symbols or
    :class:`SymbolVector` instances. ``dst`` is modified in place.
    """
    if isinstance(dst, SymbolVector):
        if isinstance(src, SymbolVector) and src.field != dst.field:
            raise FieldMismatchError("operands from different fields")
        if dst.field != spec:
            raise FieldMismatchError("dst does not belong to spec's field")
        dst = dst.symbols
    if isinstance(src, SymbolVector):
        if src.field != spec:
            raise FieldMismatchError("src does not belong to spec's field")
        src = src.symbols
    _check_symbol(spec, c, "c")
    if len(dst) != len(src):
        raise LengthMismatchError(f"len(dst)={len(dst)} != len(src)={len(src)}")
    if c == 0:
        return
    np.bitwise_xor(dst, spec.mul_table[c].take(src), out=dst)


class SymbolVector:
    """A vector of field symbols with a defined wire packing.

    For m=8 each symbol is one byte and for m=1 eight symbols pack per byte;
    for m=4 two symbols pack per byte. Packing is big-end first: the first
    symbol lands in the high nibble (m=4) or the most significant bit (m=1).
    """

    __slots__ = ("field", "symbols")

    def __init__(self, field: FieldSpec, symbols):
        arr = np.asarray(symbols, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("symbol vectors are one-dimensional")
        if arr.size and int(arr.max()) >= field.order:
            raise ValueError(f"symbol out of range for GF(2^{field.m})")
        self.field = field
        self.symbols = arr

    def __len__(self):
        return len(self.symbols)

    def __eq__(self, other):
        return (
            isinstance(other, SymbolVector)
            and other.field == self.field
            and len(other.symbols) == len(self.symbols)
            and bool(np.all(other.symbols == self.symbols))
        )

    def __repr__(self):
        return f"SymbolVector(m={self.field.m}, n={len(self.symbols)})"

    def copy(self) -> "SymbolVector":
        out = SymbolVector.__new__(SymbolVector)
        out.field = self.field
        out.symbols = self.symbols.copy()
        return out

    def pack(self) -> bytes:
        m = self.field.m
        s = self.symbols
        if m == 8:
            return s.tobytes()
        if m == 4:
            if len(s) % 2:
                s = np.append(s, np.uint8(0))
            return ((s[0::2] << 4) | s[1::2]).astype(np.uint8).tobytes()
        return np.packbits(s).tobytes()

    @classmethod
    def unpack(cls, field: FieldSpec, data: bytes, n_symbols: int) -> "SymbolVector":
        if packed_size(field, n_symbols) != len(data):
            raise LengthMismatchError(
                f"{len(data)} bytes cannot hold {n_symbols} symbols of GF(2^{field.m})"
            )
        raw = np.frombuffer(data, dtype=np.uint8)
        if field.m == 8:
            symbols = raw.copy()
        elif field.m == 4:
            symbols = np.empty(2 * len(raw), dtype=np.uint8)
            symbols[0::2] = raw >> 4
            symbols[1::2] = raw & 0x0F
            symbols = symbols[:n_symbols]
        else:
            symbols = np.unpackbits(raw)[:n_symbols]
        out = cls.__new__(cls)
        out.field = field
        out.symbols = symbols
        return out


def packed_size(spec: FieldSpec, n_symbols: int) -> int:
    """Bytes needed to carry ``n_symbols`` symbols on the wire."""
    per = _PER_BYTE[spec.m]
    return (n_symbols + per - 1) // per
