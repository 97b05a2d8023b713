"""Binary narrow-sense BCH codes over GF(2^m) with bounded-distance decoding.

Decoding runs syndromes -> Berlekamp-Massey -> Chien search and corrects
any pattern of at most t errors.  Field elements are ints in 0..2^m-1 with
exp/log tables; polynomials over GF(2) are Python ints with bit i holding
the coefficient of x^i.

One primitive polynomial is fixed per field degree for reproducibility:

    m   polynomial
    3   x^3 + x + 1
    4   x^4 + x + 1
    5   x^5 + x^2 + 1
    6   x^6 + x + 1
    7   x^7 + x^3 + 1
    8   x^8 + x^4 + x^3 + x^2 + 1
    9   x^9 + x^4 + 1
    10  x^10 + x^3 + 1
    11  x^11 + x^2 + 1
    12  x^12 + x^6 + x^4 + x + 1
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

PRIMITIVE_POLY = {
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011101,
    9: 0b1000010001,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000001010011,
}


class GfContext:
    """GF(2^m) arithmetic through exp/log tables."""

    def __init__(self, m: int, primitive_poly: int):
        self.m = m
        self.primitive_poly = primitive_poly
        self.order = (1 << m) - 1  # size of the multiplicative group
        exp = np.zeros(2 * self.order, dtype=np.int64)
        log = np.zeros(self.order + 1, dtype=np.int64)
        x = 1
        for i in range(self.order):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & (1 << m):
                x ^= primitive_poly
        if x != 1:
            raise ValidationError(f"0x{primitive_poly:x} is not primitive for m={m}")
        exp[self.order:] = exp[: self.order]  # wraparound spares a mod
        self.exp = exp
        self.log = log

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        return int(self.exp[self.order - self.log[a]])

    def alpha_pow(self, i: int) -> int:
        return int(self.exp[i % self.order])


def gf_build(m: int) -> GfContext:
    """Field context for GF(2^m) over the built-in primitive polynomial."""
    if m not in PRIMITIVE_POLY:
        raise ValidationError(f"m must be one of {sorted(PRIMITIVE_POLY)}")
    return GfContext(m, PRIMITIVE_POLY[m])


# ---------------------------------------------------------------------------
# GF(2) polynomials as ints (bit i = coefficient of x^i)

def _poly_deg(a: int) -> int:
    return a.bit_length() - 1


def _poly_mul(a: int, b: int) -> int:
    out = 0
    while a:
        low = a & -a
        out ^= b << (low.bit_length() - 1)
        a ^= low
    return out


def _poly_mod(a: int, b: int) -> int:
    db = _poly_deg(b)
    while a.bit_length() - 1 >= db:
        a ^= b << (a.bit_length() - 1 - db)
    return a


def _minimal_poly(ctx: GfContext, i: int) -> int:
    """Minimal polynomial over GF(2) of alpha^i (product over the 2-cyclotomic coset)."""
    coset = []
    c = i % ctx.order
    while c not in coset:
        coset.append(c)
        c = (2 * c) % ctx.order
    # multiply out prod (x + alpha^c); coefficients live in GF(2^m) but the
    # result is a GF(2) polynomial
    coeffs = [1]
    for c in coset:
        root = ctx.alpha_pow(c)
        nxt = [0] * (len(coeffs) + 1)
        for d, coeff in enumerate(coeffs):
            if coeff:
                nxt[d + 1] ^= coeff
                nxt[d] ^= ctx.mul(root, coeff)
        coeffs = nxt
    if any(coeff not in (0, 1) for coeff in coeffs):
        raise AssertionError("minimal polynomial has coefficients outside GF(2)")
    out = 0
    for d, coeff in enumerate(coeffs):
        out |= coeff << d
    return out


@dataclass(frozen=True)
class BchCode:
    """Narrow-sense binary BCH code: N = 2^m - 1, designed distance 2t + 1."""

    ctx: GfContext
    N: int
    t: int
    generator: int
    k: int


@dataclass(frozen=True)
class DecodeOutcome:
    """Result of a bounded-distance attempt; ``failure`` is a status, not an error."""

    status: str  # "corrected" | "failure"
    codeword: np.ndarray | None = None
    error_positions: frozenset = field(default_factory=frozenset)

    @property
    def ok(self) -> bool:
        return self.status == "corrected"


def bch_generate(m: int, t: int) -> BchCode:
    """Construct the BCH code with generator lcm of minimal polys of alpha..alpha^2t."""
    ctx = gf_build(m)
    n = ctx.order
    if t < 1 or 2 * t + 1 > n:
        raise ValidationError("need 1 <= t and 2t + 1 <= N")
    gen = 1
    covered = set()
    for i in range(1, 2 * t + 1):
        if i in covered:
            continue
        c = i
        while c not in covered:
            covered.add(c)
            c = (2 * c) % n
        gen = _poly_mul(gen, _minimal_poly(ctx, i))
    k = n - _poly_deg(gen)
    if k <= 0:
        raise ValidationError(f"t={t} leaves no message bits for m={m}")
    if _poly_mod((1 << n) | 1, gen) != 0:
        raise AssertionError("generator does not divide x^N + 1")
    return BchCode(ctx=ctx, N=n, t=t, generator=gen, k=k)


def bits_to_int(bits) -> int:
    b = np.asarray(bits, dtype=np.uint8)
    return int.from_bytes(np.packbits(b, bitorder="little").tobytes(), "little")


def int_to_bits(value: int, n: int) -> np.ndarray:
    raw = np.frombuffer(value.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].copy()


def encode(code: BchCode, message) -> np.ndarray:
    """Systematic encoding: parity bits in positions 0..N-k-1, message above."""
    msg = np.asarray(message, dtype=np.uint8)
    if msg.shape != (code.k,):
        raise ValidationError(f"message must hold {code.k} bits")
    shifted = bits_to_int(msg) << (code.N - code.k)
    parity = _poly_mod(shifted, code.generator)
    return int_to_bits(shifted ^ parity, code.N)


def syndromes(code: BchCode, word) -> np.ndarray:
    """S_i = r(alpha^i) for i = 1..2t."""
    w = np.asarray(word, dtype=np.uint8)
    if w.shape != (code.N,):
        raise ValidationError(f"word must hold {code.N} bits")
    pos = np.flatnonzero(w).astype(np.int64)
    if pos.size == 0:
        return np.zeros(2 * code.t, dtype=np.int64)
    i = np.arange(1, 2 * code.t + 1, dtype=np.int64)[:, None]
    terms = code.ctx.exp[(i * pos[None, :]) % code.ctx.order]
    return np.bitwise_xor.reduce(terms, axis=1)


def _berlekamp_massey(ctx: GfContext, synd) -> list:
    """Minimal LFSR (error locator) generating the syndrome sequence."""
    c = [1]
    b = [1]
    L = 0
    shift = 1
    disc_prev = 1
    for n_i, s in enumerate(synd):
        d = int(s)
        for i in range(1, L + 1):
            if i < len(c) and c[i]:
                d ^= ctx.mul(c[i], int(synd[n_i - i]))
        if d == 0:
            shift += 1
            continue
        coef = ctx.mul(d, ctx.inv(disc_prev))
        correction_len = len(b) + shift
        nxt = c + [0] * max(0, correction_len - len(c))
        for i, bc in enumerate(b):
            if bc:
                nxt[i + shift] ^= ctx.mul(coef, bc)
        if 2 * L <= n_i:
            b = c
            disc_prev = d
            L = n_i + 1 - L
            shift = 1
        else:
            shift += 1
        c = nxt
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def _locator_positions(ctx: GfContext, locator) -> np.ndarray:
    """Chien search: positions j with sigma(alpha^-j) = 0."""
    n = ctx.order
    j = np.arange(n, dtype=np.int64)
    acc = np.full(n, locator[0], dtype=np.int64)
    neg_j = (n - j) % n
    for i in range(1, len(locator)):
        coeff = locator[i]
        if coeff:
            acc ^= ctx.exp[(ctx.log[coeff] + (i * neg_j) % n) % n]
    return np.flatnonzero(acc == 0)


def bdd_decode(code: BchCode, word) -> DecodeOutcome:
    """Bounded-distance decoding of one word.

    Returns the unique codeword within Hamming distance t when it exists;
    beyond the radius it may declare failure or return a miscorrection
    that is itself within distance t of the input.
    """
    w = np.asarray(word, dtype=np.uint8)
    synd = syndromes(code, w)
    if not synd.any():
        return DecodeOutcome(status="corrected", codeword=w.copy())
    locator = _berlekamp_massey(code.ctx, synd)
    degree = len(locator) - 1
    if degree > code.t:
        return DecodeOutcome(status="failure")
    positions = _locator_positions(code.ctx, locator)
    if positions.size != degree:
        return DecodeOutcome(status="failure")
    corrected = w.copy()
    corrected[positions] ^= 1
    if syndromes(code, corrected).any():
        return DecodeOutcome(status="failure")
    return DecodeOutcome(status="corrected", codeword=corrected,
                         error_positions=frozenset(int(p) for p in positions))


def genie_bdd(test_pattern, true_error, t: int) -> bool:
    """Idealized attempt: succeeds exactly when |pattern XOR error| <= t."""
    a = np.asarray(test_pattern, dtype=np.uint8)
    b = np.asarray(true_error, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValidationError("pattern and error must have equal length")
    return int(np.count_nonzero(a ^ b)) <= t


def make_bdd_decoder(code: BchCode):
    """Adapter: word -> codeword or None, for the Chase engine."""
    def decoder(word):
        outcome = bdd_decode(code, word)
        return outcome.codeword if outcome.ok else None
    return decoder


def make_genie_decoder(transmitted, t: int):
    """Idealized decoder that returns the transmitted word iff within radius t."""
    ref = np.asarray(transmitted, dtype=np.uint8)

    def decoder(word):
        w = np.asarray(word, dtype=np.uint8)
        if int(np.count_nonzero(w ^ ref)) <= t:
            return ref
        return None
    return decoder
