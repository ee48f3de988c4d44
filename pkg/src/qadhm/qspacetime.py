"""Quantum Minkowski algebra charts: normal forms, determinant, harmonics.

Chart I is generated by x11', x12', x21', x22' with relations

    x11 x12 = x12 x11          x21 x22 = x22 x21
    x11 x21 = q^-2 x21 x11     x12 x22 = q^-2 x22 x12
    x21 x12 = q^2  x12 x21     [x11, x22] + [x21, x12] = 0

and the ordered monomials x11^a x12^b x21^c x22^d form a PBW basis.  Chart J
mirrors it in generators y11', y12', y21', y22' (with the roles of rows and
columns swapped in the q-commutation pattern).  Both charts share one sorting
engine driven by a six-rule rewrite table; every rewrite strictly decreases
the inversion count of a word, so normalization terminates.

Harmonic polynomials are produced by the residue formula

    X^l_{m,n} = coefficient of s^(l-n) in (x11 s + x21)^(l-m) (x12 s + x22)^(l+m)

with l in (1/2)Z+, m the exponent-splitting index, n the residue index
(indices are stored doubled so everything stays integral).  The y-side mirror
swaps the roles of the two indices:

    Y^l_{m,n} = coefficient of t^(l-m) in (y11 t + y12)^(l-n) (y21 t + y22)^(l+n)

Out-of-range indices (|m| > l or |n| > l) denote the zero element.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exactcore import (
    GaussRational, Matrix, QLaurent, QRat, qbinom, qfact,
)

__all__ = [
    "NCPoly", "HarmonicIndex", "SortEngine",
    "X_NAMES", "Y_NAMES", "normalize", "normalize_J", "monomials_of_degree",
    "dimension_of_degree", "slice_matrix",
    "det_x", "det_y", "det_commutators", "det_mult_rank",
    "harmonic", "harmonic_Y", "b9_sum", "basis_element",
    "basis_indices_for_degree", "basis_independence", "oast_check",
    "y_mono_to_x", "engine",
]

X_NAMES = ("x11", "x12", "x21", "x22")
Y_NAMES = ("y11", "y12", "y21", "y22")

_ONE = QLaurent.one()
_Q2 = QLaurent({2: 1})
_QM2 = QLaurent({-2: 1})

# Sorting rules: (hi, lo) -> list of (coefficient, replacement pair), where the
# replacement pairs are already in nondecreasing generator order.  Generator
# indices: 0,1,2,3 in the name order above.
CHART_I_RULES = {
    (1, 0): [(_ONE, (0, 1))],
    (2, 0): [(_Q2, (0, 2))],
    (2, 1): [(_Q2, (1, 2))],
    (3, 0): [(_ONE, (0, 3)), (QLaurent({2: 1, 0: -1}), (1, 2))],
    (3, 1): [(_Q2, (1, 3))],
    (3, 2): [(_ONE, (2, 3))],
}

CHART_J_RULES = {
    (1, 0): [(_Q2, (0, 1))],
    (2, 0): [(_ONE, (0, 2))],
    (2, 1): [(_QM2, (1, 2))],
    (3, 0): [(_ONE, (0, 3)), (QLaurent({0: 1, -2: -1}), (1, 2))],
    (3, 1): [(_ONE, (1, 3))],
    (3, 2): [(_Q2, (2, 3))],
}


def _inc(mono, g):
    lst = list(mono)
    lst[g] += 1
    return tuple(lst)


def _dec(mono, g):
    lst = list(mono)
    lst[g] -= 1
    return tuple(lst)


class SortEngine:
    """Memoized normal-form multiplication for one chart's rewrite table."""

    def __init__(self, rules):
        self.rules = rules
        self._memo = {}

    def mul_gen_mono(self, g, mono):
        """x_g * (ordered monomial) as {ordered monomial: QLaurent}."""
        key = (g, mono)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        first = None
        for i in range(4):
            if mono[i]:
                first = i
                break
        if first is None or g <= first:
            out = {_inc(mono, g): _ONE}
        else:
            rest = _dec(mono, first)
            acc = {}
            for coeff, (w1, w2) in self.rules[(g, first)]:
                for m2, c2 in self.mul_gen_mono(w2, rest).items():
                    for m3, c3 in self.mul_gen_mono(w1, m2).items():
                        c = coeff * c2 * c3
                        s = acc.get(m3)
                        acc[m3] = c if s is None else s + c
            out = {m: c for m, c in acc.items() if c}
        self._memo[key] = out
        return out

    def mul_mono_mono(self, m1, m2):
        """(ordered m1) * (ordered m2) as {ordered monomial: QLaurent}."""
        acc = {m2: _ONE}
        # feed m1's letters from its right end into the accumulator
        for g in range(3, -1, -1):
            for _ in range(m1[g]):
                nxt = {}
                for mono, c in acc.items():
                    for m3, c3 in self.mul_gen_mono(g, mono).items():
                        cc = c * c3
                        s = nxt.get(m3)
                        nxt[m3] = cc if s is None else s + cc
                acc = {m: c for m, c in nxt.items() if c}
        return acc

    def normalize_word(self, word):
        """A word (tuple of generator indices) as {ordered monomial: QLaurent}."""
        acc = {(0, 0, 0, 0): _ONE}
        for g in reversed(word):
            nxt = {}
            for mono, c in acc.items():
                for m3, c3 in self.mul_gen_mono(g, mono).items():
                    cc = c * c3
                    s = nxt.get(m3)
                    nxt[m3] = cc if s is None else s + cc
            acc = {m: c for m, c in nxt.items() if c}
        return acc


_ENGINES = {"I": SortEngine(CHART_I_RULES), "J": SortEngine(CHART_J_RULES)}


def engine(chart: str) -> SortEngine:
    return _ENGINES[chart]


class NCPoly:
    """Normal-form element of a chart algebra: {exponent 4-tuple: QLaurent}."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart, terms=None):
        if chart not in ("I", "J"):
            raise ValueError(f"unknown chart {chart!r}")
        clean = {}
        if terms:
            for m, c in terms.items():
                if not isinstance(c, QLaurent):
                    c = QLaurent({0: c})
                if c:
                    clean[tuple(m)] = c
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *a):
        raise AttributeError("NCPoly is immutable")

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, chart="I"):
        return cls(chart)

    @classmethod
    def one(cls, chart="I"):
        return cls(chart, {(0, 0, 0, 0): _ONE})

    @classmethod
    def gen(cls, chart, which):
        names = X_NAMES if chart == "I" else Y_NAMES
        idx = which if isinstance(which, int) else names.index(which)
        mono = tuple(1 if i == idx else 0 for i in range(4))
        return cls(chart, {mono: _ONE})

    @classmethod
    def scalar(cls, chart, c):
        c = c if isinstance(c, QLaurent) else QLaurent({0: c})
        return cls(chart, {(0, 0, 0, 0): c})

    # -- ring structure ------------------------------------------------------

    def _check(self, other):
        if self.chart != other.chart:
            raise ValueError("cannot mix charts")

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, NCPoly):
            return NotImplemented
        return self.chart == other.chart and self.terms == other.terms

    def __hash__(self):
        return hash((self.chart, frozenset(self.terms.items())))

    def __add__(self, other):
        if not isinstance(other, NCPoly):
            return NotImplemented
        self._check(other)
        t = dict(self.terms)
        for m, c in other.terms.items():
            s = t.get(m)
            s = c if s is None else s + c
            if s:
                t[m] = s
            else:
                t.pop(m, None)
        return NCPoly(self.chart, t)

    def __neg__(self):
        return NCPoly(self.chart, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        """Multiply by a central scalar (QLaurent / GaussRational / int)."""
        if not isinstance(c, QLaurent):
            c = QLaurent({0: c})
        if not c:
            return NCPoly(self.chart)
        return NCPoly(self.chart, {m: cc * c for m, cc in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussRational, QLaurent)):
            return self.scale(other)
        if not isinstance(other, NCPoly):
            return NotImplemented
        self._check(other)
        eng = _ENGINES[self.chart]
        acc = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                c12 = c1 * c2
                for m3, c3 in eng.mul_mono_mono(m1, m2).items():
                    c = c12 * c3
                    s = acc.get(m3)
                    acc[m3] = c if s is None else s + c
        return NCPoly(self.chart, acc)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, GaussRational, QLaurent)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("NCPoly power needs n >= 0")
        out = NCPoly.one(self.chart)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- structure -----------------------------------------------------------

    def coeff(self, mono):
        return self.terms.get(tuple(mono), QLaurent.zero())

    def degree(self):
        """Total degree (max over monomials); -1 for the zero element."""
        if not self.terms:
            return -1
        return max(sum(m) for m in self.terms)

    def is_homogeneous(self):
        return len({sum(m) for m in self.terms}) <= 1

    def homogeneous_part(self, d):
        return NCPoly(self.chart,
                      {m: c for m, c in self.terms.items() if sum(m) == d})

    def degrees_present(self):
        return sorted({sum(m) for m in self.terms})

    def subs_q1(self):
        """Classical limit: {monomial: GaussRational}, q = 1."""
        out = {}
        for m, c in self.terms.items():
            v = c.subs_q1()
            if v:
                out[m] = v
        return out

    def map_coeff(self, fn):
        return NCPoly(self.chart, {m: fn(c) for m, c in self.terms.items()})

    # -- display / serialization ---------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        names = X_NAMES if self.chart == "I" else Y_NAMES
        parts = []
        for m in sorted(self.terms):
            c = self.terms[m]
            mono = "*".join(
                (names[i] if e == 1 else f"{names[i]}^{e}")
                for i, e in enumerate(m) if e
            )
            cs = str(c)
            if "+" in cs[1:] or "-" in cs[1:]:
                cs = f"({cs})"
            parts.append(f"{cs}*{mono}" if mono else cs)
        return " + ".join(parts)

    def __repr__(self):
        return f"NCPoly({self.chart!r}, {len(self.terms)} terms)"

    def to_json(self):
        return {
            "chart": self.chart,
            "terms": [
                {"k": 0, "e": list(m), "coef": c.to_json()}
                for m, c in sorted(self.terms.items())
            ],
        }

    @classmethod
    def from_json(cls, obj):
        chart = obj["chart"]
        terms = {}
        for t in obj["terms"]:
            if t.get("k", 0) != 0:
                raise ValueError("det-power terms live in DetPoly carriers")
            terms[tuple(t["e"])] = QLaurent.from_json(t["coef"])
        return cls(chart, terms)


def normalize(items, chart="I") -> NCPoly:
    """Normal form of sum(coeff * word); word = iterable of generator names."""
    names = X_NAMES if chart == "I" else Y_NAMES
    eng = _ENGINES[chart]
    acc = NCPoly.zero(chart)
    for coeff, word in items:
        idxs = tuple(
            g if isinstance(g, int) else names.index(g) for g in word
        )
        part = eng.normalize_word(idxs)
        if not isinstance(coeff, QLaurent):
            coeff = QLaurent({0: coeff})
        acc = acc + NCPoly(chart, {m: c * coeff for m, c in part.items()})
    return acc


def normalize_J(items) -> NCPoly:
    """Chart-J counterpart of normalize()."""
    return normalize(items, "J")


# ---------------------------------------------------------------------------
# degree slices
# ---------------------------------------------------------------------------

def monomials_of_degree(d):
    """All exponent 4-tuples of total degree d, in lexicographic order."""
    out = []
    for a in range(d, -1, -1):
        for b in range(d - a, -1, -1):
            for c in range(d - a - b, -1, -1):
                out.append((a, b, c, d - a - b - c))
    out.reverse()  # ascending lex
    return out


def dimension_of_degree(d):
    return (d + 1) * (d + 2) * (d + 3) // 6


def slice_matrix(polys, degrees) -> Matrix:
    """Coefficient matrix: rows = monomials of the given degrees, cols = polys."""
    if isinstance(degrees, int):
        degrees = [degrees]
    monos = [m for d in degrees for m in monomials_of_degree(d)]
    zero = QLaurent.zero()
    return Matrix(len(monos), len(polys),
                  [[p.terms.get(m, zero) for p in polys] for m in monos])


# ---------------------------------------------------------------------------
# determinant
# ---------------------------------------------------------------------------

def det_x() -> NCPoly:
    """det(x) = x11x22 - x12x21 (the normal form of both of its displays)."""
    return NCPoly("I", {(1, 0, 0, 1): _ONE, (0, 1, 1, 0): QLaurent({0: -1})})


def det_y() -> NCPoly:
    """det(y) = y11y22 - y21y12, in chart-J normal form."""
    return NCPoly("J", {(1, 0, 0, 1): _ONE, (0, 1, 1, 0): -_QM2})


# q-commutation exponents of det(x) against the generators:
# det * x_g = q^DET_TWIST[g] * x_g * det
DET_TWIST = (0, 2, -2, 0)


def det_commutators():
    """Verify det*x_g = q^t(g)*x_g*det for all generators; return the report."""
    d = det_x()
    report = {}
    for g, name in enumerate(X_NAMES):
        xg = NCPoly.gen("I", g)
        lhs = d * xg
        rhs = (xg * d).scale(QLaurent({DET_TWIST[g]: 1}))
        report[name] = {"exponent": DET_TWIST[g], "ok": lhs == rhs}
    return report


def mono_det_twist(mono, j=1):
    """q-exponent picked up when an ordered monomial crosses det(x)^j:
    mono * det^j = q^(2j(n21-n12)) * det^j * mono."""
    return 2 * j * (mono[2] - mono[1])


def det_mult_rank(d) -> bool:
    """Left multiplication by det(x): degree-d slice -> degree-(d+2) slice is
    injective (full column rank).

    Two independent certificates:
    1. structural: det * m = q^(2 n12) * (m + e11 + e22)  +  (lower term),
       where the second term has the same n11; the map sending each source
       monomial to its lead target (n11+1, n12, n21, n22+1) is injective and
       the lead coefficient is a unit, so the slice matrix is echelon after
       ordering rows by descending n11 -- full rank over the fraction field.
    2. numeric cross-check: exact rank of the specialized matrix at q = 3
       (full rank at a sample point implies full generic rank).
    """
    det = det_x()
    monos = monomials_of_degree(d)
    cols = []
    for m in monos:
        img = det * NCPoly("I", {m: _ONE})
        lead = (m[0] + 1, m[1], m[2], m[3] + 1)
        c_lead = img.terms.get(lead)
        if c_lead is None or not c_lead.is_monomial():
            return False
        for t in img.terms:
            if t != lead and t[0] >= lead[0]:
                return False
        cols.append(img)
    mat = slice_matrix(cols, d + 2)
    q0 = GaussRational(3)
    num = mat.map(lambda c: c.evaluate(q0))
    return num.rank() == len(monos)


# ---------------------------------------------------------------------------
# harmonic basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarmonicIndex:
    """Index (l, m, n) with a det-power k; half-integers stored doubled."""

    two_l: int
    two_m: int
    two_n: int
    k: int = 0

    def __post_init__(self):
        if self.two_l < 0:
            raise ValueError("two_l must be >= 0")
        if (self.two_m - self.two_l) % 2 or (self.two_n - self.two_l) % 2:
            raise ValueError("m, n must be congruent to l mod 1")

    def in_range(self):
        return abs(self.two_m) <= self.two_l and abs(self.two_n) <= self.two_l

    def __str__(self):
        def h(t):
            return str(t // 2) if t % 2 == 0 else f"{t}/2"
        s = f"X[l={h(self.two_l)},m={h(self.two_m)},n={h(self.two_n)}]"
        if self.k:
            s = f"det^{self.k}*" + s
        return s


def _pencil_power(gen_s, gen_c, n, chart):
    """(gen_s*s + gen_c)^n as a list of NCPoly coefficients of s^0..s^n."""
    a = NCPoly.gen(chart, gen_s)
    b = NCPoly.gen(chart, gen_c)
    acc = [NCPoly.one(chart)]
    for _ in range(n):
        nxt = []
        for r in range(len(acc) + 1):
            t = NCPoly.zero(chart)
            if r - 1 >= 0:
                t = t + a * acc[r - 1]
            if r < len(acc):
                t = t + b * acc[r]
            nxt.append(t)
        acc = nxt
    return acc


def harmonic(idx: HarmonicIndex) -> NCPoly:
    """X^l_{m,n}: coefficient of s^(l-n) in (x11 s + x21)^(l-m) (x12 s + x22)^(l+m).

    Out-of-range indices give 0.  Requires k = 0 (use basis_element for k > 0).
    """
    if idx.k != 0:
        raise ValueError("harmonic() expects k = 0")
    if not idx.in_range():
        return NCPoly.zero("I")
    lm = (idx.two_l - idx.two_m) // 2      # l - m
    lp = (idx.two_l + idx.two_m) // 2      # l + m
    ln = (idx.two_l - idx.two_n) // 2      # l - n  (target s-degree)
    first = _pencil_power("x11", "x21", lm, "I")
    second = _pencil_power("x12", "x22", lp, "I")
    acc = NCPoly.zero("I")
    for r1 in range(len(first)):
        r2 = ln - r1
        if 0 <= r2 < len(second):
            acc = acc + first[r1] * second[r2]
    return acc


def harmonic_Y(idx: HarmonicIndex) -> NCPoly:
    """Y^l_{m,n}: coefficient of t^(l-m) in (y11 t + y12)^(l-n) (y21 t + y22)^(l+n)."""
    if idx.k != 0:
        raise ValueError("harmonic_Y() expects k = 0")
    if not idx.in_range():
        return NCPoly.zero("J")
    ln = (idx.two_l - idx.two_n) // 2      # l - n
    lp = (idx.two_l + idx.two_n) // 2      # l + n
    lm = (idx.two_l - idx.two_m) // 2      # l - m  (target t-degree)
    first = _pencil_power("y11", "y12", ln, "J")
    second = _pencil_power("y21", "y22", lp, "J")
    acc = NCPoly.zero("J")
    for r1 in range(len(first)):
        r2 = lm - r1
        if 0 <= r2 < len(second):
            acc = acc + first[r1] * second[r2]
    return acc


def b9_sum(idx: HarmonicIndex) -> NCPoly:
    """The four-factor q-multinomial expansion of X^l_{m,n} (times {2l}!):

        sum_r  {2l}! / ({r}! {l-m-r}! {l-n-r}! {r+m+n}!)
               * x11^r x21^(l-m-r) x12^(l-n-r) x22^(r+m+n)

    Used as an independent cross-check of harmonic(): the two must agree up to
    one global scalar per index.
    """
    if not idx.in_range():
        return NCPoly.zero("I")
    if (idx.two_m + idx.two_n) % 2:
        raise ValueError("m+n must be integral for the multinomial form")
    two_l, two_m, two_n = idx.two_l, idx.two_m, idx.two_n
    L = two_l  # exponents below are in ordinary integers
    acc = NCPoly.zero("I")
    for r in range(0, L + 1):
        e11 = r
        e21 = (two_l - two_m) // 2 - r
        e12 = (two_l - two_n) // 2 - r
        e22 = r + (two_m + two_n) // 2
        if min(e21, e12, e22) < 0:
            continue
        coeff = qfact(L)
        for e in (e11, e21, e12, e22):
            coeff = coeff / qfact(e)
        word = ("x11",) * e11 + ("x21",) * e21 + ("x12",) * e12 + ("x22",) * e22
        acc = acc + normalize([(coeff, word)], "I")
    return acc


def basis_element(idx: HarmonicIndex) -> NCPoly:
    """det(x)^k X^l_{m,n} (k >= 0), as a chart-I normal form."""
    if idx.k < 0:
        raise ValueError("chart I needs k >= 0")
    h = harmonic(HarmonicIndex(idx.two_l, idx.two_m, idx.two_n))
    d = det_x()
    out = h
    for _ in range(idx.k):
        out = d * out
    return out


def basis_indices_for_degree(d):
    """All (k, l, m, n) with 2k + 2l = d, |m|,|n| <= l."""
    out = []
    for two_l in range(d % 2, d + 1, 2):
        k = (d - two_l) // 2
        for two_m in range(-two_l, two_l + 1, 2):
            for two_n in range(-two_l, two_l + 1, 2):
                out.append(HarmonicIndex(two_l, two_m, two_n, k))
    return out


def basis_independence(d) -> bool:
    """The elements det^k X^l with 2k+2l = d: right count and full slice rank.

    Rank is certified at the specialization q = 3 (full rank at a point
    implies full rank over the fraction field, and the count matches the
    slice dimension, so they form a basis).
    """
    idxs = basis_indices_for_degree(d)
    if len(idxs) != dimension_of_degree(d):
        return False
    polys = [basis_element(i) for i in idxs]
    mat = slice_matrix(polys, d)
    q0 = GaussRational(3)
    num = mat.map(lambda c: c.evaluate(q0))
    if num.rank() != len(idxs):
        return False
    # classical limit q = 1: same matrices must keep full rank
    cls = mat.map(lambda c: c.subs_q1())
    return cls.rank() == len(idxs)


# ---------------------------------------------------------------------------
# chart glueing and the oast proportionality
# ---------------------------------------------------------------------------

def y_mono_to_x(mono):
    """Rewrite an ordered y-monomial through y_kl' = det(x)^-1 x_kl'.

    Returns (qexp, detpow, xmono): the monomial equals
    q^qexp * det(x)^detpow * x-monomial, with the det power on the left.
    The x-monomial keeps the same exponents (the generator orders agree), and
    detpow = -(total degree).
    """
    qexp = 0
    n12 = n21 = 0
    placed = 0
    for g in range(4):
        for _ in range(mono[g]):
            # move this letter's det^-1 left past the letters already placed
            qexp += -2 * (n21 - n12)
            if g == 1:
                n12 += 1
            elif g == 2:
                n21 += 1
            placed += 1
    return qexp, -placed, tuple(mono)


def oast_check(idx: HarmonicIndex):
    """Proportionality det(x)^k X^l_{m,n} = lambda * det(y)^(-k-2l) Y^l_{m,n}.

    Both sides are reduced to the carrier form det(x)^k * (chart-I polynomial
    of degree 2l); the function returns the single scalar lambda, raising
    ValueError (with the offending monomial pair) if no single scalar works.
    """
    X = harmonic(HarmonicIndex(idx.two_l, idx.two_m, idx.two_n))
    Y = harmonic_Y(HarmonicIndex(idx.two_l, idx.two_m, idx.two_n))
    if X.is_zero() or Y.is_zero():
        raise ValueError("oast_check needs an in-range index")
    # det(y)^(-k-2l) Y = det(x)^(k+2l) Y;  substituting each y-monomial of Y
    # introduces det(x)^(-2l), leaving det(x)^k * (x-polynomial).
    sub = {}
    for mono, c in Y.terms.items():
        qexp, detpow, xmono = y_mono_to_x(mono)
        assert detpow == -sum(mono)
        cc = c * QLaurent({qexp: 1})
        s = sub.get(xmono)
        sub[xmono] = cc if s is None else s + cc
    B = NCPoly("I", sub)
    if set(X.terms) != set(B.terms):
        extra = set(X.terms) ^ set(B.terms)
        raise ValueError(f"not proportional: support mismatch at {sorted(extra)[0]}")
    mono0 = next(iter(sorted(X.terms)))
    lam = QRat(X.terms[mono0], B.terms[mono0])
    for mono in X.terms:
        lhs = QRat(X.terms[mono], B.terms[mono])
        if lhs != lam:
            raise ValueError(
                f"not proportional: ratio at {mono} differs from {mono0}")
    try:
        return lam.as_qlaurent()
    except ValueError:
        return lam
