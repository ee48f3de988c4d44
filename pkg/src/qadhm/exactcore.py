"""Exact scalar arithmetic and exact linear algebra.

Three scalar types, each immutable and structural-equality:

* ``GaussRational`` -- complex rationals a + b*i with ``fractions.Fraction``
  parts.  Ground field for all matrix data.
* ``QLaurent``      -- Laurent polynomials in a formal parameter q with
  GaussRational coefficients, stored sparsely as {exponent: coefficient}.
* ``QRat``          -- the fraction field of QLaurent, kept reduced with a
  canonical denominator (valuation 0, constant term 1).

Plus dense exact matrices (rank / kernel / solve / det), linear pencils in
named formal variables, homogeneous bivariate gcd over Q(i), and the quantum
integers [n], braces {n}, their factorials and the q-binomial coefficients.
"""

from __future__ import annotations

from fractions import Fraction
import re as _re

__all__ = [
    "GaussRational", "QLaurent", "QRat", "Matrix", "Pencil", "BiPoly",
    "qint", "qbrace", "qfact", "qbinom",
    "rank", "kernel", "solve", "homogeneous_gcd",
    "parse_gauss", "random_gauss",
]


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"cannot coerce {x!r} to Fraction")


class GaussRational:
    """An element a + b*i of Q(i), with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _frac(re))
        object.__setattr__(self, "im", _frac(im))

    def __setattr__(self, *a):
        raise AttributeError("GaussRational is immutable")

    @classmethod
    def zero(cls):
        return _GR_ZERO

    @classmethod
    def one(cls):
        return _GR_ONE

    @classmethod
    def i(cls):
        return _GR_I

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, GaussRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __add__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __sub__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.im and not other.im:          # fast path: both rational
            return GaussRational(self.re * other.re)
        return GaussRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_gauss(other)
        if other is NotImplemented:
            return NotImplemented
        if not other:
            raise ZeroDivisionError("division by zero GaussRational")
        if not self.im and not other.im:
            return GaussRational(self.re / other.re)
        n = other.re * other.re + other.im * other.im
        return GaussRational(
            (self.re * other.re + self.im * other.im) / n,
            (self.im * other.re - self.re * other.im) / n,
        )

    def __rtruediv__(self, other):
        return _as_gauss(other) / self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("GaussRational power needs an integer")
        if n < 0:
            return _GR_ONE / (self ** (-n))
        out = _GR_ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self):
        return GaussRational(self.re, -self.im)

    def __repr__(self):
        return f"GaussRational({self.re!r}, {self.im!r})"

    def __str__(self):
        # Serialization format: "a/b" or "a/b+c/d*i" / "a/b-c/d*i", no spaces,
        # denominators always written.
        def fr(x):
            return f"{x.numerator}/{x.denominator}"
        if not self.im:
            return fr(self.re)
        sign = "+" if self.im >= 0 else "-"
        return f"{fr(self.re)}{sign}{fr(abs(self.im))}*i"


def _as_gauss(x):
    if isinstance(x, GaussRational):
        return x
    if isinstance(x, (int, Fraction)):
        return GaussRational(x)
    return NotImplemented


_GR_ZERO = GaussRational(0)
_GR_ONE = GaussRational(1)
_GR_I = GaussRational(0, 1)

_GAUSS_RE = _re.compile(
    r"^(?P<re>[+-]?\d+(?:/\d+)?)"
    r"(?:(?P<sign>[+-])(?P<im>\d+(?:/\d+)?)\*i)?$"
)


def parse_gauss(s: str) -> GaussRational:
    """Parse the serialization format of ``str(GaussRational)``.

    Accepts "a", "a/b", "a/b+c/d*i", "a/b-c/d*i" (integer parts allowed).
    """
    m = _GAUSS_RE.match(s.strip())
    if not m:
        raise ValueError(f"malformed GaussRational string: {s!r}")
    re_part = Fraction(m.group("re"))
    im_part = Fraction(0)
    if m.group("im") is not None:
        im_part = Fraction(m.group("im"))
        if m.group("sign") == "-":
            im_part = -im_part
    return GaussRational(re_part, im_part)


def random_gauss(rng, height=3, complex_parts=True) -> GaussRational:
    """Small-height random Gaussian rational, reproducible from ``rng``."""
    def small():
        num = rng.randint(-height, height)
        den = rng.randint(1, height)
        return Fraction(num, den)
    return GaussRational(small(), small() if complex_parts else 0)


# ---------------------------------------------------------------------------
# Laurent polynomials in q
# ---------------------------------------------------------------------------

class QLaurent:
    """Laurent polynomial in q over Q(i): {exponent: GaussRational}, no zeros."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for e, c in terms.items():
                c = _as_gauss(c)
                if c is NotImplemented:
                    raise TypeError(f"bad coefficient {terms[e]!r}")
                if c:
                    clean[int(e)] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *a):
        raise AttributeError("QLaurent is immutable")

    @classmethod
    def zero(cls):
        return _QL_ZERO

    @classmethod
    def one(cls):
        return _QL_ONE

    @classmethod
    def q_power(cls, n, coeff=1):
        return cls({n: coeff})

    @classmethod
    def from_scalar(cls, c):
        return cls({0: c})

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, QLaurent):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction, GaussRational)):
            g = _as_gauss(other)
            if not g:
                return not self.terms
            return self.terms == {0: g}
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        other = _as_qlaurent(other)
        if other is NotImplemented:
            return NotImplemented
        t = dict(self.terms)
        for e, c in other.terms.items():
            s = t.get(e)
            if s is None:
                t[e] = c
            else:
                s = s + c
                if s:
                    t[e] = s
                else:
                    del t[e]
        out = QLaurent.__new__(QLaurent)
        object.__setattr__(out, "terms", t)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = QLaurent.__new__(QLaurent)
        object.__setattr__(out, "terms", {e: -c for e, c in self.terms.items()})
        return out

    def __sub__(self, other):
        other = _as_qlaurent(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussRational)):
            g = _as_gauss(other)
            if not g:
                return _QL_ZERO
            out = QLaurent.__new__(QLaurent)
            object.__setattr__(out, "terms",
                               {e: c * g for e, c in self.terms.items()})
            return out
        if not isinstance(other, QLaurent):
            return NotImplemented
        a, b = self.terms, other.terms
        if len(a) == 1:                       # fast path: monomial factor
            (ea, ca), = a.items()
            out = QLaurent.__new__(QLaurent)
            object.__setattr__(out, "terms",
                               {ea + e: ca * c for e, c in b.items()})
            return out
        t = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = ea + eb
                c = ca * cb
                s = t.get(e)
                if s is None:
                    if c:
                        t[e] = c
                else:
                    s = s + c
                    if s:
                        t[e] = s
                    else:
                        del t[e]
        out = QLaurent.__new__(QLaurent)
        object.__setattr__(out, "terms", t)
        return out

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("QLaurent power needs n >= 0")
        out = _QL_ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __truediv__(self, other):
        """Exact division; raises ValueError when the quotient is not Laurent."""
        if isinstance(other, (int, Fraction, GaussRational)):
            g = _as_gauss(other)
            return self * (GaussRational(1) / g)
        if not isinstance(other, QLaurent):
            return NotImplemented
        q, r = _ql_divmod(self, other)
        if r:
            raise ValueError(f"inexact QLaurent division: {self} / {other}")
        return q

    def val(self):
        """Lowest exponent (valuation); 0 for the zero polynomial."""
        return min(self.terms) if self.terms else 0

    def deg(self):
        """Highest exponent; 0 for the zero polynomial."""
        return max(self.terms) if self.terms else 0

    def shift(self, n):
        """Multiply by q^n."""
        if not n or not self.terms:
            return self
        out = QLaurent.__new__(QLaurent)
        object.__setattr__(out, "terms",
                           {e + n: c for e, c in self.terms.items()})
        return out

    def coeff(self, e):
        return self.terms.get(e, _GR_ZERO)

    def evaluate(self, q0: GaussRational) -> GaussRational:
        if not q0 and any(e < 0 for e in self.terms):
            raise ZeroDivisionError("negative exponent at q=0")
        acc = _GR_ZERO
        for e, c in self.terms.items():
            if e >= 0:
                acc = acc + c * (q0 ** e if e else _GR_ONE)
            else:
                acc = acc + c / (q0 ** (-e))
        return acc

    def subs_q1(self) -> GaussRational:
        """Classical limit q = 1."""
        acc = _GR_ZERO
        for c in self.terms.values():
            acc = acc + c
        return acc

    def is_monomial(self):
        return len(self.terms) == 1

    def conjugate(self):
        return QLaurent({e: c.conjugate() for e, c in self.terms.items()})

    def to_json(self):
        return {str(e): str(c) for e, c in sorted(self.terms.items())}

    @classmethod
    def from_json(cls, obj):
        return cls({int(e): parse_gauss(c) for e, c in obj.items()})

    def __repr__(self):
        return f"QLaurent({self.terms!r})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms):
            c = self.terms[e]
            cs = str(c)
            if "+" in cs[1:] or "-" in cs[1:] or "*" in cs:
                cs = f"({cs})"
            if e == 0:
                parts.append(cs)
            elif e == 1:
                parts.append(f"{cs}*q")
            else:
                parts.append(f"{cs}*q^{e}")
        return "+".join(parts).replace("+-", "-")


def _as_qlaurent(x):
    if isinstance(x, QLaurent):
        return x
    if isinstance(x, (int, Fraction, GaussRational)):
        g = _as_gauss(x)
        return QLaurent({0: g}) if g else _QL_ZERO
    return NotImplemented


_QL_ZERO = QLaurent()
_QL_ONE = QLaurent({0: 1})
Q = QLaurent({1: 1})          # the formal parameter q
QINV = QLaurent({-1: 1})


def _ql_divmod(a: QLaurent, b: QLaurent):
    """Laurent division a = q*b + r, treating units q^n as invertible.

    Divides the underlying ordinary polynomials after shifting both to
    valuation 0, then shifts back.  r has strictly smaller ordinary degree
    than b's shifted polynomial (r = 0 means exact division in the Laurent
    ring).
    """
    if not b.terms:
        raise ZeroDivisionError("QLaurent division by zero")
    if not a.terms:
        return _QL_ZERO, _QL_ZERO
    va, vb = a.val(), b.val()
    ad = {e - va: c for e, c in a.terms.items()}
    bd = {e - vb: c for e, c in b.terms.items()}
    db = max(bd)
    lead_b = bd[db]
    quo = {}
    rem = dict(ad)
    while rem and max(rem) >= db:
        dr = max(rem)
        piece = rem[dr] / lead_b
        quo[dr - db] = piece
        for e, c in bd.items():
            k = e + dr - db
            s = rem.get(k, _GR_ZERO) - piece * c
            if s:
                rem[k] = s
            else:
                rem.pop(k, None)
    qv = QLaurent(quo).shift(va - vb)
    rv = QLaurent(rem).shift(va)
    return qv, rv


def _ql_gcd(a: QLaurent, b: QLaurent) -> QLaurent:
    """Monic gcd in the Laurent ring (defined up to units q^n * c)."""
    while b:
        _, r = _ql_divmod(a, b)
        a, b = b, r
    if not a:
        return _QL_ZERO
    # normalize: valuation 0, lowest-exponent coefficient 1
    a = a.shift(-a.val())
    c0 = a.terms[0]
    return a * (_GR_ONE / c0)


class QRat:
    """Element of the fraction field of QLaurent, kept in canonical form.

    Canonical form: num/den reduced by their gcd; den has valuation 0 and
    constant coefficient 1 (the zero element is 0/1).
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = _as_qlaurent(num)
        den = _QL_ONE if den is None else _as_qlaurent(den)
        if den is NotImplemented or num is NotImplemented:
            raise TypeError("bad QRat components")
        if not den:
            raise ZeroDivisionError("QRat with zero denominator")
        if not num:
            den = _QL_ONE
        else:
            g = _ql_gcd(num, den)
            if g != _QL_ONE:
                num = num / g
                den = den / g
            # unit-normalize the denominator
            v = den.val()
            c0 = den.terms[v]
            den = den.shift(-v) * (_GR_ONE / c0)
            num = num.shift(-v) * (_GR_ONE / c0)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, *a):
        raise AttributeError("QRat is immutable")

    @classmethod
    def zero(cls):
        return cls(_QL_ZERO)

    @classmethod
    def one(cls):
        return cls(_QL_ONE)

    @classmethod
    def from_qlaurent(cls, x):
        return cls(x)

    def __bool__(self):
        return bool(self.num)

    def is_zero(self):
        return not self.num

    def __eq__(self, other):
        other = _as_qrat(other)
        if other is NotImplemented:
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __add__(self, other):
        other = _as_qrat(other)
        if other is NotImplemented:
            return NotImplemented
        return QRat(self.num * other.den + other.num * self.den,
                    self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        out = QRat.__new__(QRat)
        object.__setattr__(out, "num", -self.num)
        object.__setattr__(out, "den", self.den)
        return out

    def __sub__(self, other):
        other = _as_qrat(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _as_qrat(other)
        if other is NotImplemented:
            return NotImplemented
        return QRat(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_qrat(other)
        if other is NotImplemented:
            return NotImplemented
        if not other.num:
            raise ZeroDivisionError("QRat division by zero")
        return QRat(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return _as_qrat(other) / self

    def as_qlaurent(self) -> QLaurent:
        """Return the numerator if the denominator is trivial, else raise."""
        if self.den == _QL_ONE:
            return self.num
        q, r = _ql_divmod(self.num, self.den)
        if r:
            raise ValueError(f"{self} is not a Laurent polynomial")
        return q

    def subs_q1(self) -> GaussRational:
        d = self.den.subs_q1()
        if not d:
            raise ZeroDivisionError("denominator vanishes at q=1")
        return self.num.subs_q1() / d

    def __repr__(self):
        return f"QRat({self.num!r}, {self.den!r})"

    def __str__(self):
        if self.den == _QL_ONE:
            return str(self.num)
        return f"({self.num})/({self.den})"


def _as_qrat(x):
    if isinstance(x, QRat):
        return x
    if isinstance(x, (int, Fraction, GaussRational, QLaurent)):
        return QRat(x)
    return NotImplemented


# ---------------------------------------------------------------------------
# quantum integers
# ---------------------------------------------------------------------------

def qint(n: int) -> QLaurent:
    """[n] = (q^n - q^-n)/(q - q^-1) = q^(n-1) + q^(n-3) + ... + q^(1-n)."""
    if n == 0:
        return _QL_ZERO
    if n < 0:
        return -qint(-n)
    return QLaurent({n - 1 - 2 * k: 1 for k in range(n)})


def qbrace(n: int) -> QLaurent:
    """{n} = (q^(2n) - 1)/(q^2 - 1) = 1 + q^2 + ... + q^(2n-2), n >= 0."""
    if n < 0:
        raise ValueError("qbrace needs n >= 0")
    return QLaurent({2 * k: 1 for k in range(n)})


def qfact(n: int) -> QLaurent:
    """Brace factorial {n}! = {1}{2}...{n}; {0}! = 1."""
    if n < 0:
        raise ValueError("qfact needs n >= 0")
    out = _QL_ONE
    for k in range(1, n + 1):
        out = out * qbrace(k)
    return out


def qbinom(n: int, r: int) -> QLaurent:
    """Gaussian binomial {n}!/({r}!{n-r}!) via the Pascal recursion in q^2."""
    if not (0 <= r <= n):
        raise ValueError(f"qbinom out of range: ({n},{r})")
    # row-by-row: C(m, j) = C(m-1, j-1) + q^(2j) C(m-1, j)
    row = [_QL_ONE]
    for m in range(1, n + 1):
        new = [_QL_ONE]
        for j in range(1, m):
            new.append(row[j - 1] + QLaurent({2 * j: 1}) * row[j])
        new.append(_QL_ONE)
        row = new
    return row[r]


# ---------------------------------------------------------------------------
# dense exact matrices
# ---------------------------------------------------------------------------

class Matrix:
    """Dense matrix over an exact scalar type (GaussRational/QLaurent/QRat).

    Entries are stored row-major as a list of lists; instances are treated as
    immutable (operations return fresh matrices).
    """

    __slots__ = ("rows", "cols", "a")

    def __init__(self, rows, cols, entries):
        if len(entries) != rows or any(len(r) != cols for r in entries):
            raise ValueError("entry grid does not match shape")
        self.rows = rows
        self.cols = cols
        self.a = [list(r) for r in entries]

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_rows(cls, entries):
        rows = len(entries)
        cols = len(entries[0]) if rows else 0
        return cls(rows, cols, entries)

    @classmethod
    def zero(cls, rows, cols, zero_elt):
        return cls(rows, cols, [[zero_elt] * cols for _ in range(rows)])

    @classmethod
    def identity(cls, n, one_elt, zero_elt):
        return cls(n, n, [[one_elt if i == j else zero_elt for j in range(n)]
                          for i in range(n)])

    def _zero_elt(self):
        if self.rows and self.cols:
            return type(self.a[0][0]).zero()
        raise ValueError("cannot infer scalar type of an empty matrix")

    def _one_elt(self):
        if self.rows and self.cols:
            return type(self.a[0][0]).one()
        raise ValueError("cannot infer scalar type of an empty matrix")

    # -- structural ---------------------------------------------------------

    def __eq__(self, other):
        return (isinstance(other, Matrix) and self.rows == other.rows
                and self.cols == other.cols and self.a == other.a)

    def __getitem__(self, ij):
        i, j = ij
        return self.a[i][j]

    def row(self, i):
        return list(self.a[i])

    def col(self, j):
        return [self.a[i][j] for i in range(self.rows)]

    def is_zero(self):
        return all(not x for r in self.a for x in r)

    def map(self, fn):
        return Matrix(self.rows, self.cols,
                      [[fn(x) for x in r] for r in self.a])

    def transpose(self):
        return Matrix(self.cols, self.rows,
                      [[self.a[i][j] for i in range(self.rows)]
                       for j in range(self.cols)])

    def dagger(self):
        """Conjugate transpose (i -> -i entrywise)."""
        return Matrix(self.cols, self.rows,
                      [[self.a[i][j].conjugate() for i in range(self.rows)]
                       for j in range(self.cols)])

    def submatrix(self, row_idx, col_idx):
        return Matrix(len(row_idx), len(col_idx),
                      [[self.a[i][j] for j in col_idx] for i in row_idx])

    @classmethod
    def hstack(cls, mats):
        rows = mats[0].rows
        if any(m.rows != rows for m in mats):
            raise ValueError("hstack: row mismatch")
        return cls(rows, sum(m.cols for m in mats),
                   [sum((m.a[i] for m in mats), []) for i in range(rows)])

    @classmethod
    def vstack(cls, mats):
        cols = mats[0].cols
        if any(m.cols != cols for m in mats):
            raise ValueError("vstack: col mismatch")
        return cls(sum(m.rows for m in mats), cols,
                   [r for m in mats for r in m.a])

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("shape mismatch in add")
        return Matrix(self.rows, self.cols,
                      [[self.a[i][j] + other.a[i][j]
                        for j in range(self.cols)] for i in range(self.rows)])

    def __sub__(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("shape mismatch in sub")
        return Matrix(self.rows, self.cols,
                      [[self.a[i][j] - other.a[i][j]
                        for j in range(self.cols)] for i in range(self.rows)])

    def __neg__(self):
        return self.map(lambda x: -x)

    def scale(self, c):
        return self.map(lambda x: x * c)

    def __mul__(self, other):
        if not isinstance(other, Matrix):
            return self.scale(other)
        if self.cols != other.rows:
            raise ValueError("shape mismatch in matmul")
        zero = self._zero_elt() if self.rows and self.cols else other._zero_elt()
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = zero
                for k in range(self.cols):
                    acc = acc + self.a[i][k] * other.a[k][j]
                row.append(acc)
            out.append(row)
        return Matrix(self.rows, other.cols, out)

    def commutator(self, other):
        return self * other - other * self

    # -- elimination --------------------------------------------------------

    def rank(self) -> int:
        """Exact rank by fraction-free (Bareiss) elimination with full pivoting.

        Divisions in the Bareiss recurrence are exact in the coefficient ring,
        so this works for QLaurent entries as well as field entries.
        """
        if self.rows == 0 or self.cols == 0:
            return 0
        a = [list(r) for r in self.a]
        m, n = self.rows, self.cols
        prev = None
        r = 0
        for k in range(min(m, n)):
            piv = None
            for i in range(r, m):
                for j in range(r, n):
                    if a[i][j]:
                        piv = (i, j)
                        break
                if piv:
                    break
            if piv is None:
                break
            pi, pj = piv
            if pi != r:
                a[r], a[pi] = a[pi], a[r]
            if pj != r:
                for row in a:
                    row[r], row[pj] = row[pj], row[r]
            for i in range(r + 1, m):
                for j in range(r + 1, n):
                    num = a[r][r] * a[i][j] - a[i][r] * a[r][j]
                    a[i][j] = num / prev if prev is not None else num
                a[i][r] = a[r][r] - a[r][r]  # zero of the right type
            prev = a[r][r]
            r += 1
        return r

    def det(self):
        if self.rows != self.cols:
            raise ValueError("det of non-square matrix")
        n = self.rows
        if n == 0:
            raise ValueError("det of empty matrix")
        a = [list(r) for r in self.a]
        prev = None
        sign = 1
        for k in range(n - 1):
            if not a[k][k]:
                swap = next((i for i in range(k + 1, n) if a[i][k]), None)
                if swap is None:
                    return self._zero_elt()
                a[k], a[swap] = a[swap], a[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    num = a[k][k] * a[i][j] - a[i][k] * a[k][j]
                    a[i][j] = num / prev if prev is not None else num
            prev = a[k][k]
        d = a[n - 1][n - 1]
        return -d if sign < 0 else d

    def _field_lift(self):
        """Lift QLaurent entries into QRat so Gauss-Jordan division works."""
        if self.rows and self.cols and isinstance(self.a[0][0], QLaurent):
            return self.map(QRat)
        return self

    def rref(self):
        """Reduced row echelon form over a field; returns (matrix, pivot cols)."""
        m = self._field_lift()
        a = [list(r) for r in m.a]
        rows, cols = m.rows, m.cols
        pivots = []
        r = 0
        for j in range(cols):
            piv = next((i for i in range(r, rows) if a[i][j]), None)
            if piv is None:
                continue
            a[r], a[piv] = a[piv], a[r]
            inv = a[r][j]
            a[r] = [x / inv for x in a[r]]
            for i in range(rows):
                if i != r and a[i][j]:
                    f = a[i][j]
                    a[i] = [x - f * y for x, y in zip(a[i], a[r])]
            pivots.append(j)
            r += 1
            if r == rows:
                break
        return Matrix(rows, cols, a), pivots

    def kernel(self):
        """Columns spanning {v : self*v = 0}, over the fraction field."""
        if self.cols == 0:
            return Matrix(0, 0, [])
        if self.rows == 0:
            raise ValueError("kernel of a 0-row matrix is everything; "
                             "build an identity explicitly")
        ech, pivots = self.rref()
        one = ech._one_elt()
        zero = ech._zero_elt()
        free = [j for j in range(self.cols) if j not in pivots]
        vecs = []
        for f in free:
            v = [zero] * self.cols
            v[f] = one
            for r, pj in enumerate(pivots):
                v[pj] = -ech.a[r][f]
            vecs.append(v)
        if not vecs:
            return Matrix(self.cols, 0, [[] for _ in range(self.cols)])
        return Matrix(self.cols, len(vecs),
                      [[vec[i] for vec in vecs] for i in range(self.cols)])

    def solve(self, rhs):
        """One exact solution of self*x = rhs (Matrix with rhs.cols columns),
        or None when inconsistent."""
        if rhs.rows != self.rows:
            raise ValueError("solve: shape mismatch")
        aug = Matrix.hstack([self, rhs])
        ech, pivots = aug.rref()
        zero = ech._zero_elt()
        for r in range(ech.rows):
            lead = next((j for j in range(aug.cols) if ech.a[r][j]), None)
            if lead is not None and lead >= self.cols:
                return None  # inconsistent
        out = [[zero] * rhs.cols for _ in range(self.cols)]
        for r, pj in enumerate(pivots):
            if pj < self.cols:
                for k in range(rhs.cols):
                    out[pj][k] = ech.a[r][self.cols + k]
        return Matrix(self.cols, rhs.cols, out)

    # -- serialization ------------------------------------------------------

    def to_json(self):
        return [[str(x) for x in r] for r in self.a]

    @classmethod
    def from_json(cls, obj):
        return cls(len(obj), len(obj[0]) if obj else 0,
                   [[parse_gauss(x) for x in r] for r in obj])

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols})"

    def __str__(self):
        return "\n".join("[" + ", ".join(str(x) for x in r) + "]"
                         for r in self.a)


def rank(m: Matrix) -> int:
    return m.rank()


def kernel(m: Matrix) -> Matrix:
    return m.kernel()


def solve(m: Matrix, rhs: Matrix):
    return m.solve(rhs)


# ---------------------------------------------------------------------------
# linear pencils in named formal variables
# ---------------------------------------------------------------------------

class Pencil:
    """sum_v coeffs[v]*v + const, all Matrix of equal shape."""

    __slots__ = ("vars", "coeffs", "const")

    def __init__(self, vars, coeffs, const):
        self.vars = list(vars)
        self.coeffs = dict(coeffs)
        self.const = const
        shape = (const.rows, const.cols)
        for v in self.vars:
            m = self.coeffs[v]
            if (m.rows, m.cols) != shape:
                raise ValueError(f"pencil coefficient {v} has wrong shape")

    @property
    def rows(self):
        return self.const.rows

    @property
    def cols(self):
        return self.const.cols

    def evaluate(self, point) -> Matrix:
        """point: dict var->scalar, or sequence aligned with self.vars."""
        if not isinstance(point, dict):
            point = dict(zip(self.vars, point))
        out = self.const
        for v in self.vars:
            out = out + self.coeffs[v].scale(point[v])
        return out

    def entry_bipoly(self, i, j, var_pair):
        """Entry (i,j) as a BiPoly in the two named variables of var_pair
        (all other variables must have zero coefficient there)."""
        z, w = var_pair
        terms = {}
        for v in self.vars:
            c = self.coeffs[v].a[i][j]
            if not c:
                continue
            if v == z:
                terms[(1, 0)] = terms.get((1, 0), _GR_ZERO) + c
            elif v == w:
                terms[(0, 1)] = terms.get((0, 1), _GR_ZERO) + c
            else:
                raise ValueError(f"entry depends on {v}, not in {var_pair}")
        c = self.const.a[i][j]
        if c:
            terms[(0, 0)] = c
        return BiPoly(terms)

    def to_json(self):
        obj = {v: self.coeffs[v].to_json() for v in self.vars}
        obj["const"] = self.const.to_json()
        return obj

    @classmethod
    def from_json(cls, obj, vars):
        coeffs = {v: Matrix.from_json(obj[v]) for v in vars}
        const = Matrix.from_json(obj["const"])
        return cls(vars, coeffs, const)


# ---------------------------------------------------------------------------
# bivariate polynomials over Q(i) and the homogeneous gcd
# ---------------------------------------------------------------------------

class BiPoly:
    """Polynomial in two variables (z, w) over GaussRational: {(dz,dw): coeff}."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for k, c in terms.items():
                c = _as_gauss(c)
                if c:
                    clean[(int(k[0]), int(k[1]))] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *a):
        raise AttributeError("BiPoly is immutable")

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def one(cls):
        return cls({(0, 0): 1})

    @classmethod
    def variable(cls, which):
        return cls({(1, 0) if which == "z" else (0, 1): 1})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, BiPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        t = dict(self.terms)
        for k, c in other.terms.items():
            s = t.get(k, _GR_ZERO) + c
            if s:
                t[k] = s
            else:
                t.pop(k, None)
        return BiPoly(t)

    def __neg__(self):
        return BiPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussRational)):
            g = _as_gauss(other)
            return BiPoly({k: c * g for k, c in self.terms.items()}) if g \
                else BiPoly()
        t = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                k = (a1 + a2, b1 + b2)
                s = t.get(k, _GR_ZERO) + c1 * c2
                if s:
                    t[k] = s
                else:
                    t.pop(k, None)
        return BiPoly(t)

    __rmul__ = __mul__

    def is_homogeneous(self):
        degs = {a + b for (a, b) in self.terms}
        return len(degs) <= 1

    def total_degree(self):
        if not self.terms:
            return -1
        return max(a + b for (a, b) in self.terms)

    def evaluate(self, z0, w0):
        acc = _GR_ZERO
        for (a, b), c in self.terms.items():
            acc = acc + c * (z0 ** a if a else _GR_ONE) * (w0 ** b if b else _GR_ONE)
        return acc

    def __str__(self):
        if not self.terms:
            return "0"
        def mono(a, b):
            parts = []
            if a:
                parts.append("z" if a == 1 else f"z^{a}")
            if b:
                parts.append("w" if b == 1 else f"w^{b}")
            return "*".join(parts) or "1"
        items = sorted(self.terms.items(), key=lambda kv: (-(kv[0][0] + kv[0][1]), -kv[0][0]))
        return " + ".join(f"({c})*{mono(a, b)}" for (a, b), c in items)


def _uni_divmod(a, b):
    """Division of dense univariate coefficient lists over Q(i) (index=degree)."""
    a = list(a)
    db = len(b) - 1
    while db >= 0 and not b[db]:
        db -= 1
    if db < 0:
        raise ZeroDivisionError("univariate division by zero")
    lead = b[db]
    quo = [_GR_ZERO] * max(0, len(a) - db)
    for d in range(len(a) - 1, db - 1, -1):
        if not a[d]:
            continue
        f = a[d] / lead
        quo[d - db] = f
        for k in range(db + 1):
            a[d - db + k] = a[d - db + k] - f * b[k]
    while a and not a[-1]:
        a.pop()
    return quo, a


def _uni_gcd(a, b):
    a, b = list(a), list(b)
    while any(c for c in b):
        _, r = _uni_divmod(a, b)
        a, b = b, r
    while a and not a[-1]:
        a.pop()
    if a:
        lead = a[-1]
        a = [c / lead for c in a]
    return a


def homogeneous_gcd(polys) -> BiPoly:
    """gcd of homogeneous bivariate polynomials over Q(i), monic in z.

    Strategy: split off the common monomial factor z^a*w^b, dehomogenize the
    rest at t = z/w, run the Euclidean algorithm over Q(i), rehomogenize.
    """
    polys = [p for p in polys if p]
    if not polys:
        raise ValueError("homogeneous_gcd of an all-zero (or empty) family")
    for p in polys:
        if not p.is_homogeneous():
            raise ValueError(f"not homogeneous: {p}")
    za = min(min(a for (a, b) in p.terms) for p in polys)
    wb = min(min(b for (a, b) in p.terms) for p in polys)
    unis = []
    for p in polys:
        d = p.total_degree() - za - wb
        coeffs = [_GR_ZERO] * (d + 1)
        for (a, b), c in p.terms.items():
            coeffs[a - za] = c      # exponent of z (shifted) indexes t-degree
        unis.append(coeffs)
    g = unis[0]
    for u in unis[1:]:
        g = _uni_gcd(g, u)
        if len(g) == 1:
            break
    dg = len(g) - 1
    terms = {(za + k, wb + dg - k): g[k] for k in range(dg + 1) if g[k]}
    return BiPoly(terms)


def gcd_projective_roots(g: BiPoly):
    """Split a homogeneous bivariate poly into Q(i)-rational projective roots
    and leftover irreducible factors (as display strings).

    Returns (roots, leftovers): roots are ([z0:w0], multiplicity) pairs with
    GaussRational coordinates; leftovers are strings for factors with no
    Q(i) root.  Uses sympy factorization over QQ_I for the dehomogenized part.
    """
    import sympy

    if not g:
        raise ValueError("zero polynomial has every root")
    za = min(a for (a, b) in g.terms)
    wb = min(b for (a, b) in g.terms)
    roots = []
    if za:
        roots.append(((GaussRational(0), GaussRational(1)), za))  # z = 0
    if wb:
        roots.append(((GaussRational(1), GaussRational(0)), wb))  # w = 0
    d = g.total_degree() - za - wb
    if d == 0:
        return roots, []
    t = sympy.Symbol("t")
    expr = sympy.Integer(0)
    for (a, b), c in g.terms.items():
        coef = sympy.Rational(c.re.numerator, c.re.denominator) \
            + sympy.I * sympy.Rational(c.im.numerator, c.im.denominator)
        expr += coef * t ** (a - za)
    poly = sympy.Poly(expr, t, domain="QQ_I")
    _, factors = poly.factor_list()
    leftovers = []
    for fac, mult in factors:
        if fac.degree() == 1:
            c1, c0 = fac.all_coeffs()
            root = sympy.simplify(-sympy.sympify(c0.as_expr() if hasattr(c0, "as_expr") else c0)
                                  / sympy.sympify(c1.as_expr() if hasattr(c1, "as_expr") else c1))
            re_, im_ = root.as_real_imag()
            z0 = GaussRational(Fraction(int(sympy.numer(re_)), int(sympy.denom(re_))),
                               Fraction(int(sympy.numer(im_)), int(sympy.denom(im_))))
            roots.append(((z0, GaussRational(1)), mult))
        else:
            leftovers.append(sympy.sstr(fac.as_expr()))
    return roots, leftovers
