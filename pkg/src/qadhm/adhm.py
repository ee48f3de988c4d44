"""Linear-algebra data of instanton type and their stability taxonomy.

A *complex datum* is a tuple (B11, B12, B21, B22, i1, i2, j1, j2) of matrices
over the Gaussian rationals; a *real datum* is a tuple (B1, B2, i, j).  Both
come with quadratic matrix equations:

  complex:  [B11,B12] + i1*j1,   [B21,B22] + i2*j2,
            [B11,B22] + [B21,B12] + i1*j2 + i2*j1      (all three must vanish)
  real:     [B1,B2] + i*j,
            [B1,B1^+] + [B2,B2^+] + i*i^+ - j^+*j - xi (^+ = conjugate transpose)

A complex datum spans a pencil of plain triples over the projective line:

  B~1 = z*B11 + w*B21,  B~2 = z*B12 + w*B22,  i~ = z*i1 + w*i2,  j~ = z*j1 + w*j2

and the three complex residuals are exactly the (z^2, zw, w^2) coefficients of
[B~1,B~2] + i~*j~.  A triple (B1, B2, i) is *stable* when no proper subspace
is invariant under both B's and contains the image of i; *costable* is the
transpose-dual notion with ker j.  Pointwise stability of the pencil for every
[z:w] is decided exactly: the Krylov matrix whose columns are all words of
length <= c-1 in (B~1, B~2) applied to the columns of i~ has full rank at
[z0:w0] iff the evaluated triple is stable there, so the common projective
roots of its c x c minors - the roots of their homogeneous gcd - are precisely
the unstable points.  The taxonomy reported by ``classify`` is:

  stable_everywhere    minor gcd has degree 0
  semistable           some minor is not identically zero
  costable_everywhere  same test on the transposed pencil seeded by j~
  semiregular          stable everywhere and costable somewhere
  regular              stable everywhere and costable everywhere

An independent rank criterion is provided by ``derivative_rank``: the
derivative of the three residuals in all datum entries is a
3c^2 x (4c^2 + 4cr) matrix whose rank is 3c^2 exactly on the stable locus.

The entrywise involution (B11,B12,B21,B22,i1,i2,j1,j2) ->
(B22^+, -B21^+, -B12^+, B11^+, j2^+, -j1^+, -i2^+, i1^+) squares to the
identity on solutions; its fixed points are the images of real data under
``embed_real``, which sends a xi=0 real solution to
(B1, B2, -B2^+, B1^+, i, -j^+, j, i^+).

Seeded generators produce exact solutions in several regimes (stable
everywhere, unstable at one planted point, one-dimensional V) plus raw random
data; all draw from small-height Gaussian rationals for reproducibility.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from .exactcore import (
    BiPoly,
    GaussRational,
    Matrix,
    gcd_projective_roots,
    homogeneous_gcd,
    parse_gauss,
    random_gauss,
)

__all__ = [
    "ADHMError", "ComplexADHMDatum", "RealADHMDatum", "StabilityReport",
    "complex_residuals", "is_complex_solution", "quadratic_pencil_value",
    "real_residuals", "is_real_solution",
    "is_stable", "is_costable", "closure_rank", "ordered_monomial_rank",
    "classify", "derivative_rank", "stabilizer_dim",
    "dagger_involution", "is_dagger_fixed", "embed_real", "real_stratify",
    "c1_generator", "random_complex_datum", "random_stable_solution",
    "random_nonstable_solution", "random_c1r1_solution",
    "random_real_solution", "gl_action", "random_invertible",
    "datum_from_json",
]

_ZERO = GaussRational(0)
_ONE = GaussRational(1)


class ADHMError(ValueError):
    """Shape errors, unmet preconditions, and rejected inputs."""


def _scalar(x):
    if isinstance(x, GaussRational):
        return x
    if isinstance(x, (int, Fraction)):
        return GaussRational(x)
    if isinstance(x, str):
        return parse_gauss(x)
    raise ADHMError(f"cannot coerce {x!r} to a Gaussian rational")


def _as_matrix(m, rows, cols, name):
    if isinstance(m, Matrix):
        entries = m.a
    else:
        entries = m
    try:
        out = Matrix(rows, cols, [[_scalar(x) for x in row] for row in entries])
    except (ValueError, TypeError) as exc:
        raise ADHMError(f"{name} must be a {rows}x{cols} matrix: {exc}") from exc
    return out


def _zero_matrix(rows, cols):
    return Matrix(rows, cols, [[_ZERO] * cols for _ in range(rows)])


def _empty_cols(c):
    return Matrix(c, 0, [[] for _ in range(c)])


# ---------------------------------------------------------------------------
# datum types
# ---------------------------------------------------------------------------

class ComplexADHMDatum:
    """Matrices (B11, B12, B21, B22 : c x c), (i1, i2 : c x r), (j1, j2 : r x c)."""

    __slots__ = ("c", "r", "B11", "B12", "B21", "B22", "i1", "i2", "j1", "j2")

    _BLOCKS = ("B11", "B12", "B21", "B22", "i1", "i2", "j1", "j2")

    def __init__(self, c, r, B11, B12, B21, B22, i1, i2, j1, j2):
        if not (isinstance(c, int) and c >= 1 and isinstance(r, int) and r >= 1):
            raise ADHMError("c and r must be positive integers")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "r", r)
        for name, m in (("B11", B11), ("B12", B12), ("B21", B21), ("B22", B22)):
            object.__setattr__(self, name, _as_matrix(m, c, c, name))
        for name, m in (("i1", i1), ("i2", i2)):
            object.__setattr__(self, name, _as_matrix(m, c, r, name))
        for name, m in (("j1", j1), ("j2", j2)):
            object.__setattr__(self, name, _as_matrix(m, r, c, name))

    def __setattr__(self, *a):
        raise AttributeError("ComplexADHMDatum is immutable")

    def __eq__(self, other):
        return (isinstance(other, ComplexADHMDatum)
                and self.c == other.c and self.r == other.r
                and all(getattr(self, n) == getattr(other, n)
                        for n in self._BLOCKS))

    def __repr__(self):
        return f"ComplexADHMDatum(c={self.c}, r={self.r})"

    def evaluate(self, z0, w0):
        """The plain quadruple (B~1, B~2, i~, j~) at the point [z0:w0]."""
        z0, w0 = _scalar(z0), _scalar(w0)
        return (self.B11.scale(z0) + self.B21.scale(w0),
                self.B12.scale(z0) + self.B22.scale(w0),
                self.i1.scale(z0) + self.i2.scale(w0),
                self.j1.scale(z0) + self.j2.scale(w0))

    def to_json(self):
        obj = {"kind": "complex", "r": self.r, "c": self.c}
        for name in self._BLOCKS:
            obj[name] = getattr(self, name).to_json()
        return obj

    @classmethod
    def from_json(cls, obj):
        if obj.get("kind") != "complex":
            raise ADHMError("expected kind 'complex'")
        return cls(obj["c"], obj["r"],
                   *(obj[name] for name in cls._BLOCKS))


class RealADHMDatum:
    """Matrices (B1, B2 : c x c), (i : c x r), (j : r x c)."""

    __slots__ = ("c", "r", "B1", "B2", "i", "j")

    _BLOCKS = ("B1", "B2", "i", "j")

    def __init__(self, c, r, B1, B2, i, j):
        if not (isinstance(c, int) and c >= 1 and isinstance(r, int) and r >= 1):
            raise ADHMError("c and r must be positive integers")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "B1", _as_matrix(B1, c, c, "B1"))
        object.__setattr__(self, "B2", _as_matrix(B2, c, c, "B2"))
        object.__setattr__(self, "i", _as_matrix(i, c, r, "i"))
        object.__setattr__(self, "j", _as_matrix(j, r, c, "j"))

    def __setattr__(self, *a):
        raise AttributeError("RealADHMDatum is immutable")

    def __eq__(self, other):
        return (isinstance(other, RealADHMDatum)
                and self.c == other.c and self.r == other.r
                and all(getattr(self, n) == getattr(other, n)
                        for n in self._BLOCKS))

    def __repr__(self):
        return f"RealADHMDatum(c={self.c}, r={self.r})"

    def to_json(self):
        obj = {"kind": "real", "r": self.r, "c": self.c}
        for name in self._BLOCKS:
            obj[name] = getattr(self, name).to_json()
        return obj

    @classmethod
    def from_json(cls, obj):
        if obj.get("kind") != "real":
            raise ADHMError("expected kind 'real'")
        return cls(obj["c"], obj["r"], obj["B1"], obj["B2"], obj["i"], obj["j"])


def datum_from_json(obj):
    kind = obj.get("kind")
    if kind == "complex":
        return ComplexADHMDatum.from_json(obj)
    if kind == "real":
        return RealADHMDatum.from_json(obj)
    raise ADHMError(f"unknown datum kind {kind!r}")


class StabilityReport:
    """Outcome of ``classify``.

    failing_points lists (side, (z0, w0), multiplicity) with side "stable" or
    "costable"; points outside Q(i) appear in leftover_factors as (side,
    factor string).  The gcd strings record the minor gcd of each side, with
    "0" meaning every minor vanishes identically (that side fails at every
    point, and no individual points are enumerated).  witness_subspace, when
    present, is a column basis of a violating invariant subspace at the first
    recorded failing point.
    """

    __slots__ = ("stable_everywhere", "costable_everywhere", "semistable",
                 "semiregular", "regular", "failing_points",
                 "witness_subspace", "stability_gcd", "costability_gcd",
                 "leftover_factors")

    def __init__(self, stable_everywhere, costable_everywhere, semistable,
                 semiregular, regular, failing_points, witness_subspace,
                 stability_gcd, costability_gcd, leftover_factors):
        if regular != (stable_everywhere and costable_everywhere):
            raise ADHMError("regular must equal stable and costable everywhere")
        if semiregular and not stable_everywhere:
            raise ADHMError("semiregular requires stable everywhere")
        object.__setattr__(self, "stable_everywhere", stable_everywhere)
        object.__setattr__(self, "costable_everywhere", costable_everywhere)
        object.__setattr__(self, "semistable", semistable)
        object.__setattr__(self, "semiregular", semiregular)
        object.__setattr__(self, "regular", regular)
        object.__setattr__(self, "failing_points", list(failing_points))
        object.__setattr__(self, "witness_subspace", witness_subspace)
        object.__setattr__(self, "stability_gcd", stability_gcd)
        object.__setattr__(self, "costability_gcd", costability_gcd)
        object.__setattr__(self, "leftover_factors", list(leftover_factors))

    def __setattr__(self, *a):
        raise AttributeError("StabilityReport is immutable")

    def __repr__(self):
        flags = [n for n in ("stable_everywhere", "costable_everywhere",
                             "semistable", "semiregular", "regular")
                 if getattr(self, n)]
        return f"StabilityReport({', '.join(flags) or 'nothing holds'})"

    def to_json(self):
        return {
            "stable_everywhere": self.stable_everywhere,
            "costable_everywhere": self.costable_everywhere,
            "semistable": self.semistable,
            "semiregular": self.semiregular,
            "regular": self.regular,
            "stability_gcd": self.stability_gcd,
            "costability_gcd": self.costability_gcd,
            "failing_points": [
                {"side": side, "z": str(z0), "w": str(w0), "multiplicity": m}
                for side, (z0, w0), m in self.failing_points],
            "leftover_factors": [
                {"side": side, "factor": f} for side, f in self.leftover_factors],
            "witness_subspace": (None if self.witness_subspace is None
                                 else self.witness_subspace.to_json()),
        }


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

def complex_residuals(d):
    """The three c x c residual matrices; the datum solves the equations iff
    all vanish, iff [B~1,B~2] + i~*j~ = 0 at every point of the line."""
    r1 = d.B11.commutator(d.B12) + d.i1 * d.j1
    r2 = d.B21.commutator(d.B22) + d.i2 * d.j2
    r3 = (d.B11.commutator(d.B22) + d.B21.commutator(d.B12)
          + d.i1 * d.j2 + d.i2 * d.j1)
    return r1, r2, r3


def is_complex_solution(d):
    return all(m.is_zero() for m in complex_residuals(d))


def quadratic_pencil_value(d, z0, w0):
    """[B~1,B~2] + i~*j~ evaluated at [z0:w0] (a c x c matrix).

    Equals z0^2*r1 + z0*w0*r3 + w0^2*r2 for the three residuals.
    """
    B1p, B2p, ip, jp = d.evaluate(z0, w0)
    return B1p.commutator(B2p) + ip * jp


def real_residuals(d, xi):
    """The two residuals of a real datum at the given level xi."""
    xi = _scalar(xi)
    r1 = d.B1.commutator(d.B2) + d.i * d.j
    r2 = (d.B1.commutator(d.B1.dagger()) + d.B2.commutator(d.B2.dagger())
          + d.i * d.i.dagger() - d.j.dagger() * d.j
          - Matrix.identity(d.c, _ONE, _ZERO).scale(xi))
    return r1, r2


def is_real_solution(d, xi):
    return all(m.is_zero() for m in real_residuals(d, xi))


# ---------------------------------------------------------------------------
# pointwise stability by word closure
# ---------------------------------------------------------------------------

def _closure_basis(ops, seed):
    """Column basis of the smallest subspace containing the columns of seed
    and invariant under every operator in ops.  At most c rounds of growth."""
    c = seed.rows
    basis = []
    queue = [seed.submatrix(range(c), [t]) for t in range(seed.cols)]
    while queue:
        col = queue.pop(0)
        stacked = Matrix.hstack(basis + [col]) if basis else col
        if stacked.rank() > len(basis):
            basis.append(col)
            if len(basis) == c:
                break
            queue.extend(op * col for op in ops)
    return Matrix.hstack(basis) if basis else _empty_cols(c)


def is_stable(B1, B2, i):
    """(stable, witness): witness is a column basis of a proper invariant
    subspace containing Im i when the triple is not stable, else None."""
    c = B1.rows
    if B1.cols != c or B2.rows != c or B2.cols != c or i.rows != c:
        raise ADHMError("is_stable: inconsistent shapes")
    closure = _closure_basis([B1, B2], i)
    if closure.cols == c:
        return True, None
    return False, closure


def is_costable(B1, B2, j):
    """(costable, witness): witness is a column basis of a nonzero invariant
    subspace inside ker j when the triple is not costable, else None.

    Decided through the transpose duality: (B1, B2, j) is costable iff
    (B1^T, B2^T, j^T) is stable; the witness is the annihilator of the
    transposed closure.
    """
    stable, dual_wit = is_stable(B1.transpose(), B2.transpose(), j.transpose())
    if stable:
        return True, None
    c = B1.rows
    if dual_wit.cols == 0:
        return False, Matrix.identity(c, _ONE, _ZERO)
    return False, dual_wit.transpose().kernel()


def closure_rank(B1, B2, i):
    """Dimension of the full word closure of Im i under (B1, B2)."""
    return _closure_basis([B1, B2], i).cols


def ordered_monomial_rank(B1, B2, i):
    """Rank of the columns B1^m * B2^n * i for 0 <= m, n <= c-1.

    Always <= closure_rank(B1, B2, i); the inequality can be strict (the
    ordered monomials omit words such as B2*B1*B2), so the word closure is
    the ground truth for stability and this map is kept as a comparison
    oracle only.
    """
    c = B1.rows
    ident = Matrix.identity(c, _ONE, _ZERO)
    pows1, pows2 = [ident], [ident]
    for _ in range(c - 1):
        pows1.append(pows1[-1] * B1)
        pows2.append(pows2[-1] * B2)
    blocks = [pows1[m] * (pows2[n] * i) for m in range(c) for n in range(c)]
    return Matrix.hstack(blocks).rank()


# ---------------------------------------------------------------------------
# global stability over the projective line
# ---------------------------------------------------------------------------

def _bipoly_entry(zc, wc):
    return BiPoly({(1, 0): zc, (0, 1): wc})


def _bipoly_det(cols):
    """Determinant of a square matrix given as a list of columns of BiPoly,
    by cofactor expansion (no division, so exact for polynomial entries)."""
    def rec(ci, rows):
        if len(rows) == 1:
            return cols[ci][rows[0]]
        acc = BiPoly.zero()
        sign = 1
        for k, a in enumerate(rows):
            e = cols[ci][a]
            if e:
                term = e * rec(ci + 1, rows[:k] + rows[k + 1:])
                acc = acc + term if sign > 0 else acc - term
            sign = -sign
        return acc
    return rec(0, tuple(range(len(cols))))


def _krylov_minor_gcd(Bz1, Bw1, Bz2, Bw2, Sz, Sw):
    """Analyse the Krylov pencil of (z*Bz1 + w*Bw1, z*Bz2 + w*Bw2) seeded by
    the columns of z*Sz + w*Sw.

    Returns (all_zero, gcd): all_zero is True when every c x c minor of the
    Krylov matrix vanishes identically (gcd is then None); otherwise gcd is
    the monic-in-z homogeneous gcd of the minors, with an early exit once the
    accumulated gcd reaches degree 0.  Minor enumeration is combinatorial in
    the number of columns, fine for the small c this library targets.
    """
    c = Bz1.rows
    op1 = [[_bipoly_entry(Bz1[a, b], Bw1[a, b]) for b in range(c)]
           for a in range(c)]
    op2 = [[_bipoly_entry(Bz2[a, b], Bw2[a, b]) for b in range(c)]
           for a in range(c)]

    def apply(op, u):
        return [sum((op[a][b] * u[b] for b in range(c) if u[b]),
                    BiPoly.zero()) for a in range(c)]

    frontier = [[_bipoly_entry(Sz[a, t], Sw[a, t]) for a in range(c)]
                for t in range(Sz.cols)]
    cols = list(frontier)
    for _ in range(c - 1):
        frontier = [apply(op, u) for u in frontier for op in (op1, op2)]
        cols.extend(frontier)
    cols = [u for u in cols if any(u)]
    if len(cols) < c:
        return True, None

    g = None
    for combo in combinations(cols, c):
        minor = _bipoly_det(list(combo))
        if not minor:
            continue
        g = minor if g is None else homogeneous_gcd([g, minor])
        if g.total_degree() == 0:
            break
    if g is None:
        return True, None
    return False, homogeneous_gcd([g])


def classify(d):
    """Full stability taxonomy of a complex datum (see the module docstring).

    The stable side analyses the pencil (B~1, B~2) acting on i~; the costable
    side analyses the transposed pencil acting on j~^T.  Failing points are
    the Q(i)-rational projective roots of the respective minor gcds;
    irreducible factors without rational roots are reported as strings.
    """
    s_zero, s_gcd = _krylov_minor_gcd(d.B11, d.B21, d.B12, d.B22, d.i1, d.i2)
    c_zero, c_gcd = _krylov_minor_gcd(
        d.B11.transpose(), d.B21.transpose(),
        d.B12.transpose(), d.B22.transpose(),
        d.j1.transpose(), d.j2.transpose())

    semistable = not s_zero
    stable_everywhere = semistable and s_gcd.total_degree() == 0
    costable_somewhere = not c_zero
    costable_everywhere = costable_somewhere and c_gcd.total_degree() == 0
    semiregular = stable_everywhere and costable_somewhere
    regular = stable_everywhere and costable_everywhere

    failing, leftovers = [], []
    if semistable and not stable_everywhere:
        roots, lefts = gcd_projective_roots(s_gcd)
        failing.extend(("stable", pt, m) for pt, m in roots)
        leftovers.extend(("stable", f) for f in lefts)
    if costable_somewhere and not costable_everywhere:
        roots, lefts = gcd_projective_roots(c_gcd)
        failing.extend(("costable", pt, m) for pt, m in roots)
        leftovers.extend(("costable", f) for f in lefts)

    witness = None
    if not semistable:
        B1p, B2p, ip, _ = d.evaluate(1, 0)
        witness = is_stable(B1p, B2p, ip)[1]
    else:
        for side, (z0, w0), _m in failing:
            B1p, B2p, ip, jp = d.evaluate(z0, w0)
            if side == "stable":
                witness = is_stable(B1p, B2p, ip)[1]
            else:
                witness = is_costable(B1p, B2p, jp)[1]
            break
        if witness is None and c_zero:
            B1p, B2p, _, jp = d.evaluate(1, 0)
            witness = is_costable(B1p, B2p, jp)[1]

    return StabilityReport(
        stable_everywhere, costable_everywhere, semistable, semiregular,
        regular, failing, witness,
        str(s_gcd) if not s_zero else "0",
        str(c_gcd) if not c_zero else "0",
        leftovers)


# ---------------------------------------------------------------------------
# rank criteria
# ---------------------------------------------------------------------------

def _flatten(*mats):
    return [x for m in mats for row in m.a for x in row]


def derivative_rank(d):
    """Exact rank of the derivative of the three residuals in all entries.

    The matrix is 3c^2 x (4c^2 + 4cr), columns ordered by perturbed block
    (B11, B12, B21, B22, i1, i2, j1, j2), each block row-major.  Rank 3c^2 is
    equivalent to classify(d).stable_everywhere for solutions; when full, the
    count (4c^2 + 4cr) - rank - c^2 = 4cr is the expected parameter count of
    the quotient.
    """
    c, r = d.c, d.r
    zero_cc = _zero_matrix(c, c)
    cols = []

    def elem(rows, cols_, a, b):
        m = [[_ZERO] * cols_ for _ in range(rows)]
        m[a][b] = _ONE
        return Matrix(rows, cols_, m)

    for a in range(c):
        for b in range(c):
            e = elem(c, c, a, b)
            cols.append(_flatten(e.commutator(d.B12), zero_cc,
                                 e.commutator(d.B22)))
    for a in range(c):
        for b in range(c):
            e = elem(c, c, a, b)
            cols.append(_flatten(d.B11.commutator(e), zero_cc,
                                 d.B21.commutator(e)))
    for a in range(c):
        for b in range(c):
            e = elem(c, c, a, b)
            cols.append(_flatten(zero_cc, e.commutator(d.B22),
                                 e.commutator(d.B12)))
    for a in range(c):
        for b in range(c):
            e = elem(c, c, a, b)
            cols.append(_flatten(zero_cc, d.B21.commutator(e),
                                 d.B11.commutator(e)))
    for a in range(c):
        for b in range(r):
            e = elem(c, r, a, b)
            cols.append(_flatten(e * d.j1, zero_cc, e * d.j2))
    for a in range(c):
        for b in range(r):
            e = elem(c, r, a, b)
            cols.append(_flatten(zero_cc, e * d.j2, e * d.j1))
    for a in range(r):
        for b in range(c):
            e = elem(r, c, a, b)
            cols.append(_flatten(d.i1 * e, zero_cc, d.i2 * e))
    for a in range(r):
        for b in range(c):
            e = elem(r, c, a, b)
            cols.append(_flatten(zero_cc, d.i2 * e, d.i1 * e))

    n = 3 * c * c
    assert len(cols) == 4 * c * c + 4 * c * r
    return Matrix(n, len(cols),
                  [[col[k] for col in cols] for k in range(n)]).rank()


def stabilizer_dim(B1, B2, i):
    """Dimension of {X : [B1,X] = [B2,X] = 0, X*i = 0}; zero iff no nonzero
    endomorphism commutes with both B's and kills Im i (true for stable
    triples, since ker X would be a proper invariant subspace over Im i)."""
    c, r = B1.rows, i.cols
    cols = []
    for a in range(c):
        for b in range(c):
            m = [[_ZERO] * c for _ in range(c)]
            m[a][b] = _ONE
            e = Matrix(c, c, m)
            cols.append(_flatten(B1.commutator(e), B2.commutator(e), e * i))
    n = 2 * c * c + c * r
    system = Matrix(n, c * c, [[col[k] for col in cols] for k in range(n)])
    return c * c - system.rank()


# ---------------------------------------------------------------------------
# the involution and real data
# ---------------------------------------------------------------------------

def dagger_involution(d):
    """(B11,B12,B21,B22,i1,i2,j1,j2) -> (B22^+, -B21^+, -B12^+, B11^+,
    j2^+, -j1^+, -i2^+, i1^+); an involution on complex data."""
    return ComplexADHMDatum(
        d.c, d.r,
        d.B22.dagger(), -d.B21.dagger(), -d.B12.dagger(), d.B11.dagger(),
        d.j2.dagger(), -d.j1.dagger(), -d.i2.dagger(), d.i1.dagger())


def is_dagger_fixed(d):
    return dagger_involution(d) == d


def embed_real(d):
    """Send a xi=0 real solution to the complex datum
    (B1, B2, -B2^+, B1^+, i, -j^+, j, i^+); rejects non-solutions.

    The output solves the complex equations (checked) and is a fixed point of
    the dagger involution; it is stable everywhere when the input is stable.
    """
    r1, r2 = real_residuals(d, 0)
    if not r1.is_zero():
        raise ADHMError("embed_real: first real residual is nonzero")
    if not r2.is_zero():
        raise ADHMError("embed_real: second real residual is nonzero at xi=0")
    out = ComplexADHMDatum(
        d.c, d.r,
        d.B1, d.B2, -d.B2.dagger(), d.B1.dagger(),
        d.i, -d.j.dagger(), d.j, d.i.dagger())
    if not is_complex_solution(out):
        raise ADHMError("embed_real: output fails the complex equations")
    return out


def real_stratify(d, xi):
    """One of "stable", "costable", "regular", "irregular" for a real
    solution at level xi; rejects non-solutions."""
    if not is_real_solution(d, xi):
        raise ADHMError("real_stratify: datum does not solve the equations "
                        f"at xi={xi}")
    stable = is_stable(d.B1, d.B2, d.i)[0]
    costable = is_costable(d.B1, d.B2, d.j)[0]
    if stable and costable:
        return "regular"
    if stable:
        return "stable"
    if costable:
        return "costable"
    return "irregular"


# ---------------------------------------------------------------------------
# generators (all deterministic in the seed)
# ---------------------------------------------------------------------------

def _row_matrix(entries):
    return Matrix(1, len(entries), [list(entries)])


def c1_generator(r, seed):
    """Random solution with c = 1: scalar B's are unconstrained, and the
    residuals reduce to three bilinear equations on the vectors
    x = i1, y = i2, z = j1, w = j2:

        sum x_k z_k = 0,   sum y_k w_k = 0,   sum (x_k w_k + y_k z_k) = 0.

    Draws x, y linearly independent (so i~ never vanishes and the output is
    stable everywhere) and (z, w) from the kernel of the 3 x 2r system.
    Requires r >= 2: with r = 1 the row i~ = z*i1 + w*i2 vanishes at a point
    of the line, so no stable solution exists.
    """
    if r < 2:
        raise ADHMError("c1_generator needs r >= 2: no datum with a "
                        "one-dimensional W is stable everywhere")
    rng = random.Random(seed)
    while True:
        B = [random_gauss(rng) for _ in range(4)]
        x = [random_gauss(rng) for _ in range(r)]
        y = [random_gauss(rng) for _ in range(r)]
        if Matrix(2, r, [x, y]).rank() != 2:
            continue
        rows = [x + [_ZERO] * r, [_ZERO] * r + y, y + x]
        system = Matrix(3, 2 * r, rows)
        ker = system.kernel()
        zw = [_ZERO] * (2 * r)
        for t in range(ker.cols):
            coef = random_gauss(rng)
            for k in range(2 * r):
                zw[k] = zw[k] + coef * ker[k, t]
        d = ComplexADHMDatum(
            1, r, [[B[0]]], [[B[1]]], [[B[2]]], [[B[3]]],
            [x], [y],
            [[zw[k]] for k in range(r)], [[zw[r + k]] for k in range(r)])
        if not is_complex_solution(d):
            continue
        if classify(d).stable_everywhere:
            return d


def _shift_matrix(c):
    return Matrix(c, c, [[_ONE if a == b + 1 else _ZERO for b in range(c)]
                         for a in range(c)])


def _poly_in_shift(c, n_coef, id_coef):
    ident = Matrix.identity(c, _ONE, _ZERO)
    return _shift_matrix(c).scale(n_coef) + ident.scale(id_coef)


def random_stable_solution(r, c, seed):
    """Seeded exact solution that classifies stable everywhere.

    All four B blocks are polynomials in one shift matrix N (so every
    commutator vanishes) and j = 0, which kills all three residuals
    identically.  The N-coefficients are drawn with the 2 x 2 determinant of
    their pencil nonzero, so at every point of the line at least one
    evaluated operator has a nonzero N part and the word closure contains the
    full N-orbit of Im i~; the top rows of i1 and i2 are drawn linearly
    independent so that orbit is everything at every point.  Requires r >= 2.
    """
    if r < 2:
        raise ADHMError("random_stable_solution needs r >= 2")
    rng = random.Random(seed)
    while True:
        a = [random_gauss(rng) for _ in range(4)]  # N-coefficients
        if not (a[0] * a[3] - a[1] * a[2]):
            continue
        b = [random_gauss(rng) for _ in range(4)]  # identity coefficients
        i1 = Matrix(c, r, [[random_gauss(rng) for _ in range(r)]
                           for _ in range(c)])
        i2 = Matrix(c, r, [[random_gauss(rng) for _ in range(r)]
                           for _ in range(c)])
        top = Matrix(2, r, [i1.a[0], i2.a[0]])
        if top.rank() != 2:
            continue
        d = ComplexADHMDatum(
            c, r,
            _poly_in_shift(c, a[0], b[0]), _poly_in_shift(c, a[1], b[1]),
            _poly_in_shift(c, a[2], b[2]), _poly_in_shift(c, a[3], b[3]),
            i1, i2, _zero_matrix(r, c), _zero_matrix(r, c))
        assert is_complex_solution(d)
        if classify(d).stable_everywhere:
            return d


def random_nonstable_solution(r, c, seed):
    """Seeded exact solution that fails stability at one planted point.

    Same commuting-B construction as random_stable_solution, but i2 = lam*i1,
    so i~ = (z + lam*w)*i1 vanishes at [-lam : 1].  Returns (datum, point)
    with point = (-lam, 1); every c x c Krylov minor carries the factor
    (z + lam*w)^c, so classify reports that root with multiplicity >= c.
    """
    rng = random.Random(seed)
    while True:
        a = [random_gauss(rng) for _ in range(4)]
        if not (a[0] * a[3] - a[1] * a[2]):
            continue
        b = [random_gauss(rng) for _ in range(4)]
        i1 = Matrix(c, r, [[random_gauss(rng) for _ in range(r)]
                           for _ in range(c)])
        if all(not x for x in i1.a[0]):
            continue
        lam = random_gauss(rng)
        d = ComplexADHMDatum(
            c, r,
            _poly_in_shift(c, a[0], b[0]), _poly_in_shift(c, a[1], b[1]),
            _poly_in_shift(c, a[2], b[2]), _poly_in_shift(c, a[3], b[3]),
            i1, i1.scale(lam), _zero_matrix(r, c), _zero_matrix(r, c))
        assert is_complex_solution(d)
        return d, (-lam, _ONE)


def random_c1r1_solution(seed):
    """Seeded solution with c = r = 1 and i~ not identically zero.

    With scalars, the equations force i1*j1 = i2*j2 = i1*j2 + i2*j1 = 0, so
    (j1, j2) = 0 whenever (i1, i2) != 0 is drawn truly generic; the row
    i~ = z*i1 + w*i2 still vanishes at exactly one point of the line, so no
    datum of this shape is ever stable everywhere.
    """
    rng = random.Random(seed)
    while True:
        B = [random_gauss(rng) for _ in range(4)]
        x, y = random_gauss(rng), random_gauss(rng)
        if not (x or y):
            continue
        return ComplexADHMDatum(
            1, 1, [[B[0]]], [[B[1]]], [[B[2]]], [[B[3]]],
            [[x]], [[y]], [[_ZERO]], [[_ZERO]])


def random_complex_datum(r, c, seed):
    """Raw random datum (generally not a solution)."""
    rng = random.Random(seed)

    def m(rows, cols):
        return Matrix(rows, cols, [[random_gauss(rng) for _ in range(cols)]
                                   for _ in range(rows)])

    return ComplexADHMDatum(c, r, m(c, c), m(c, c), m(c, c), m(c, c),
                            m(c, r), m(c, r), m(r, c), m(r, c))


def random_real_solution(r, seed, kind="stable"):
    """Seeded real solution with c = 1; returns (datum, xi).

    kind "stable":    j = 0, i nonzero, xi = i*i^+ > 0 (stable, not costable).
    kind "regular":   xi = 0 with i and j nonzero: j pairs up the entries of
                      i as (-i2, i1, -i4, i3, ...), which makes i*j = 0 and
                      |i|^2 = |j|^2 exactly (odd r keeps the last entry of i
                      zero).  Requires r >= 2.
    kind "irregular": the zero datum at xi = 0.
    """
    rng = random.Random(seed)
    if kind == "irregular":
        d = RealADHMDatum(1, r, [[_ZERO]], [[_ZERO]],
                          [[_ZERO] * r], [[_ZERO]] * r)
        return d, GaussRational(0)
    if kind == "stable":
        while True:
            B1, B2 = random_gauss(rng), random_gauss(rng)
            i = [random_gauss(rng) for _ in range(r)]
            if any(i):
                break
        xi = sum((v * v.conjugate() for v in i), GaussRational(0))
        d = RealADHMDatum(1, r, [[B1]], [[B2]], [i], [[_ZERO]] * r)
        return d, xi
    if kind == "regular":
        if r < 2:
            raise ADHMError("regular real samples here need r >= 2")
        while True:
            B1, B2 = random_gauss(rng), random_gauss(rng)
            i = [random_gauss(rng) for _ in range(r)]
            if r % 2 == 1:
                i[-1] = _ZERO
            if not any(i):
                continue
            j = [_ZERO] * r
            for k in range(0, r - 1, 2):
                j[k] = -i[k + 1]
                j[k + 1] = i[k]
            d = RealADHMDatum(1, r, [[B1]], [[B2]], [i],
                              [[v] for v in j])
            if is_real_solution(d, 0):
                return d, GaussRational(0)
    raise ADHMError(f"unknown kind {kind!r}")


def random_invertible(c, rng):
    """Random invertible c x c matrix over the Gaussian rationals."""
    while True:
        g = Matrix(c, c, [[random_gauss(rng) for _ in range(c)]
                          for _ in range(c)])
        if g.rank() == c:
            return g


def gl_action(g, d):
    """(B, i, j) -> (g B g^-1, g i, j g^-1) on every block of a complex
    datum; residuals transform by conjugation, so solutions map to
    solutions and the classification is unchanged."""
    ginv = g.solve(Matrix.identity(d.c, _ONE, _ZERO))
    if ginv is None:
        raise ADHMError("gl_action: matrix is not invertible")
    return ComplexADHMDatum(
        d.c, d.r,
        g * d.B11 * ginv, g * d.B12 * ginv, g * d.B21 * ginv, g * d.B22 * ginv,
        g * d.i1, g * d.i2, d.j1 * ginv, d.j2 * ginv)
