"""Exact graded differential-polynomial algebra.

Coefficients are rational multiples of integer powers of a formal central
parameter ``lam`` (the combination i*hbar/pi that normalizes every
contraction).  Expressions are finite sums of monomials in derived
generators -- a declared base generator decorated with z- and t-derivative
orders -- stored in a fixed canonical order with Koszul signs.  The module
provides the four gradings (cohomology degree, conformal weight, dilaton
dimension, Hodge weight), total derivatives, graded partial and variational
(Euler) derivatives, and integration by parts modulo total z-derivatives.

All values are immutable after construction and every operation is a pure
function, so expressions can be shared freely across threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

__all__ = [
    "BudgetError",
    "Scalar",
    "Generator",
    "DerivedGenerator",
    "Grading",
    "System",
    "DiffPoly",
    "Derivation",
    "canonicalize",
    "grade",
    "apply_T",
    "euler_derivative",
    "ibp_decompose",
]


class BudgetError(Exception):
    """A truncation budget was too small for an exact computation."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


@dataclass(frozen=True)
class Scalar:
    """An exact rational times an integer power of the central parameter lam.

    Multiplication adds lam-powers; addition is defined only between equal
    lam-powers.  General coefficients (finite Laurent polynomials in lam)
    appear as several expression terms sharing a monomial.
    """

    coef: Fraction
    lam: int = 0

    @staticmethod
    def of(coef, lam: int = 0) -> "Scalar":
        return Scalar(_as_fraction(coef), lam)

    def is_zero(self) -> bool:
        return self.coef == 0

    def __mul__(self, other):
        if isinstance(other, Scalar):
            return Scalar(self.coef * other.coef, self.lam + other.lam)
        return Scalar(self.coef * _as_fraction(other), self.lam)

    __rmul__ = __mul__

    def __neg__(self) -> "Scalar":
        return Scalar(-self.coef, self.lam)

    def __add__(self, other: "Scalar") -> "Scalar":
        if not isinstance(other, Scalar):
            return NotImplemented
        if self.coef == 0:
            return other
        if other.coef == 0:
            return self
        if self.lam != other.lam:
            raise ValueError("cannot add scalars with different lam powers")
        return Scalar(self.coef + other.coef, self.lam)

    def inverse(self) -> "Scalar":
        if self.coef == 0:
            raise ZeroDivisionError("scalar is zero")
        return Scalar(1 / self.coef, -self.lam)

    def to_obj(self) -> dict:
        return {"num": self.coef.numerator, "den": self.coef.denominator, "lam": self.lam}

    @staticmethod
    def from_obj(obj: dict) -> "Scalar":
        return Scalar(Fraction(int(obj["num"]), int(obj["den"])), int(obj.get("lam", 0)))

    def __repr__(self) -> str:
        if self.lam == 0:
            return str(self.coef)
        lam = "lam" if self.lam == 1 else f"lam^{self.lam}"
        return f"{self.coef}*{lam}"


@dataclass(frozen=True)
class Generator:
    """A declared base generator of a system.

    ``parity`` is 0 (even) or 1 (odd) and must equal ``deg`` mod 2.
    ``cw`` is the conformal weight of the underived generator.
    """

    name: str
    index: int
    parity: int
    deg: int
    cw: Fraction

    @property
    def key(self) -> Tuple[str, int]:
        return (self.name, self.index)


class DerivedGenerator(NamedTuple):
    """A base generator with z-derivative order ``dz`` and t-order ``dt``."""

    name: str
    index: int
    dz: int
    dt: int

    @property
    def base_key(self) -> Tuple[str, int]:
        return (self.name, self.index)

    def label(self) -> str:
        s = f"{self.name}{self.index}"
        if self.dt:
            s = f"Dt{self.dt}{s}"
        if self.dz:
            s = f"Dz{self.dz}{s}"
        return s


def _dg_sort_key(dg: DerivedGenerator) -> Tuple[str, int, int, int]:
    # Canonical monomial order: lexicographic on (generator id, dt, dz).
    return (dg.name, dg.index, dg.dt, dg.dz)


class Grading(NamedTuple):
    deg: int
    cw: Fraction
    dim: Fraction
    hw: Fraction


Word = Tuple[DerivedGenerator, ...]
TermKey = Tuple[Word, int]  # (canonical monomial, lam power)


class System:
    """A declared family of generators with species-wide conventions.

    ``species`` is ``"vertex"`` (z-derivatives only) or ``"moyal"``
    (z- and t-derivatives).  Generator names must be lowercase letters so
    that the flat string id ``name + str(index)`` parses unambiguously.
    """

    def __init__(self, species: str, generators: Iterable[Generator]):
        if species not in ("vertex", "moyal"):
            raise ValueError(f"unknown species {species!r}")
        self.species = species
        self._gens: Dict[Tuple[str, int], Generator] = {}
        for g in generators:
            if not g.name.isalpha() or not g.name.islower():
                raise ValueError(f"generator name {g.name!r} must be lowercase letters")
            if g.parity != g.deg % 2:
                raise ValueError(f"generator {g.name}{g.index}: parity must equal deg mod 2")
            if g.key in self._gens:
                raise ValueError(f"duplicate generator id {g.name}{g.index}")
            self._gens[g.key] = g

    def generators(self) -> List[Generator]:
        return list(self._gens.values())

    def has(self, name: str, index: int) -> bool:
        return (name, index) in self._gens

    def base(self, name: str, index: int) -> Generator:
        try:
            return self._gens[(name, index)]
        except KeyError:
            raise KeyError(f"undeclared generator {name}{index}") from None

    def gen(self, name: str, index: int, dz: int = 0, dt: int = 0) -> DerivedGenerator:
        self.base(name, index)
        if dz < 0 or dt < 0:
            raise ValueError("derivative orders must be nonnegative")
        if dt and self.species == "vertex":
            raise ValueError("vertex-species generators carry no t-derivatives")
        return DerivedGenerator(name, index, dz, dt)

    # -- gradings ----------------------------------------------------------

    def parity(self, dg: DerivedGenerator) -> int:
        return self.base(dg.name, dg.index).parity

    def deg(self, dg: DerivedGenerator) -> int:
        return self.base(dg.name, dg.index).deg

    def cw(self, dg: DerivedGenerator) -> Fraction:
        return self.base(dg.name, dg.index).cw + dg.dz - dg.dt

    def word_parity(self, word: Word) -> int:
        return sum(self.parity(dg) for dg in word) % 2

    def word_grading(self, word: Word, lam: int) -> Grading:
        deg = sum(self.deg(dg) for dg in word)
        cw = sum((self.cw(dg) for dg in word), Fraction(0))
        dim = Fraction(sum(dg.dz for dg in word) - 2 * lam)
        return Grading(deg, cw, dim, cw - dim)

    # -- expression constructors -------------------------------------------

    def zero(self) -> "DiffPoly":
        return DiffPoly(self, {})

    def one(self, coef=1, lam: int = 0) -> "DiffPoly":
        c = _as_fraction(coef)
        if c == 0:
            return self.zero()
        return DiffPoly(self, {((), lam): c})

    def monomial(self, word: Sequence[DerivedGenerator], coef=1, lam: int = 0) -> "DiffPoly":
        return self.poly([(tuple(word), Scalar.of(coef, lam))])

    def poly(self, terms: Iterable[Tuple[Sequence[DerivedGenerator], Scalar]]) -> "DiffPoly":
        acc: Dict[TermKey, Fraction] = {}
        for word, sc in terms:
            w = tuple(word)
            for dg in w:
                self.base(dg.name, dg.index)  # undeclared id -> KeyError
                if dg.dt and self.species == "vertex":
                    raise ValueError("vertex-species generators carry no t-derivatives")
            sorted_word = _sort_word(self, w)
            if sorted_word is None or sc.is_zero():
                continue
            cw, sign = sorted_word
            key = (cw, sc.lam)
            acc[key] = acc.get(key, Fraction(0)) + sign * sc.coef
        return DiffPoly(self, {k: v for k, v in acc.items() if v != 0})


def _sort_word(system: System, word: Word) -> Optional[Tuple[Word, int]]:
    """Canonically sort a generator word, tracking the Koszul sign.

    Returns ``(sorted_word, sign)``, or ``None`` when the word contains a
    repeated odd generator and the monomial vanishes.
    """
    w = list(word)
    sign = 1
    for i in range(1, len(w)):
        j = i
        while j > 0 and _dg_sort_key(w[j]) < _dg_sort_key(w[j - 1]):
            if system.parity(w[j]) and system.parity(w[j - 1]):
                sign = -sign
            w[j], w[j - 1] = w[j - 1], w[j]
            j -= 1
    for a, b in zip(w, w[1:]):
        if a == b and system.parity(a):
            return None
    return tuple(w), sign


class DiffPoly:
    """A differential polynomial: finite sum of (monomial, lam-power) terms.

    Internally a map from ``(canonical word, lam)`` to a nonzero Fraction.
    Instances are immutable; arithmetic returns new objects.
    """

    __slots__ = ("system", "_terms", "_hash")

    def __init__(self, system: System, terms: Dict[TermKey, Fraction]):
        self.system = system
        self._terms = terms
        self._hash = None

    # -- inspection ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self._terms

    def terms(self) -> Iterator[Tuple[Word, Scalar]]:
        """Iterate ``(monomial, Scalar)`` pairs in canonical order."""
        for (word, lam) in sorted(self._terms, key=lambda k: (tuple(map(_dg_sort_key, k[0])), k[1])):
            yield word, Scalar(self._terms[(word, lam)], lam)

    def num_terms(self) -> int:
        return len(self._terms)

    def coefficient(self, word: Sequence[DerivedGenerator], lam: int = 0) -> Scalar:
        sw = _sort_word(self.system, tuple(word))
        if sw is None:
            return Scalar.of(0, lam)
        w, sign = sw
        return Scalar(sign * self._terms.get((w, lam), Fraction(0)), lam)

    def constant_part(self) -> Dict[int, Fraction]:
        """lam-power -> coefficient of the empty monomial."""
        return {lam: c for (word, lam), c in self._terms.items() if not word}

    def lam_powers(self) -> List[int]:
        return sorted({lam for (_, lam) in self._terms})

    def max_degree(self) -> int:
        return max((len(w) for (w, _) in self._terms), default=0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DiffPoly)
            and self.system is other.system
            and self._terms == other._terms
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        bits = []
        for word, sc in self.terms():
            mono = "*".join(dg.label() for dg in word) or "1"
            bits.append(f"({sc!r})*{mono}")
        return " + ".join(bits)

    # -- linear structure ------------------------------------------------------

    def _merged(self, other: "DiffPoly", flip: bool) -> "DiffPoly":
        if self.system is not other.system:
            raise ValueError("expressions belong to different systems")
        out = dict(self._terms)
        for k, v in other._terms.items():
            nv = out.get(k, Fraction(0)) + (-v if flip else v)
            if nv == 0:
                out.pop(k, None)
            else:
                out[k] = nv
        return DiffPoly(self.system, out)

    def __add__(self, other: "DiffPoly") -> "DiffPoly":
        return self._merged(other, flip=False)

    def __sub__(self, other: "DiffPoly") -> "DiffPoly":
        return self._merged(other, flip=True)

    def __neg__(self) -> "DiffPoly":
        return DiffPoly(self.system, {k: -v for k, v in self._terms.items()})

    def scale(self, factor) -> "DiffPoly":
        """Multiply by a Scalar, Fraction or int."""
        if isinstance(factor, Scalar):
            if factor.coef == 0:
                return self.system.zero()
            return DiffPoly(
                self.system,
                {(w, lam + factor.lam): c * factor.coef for (w, lam), c in self._terms.items()},
            )
        f = _as_fraction(factor)
        if f == 0:
            return self.system.zero()
        return DiffPoly(self.system, {k: c * f for k, c in self._terms.items()})

    def __mul__(self, other: "DiffPoly") -> "DiffPoly":
        return self.mul(other)

    def mul(self, other: "DiffPoly", max_degree: Optional[int] = None) -> "DiffPoly":
        """Graded product; terms above ``max_degree`` are dropped when set."""
        if self.system is not other.system:
            raise ValueError("expressions belong to different systems")
        sys_ = self.system
        acc: Dict[TermKey, Fraction] = {}
        for (w1, l1), c1 in self._terms.items():
            for (w2, l2), c2 in other._terms.items():
                if max_degree is not None and len(w1) + len(w2) > max_degree:
                    continue
                sw = _sort_word(sys_, w1 + w2)
                if sw is None:
                    continue
                word, sign = sw
                key = (word, l1 + l2)
                nv = acc.get(key, Fraction(0)) + sign * c1 * c2
                if nv == 0:
                    acc.pop(key, None)
                else:
                    acc[key] = nv
        return DiffPoly(sys_, acc)

    def filter(self, pred: Callable[[Word, int], bool]) -> "DiffPoly":
        return DiffPoly(self.system, {k: v for k, v in self._terms.items() if pred(k[0], k[1])})

    def restrict_lam(self, lam: int) -> "DiffPoly":
        return self.filter(lambda w, l: l == lam)

    # -- derivatives ---------------------------------------------------------

    def _derive(self, slot: str) -> "DiffPoly":
        sys_ = self.system
        acc: Dict[TermKey, Fraction] = {}
        for (word, lam), c in self._terms.items():
            for i, dg in enumerate(word):
                if slot == "dz":
                    ndg = DerivedGenerator(dg.name, dg.index, dg.dz + 1, dg.dt)
                else:
                    ndg = DerivedGenerator(dg.name, dg.index, dg.dz, dg.dt + 1)
                sw = _sort_word(sys_, word[:i] + (ndg,) + word[i + 1 :])
                if sw is None:
                    continue
                nw, sign = sw
                key = (nw, lam)
                nv = acc.get(key, Fraction(0)) + sign * c
                if nv == 0:
                    acc.pop(key, None)
                else:
                    acc[key] = nv
        return DiffPoly(sys_, acc)

    def dz(self, n: int = 1) -> "DiffPoly":
        """Total z-derivative (Leibniz), applied ``n`` times."""
        p = self
        for _ in range(n):
            p = p._derive("dz")
        return p

    def dt(self, n: int = 1) -> "DiffPoly":
        """Total t-derivative, for moyal-species systems."""
        if self.system.species != "moyal":
            raise ValueError("t-derivative defined only for moyal-species systems")
        p = self
        for _ in range(n):
            p = p._derive("dt")
        return p

    def partial(self, dg: DerivedGenerator) -> "DiffPoly":
        """Graded left partial derivative with respect to a derived generator."""
        sys_ = self.system
        p_dg = sys_.parity(dg)
        acc: Dict[TermKey, Fraction] = {}
        for (word, lam), c in self._terms.items():
            before = 0
            for i, g in enumerate(word):
                if g == dg:
                    sign = -1 if (p_dg and before % 2) else 1
                    key = (word[:i] + word[i + 1 :], lam)
                    nv = acc.get(key, Fraction(0)) + sign * c
                    if nv == 0:
                        acc.pop(key, None)
                    else:
                        acc[key] = nv
                before += sys_.parity(g)
        return DiffPoly(sys_, acc)

    # -- gradings -------------------------------------------------------------

    def grade(self) -> Optional[Grading]:
        """Common (deg, cw, dim, hw) of all terms, or None if inhomogeneous."""
        out: Optional[Grading] = None
        for (word, lam) in self._terms:
            g = self.system.word_grading(word, lam)
            if out is None:
                out = g
            elif out != g:
                return None
        return out

    def total_dz(self) -> Dict[TermKey, int]:
        return {k: sum(dg.dz for dg in k[0]) for k in self._terms}

    # -- serialization ----------------------------------------------------------

    def to_obj(self) -> dict:
        terms = []
        for word, sc in self.terms():
            terms.append(
                {
                    "mono": [{"gen": g.name, "k": g.index, "dz": g.dz, "dt": g.dt} for g in word],
                    "coef": sc.to_obj(),
                }
            )
        return {"terms": terms}

    @staticmethod
    def from_obj(system: System, obj: dict) -> "DiffPoly":
        terms = []
        for t in obj["terms"]:
            word = tuple(
                system.gen(m["gen"], int(m["k"]), int(m.get("dz", 0)), int(m.get("dt", 0)))
                for m in t["mono"]
            )
            terms.append((word, Scalar.from_obj(t["coef"])))
        return system.poly(terms)


# -- spec-level operation wrappers ---------------------------------------------


def canonicalize(system: System, raw_terms: Iterable[Tuple[Sequence[DerivedGenerator], Scalar]]) -> DiffPoly:
    """Build the canonical sorted form of a raw term list, with Koszul signs."""
    return system.poly(raw_terms)


def grade(p: DiffPoly) -> Optional[Grading]:
    return p.grade()


def apply_T(p: DiffPoly) -> DiffPoly:
    """Total z-derivative."""
    return p.dz()


def euler_derivative(p: DiffPoly, name: str, index: int) -> DiffPoly:
    """Variational derivative sum_k (-T)^k d/d(dz^k gen).

    Vanishes identically on total z-derivatives; a constant-free vertex
    expression lies in the image of T iff this vanishes for every generator.
    """
    if p.system.species != "vertex":
        raise ValueError("euler_derivative is defined for vertex-species systems")
    orders = sorted({dg.dz for (w, _) in p._terms for dg in w if dg.base_key == (name, index)})
    out = p.system.zero()
    for k in orders:
        q = p.partial(DerivedGenerator(name, index, k, 0))
        out = out + q.dz(k).scale(Fraction((-1) ** k))
    return out


# -- integration by parts ------------------------------------------------------


def _word_profile(word: Word) -> Tuple[Tuple[str, int, int], ...]:
    return tuple(sorted((dg.name, dg.index, dg.dt) for dg in word))


def _enumerate_slice(system: System, profile: Tuple[Tuple[str, int, int], ...], total_dz: int) -> List[Word]:
    """All canonical monomials with the given base-factor multiset and total dz."""
    groups: List[Tuple[Tuple[str, int, int], int]] = []
    for key, grp in itertools.groupby(profile):
        groups.append((key, len(list(grp))))

    def distributions(count: int, total: int, odd: bool) -> Iterator[Tuple[int, ...]]:
        # weakly decreasing dz-tuples; strictly decreasing for odd generators
        def rec(slots: int, tot: int, cap: Optional[int]) -> Iterator[Tuple[int, ...]]:
            if slots == 0:
                if tot == 0:
                    yield ()
                return
            hi = tot if cap is None else min(cap, tot)
            lo = 0
            for v in range(hi, lo - 1, -1):
                nxt_cap = v - 1 if odd else v
                if nxt_cap < 0 and slots > 1:
                    continue
                for rest in rec(slots - 1, tot - v, nxt_cap):
                    yield (v,) + rest

        yield from rec(count, total, None)

    words: List[Word] = []

    def build(gi: int, remaining: int, acc: List[DerivedGenerator]):
        if gi == len(groups):
            if remaining == 0:
                sw = _sort_word(system, tuple(acc))
                if sw is not None:
                    words.append(sw[0])
            return
        (name, index, dt), count = groups[gi]
        odd = bool(system.parity(DerivedGenerator(name, index, 0, dt)))
        for s in range(remaining + 1):
            for dist in distributions(count, s, odd):
                build(
                    gi + 1,
                    remaining - s,
                    acc + [DerivedGenerator(name, index, d, dt) for d in dist],
                )

    build(0, total_dz, [])
    return sorted(set(words), key=lambda w: tuple(map(_dg_sort_key, w)))


@lru_cache(maxsize=None)
def _slice_reduction(system: System, profile: Tuple[Tuple[str, int, int], ...], total_dz: int):
    """Row-reduced image of T on a graded slice.

    Returns (basis_index, rows) where each row is
    (pivot_column, {column: coef}, {preimage_word: coef}) and rows are in
    reduced echelon form with respect to the canonical column order.
    """
    basis = _enumerate_slice(system, profile, total_dz)
    basis_index = {w: i for i, w in enumerate(basis)}
    pre_basis = _enumerate_slice(system, profile, total_dz - 1) if total_dz > 0 else []

    rows: List[Tuple[int, Dict[int, Fraction], Dict[Word, Fraction]]] = []
    for pw in pre_basis:
        image = system.monomial(pw).dz()
        vec: Dict[int, Fraction] = {}
        for (w, lam), c in image._terms.items():
            vec[basis_index[w]] = vec.get(basis_index[w], Fraction(0)) + c
        vec = {i: c for i, c in vec.items() if c != 0}
        combo: Dict[Word, Fraction] = {pw: Fraction(1)}
        # eliminate against existing rows
        for piv, rvec, rcombo in rows:
            if piv in vec:
                f = vec[piv]
                for i, c in rvec.items():
                    nv = vec.get(i, Fraction(0)) - f * c
                    if nv == 0:
                        vec.pop(i, None)
                    else:
                        vec[i] = nv
                for w, c in rcombo.items():
                    nv = combo.get(w, Fraction(0)) - f * c
                    if nv == 0:
                        combo.pop(w, None)
                    else:
                        combo[w] = nv
        if not vec:
            continue
        piv = min(vec)
        f = vec[piv]
        vec = {i: c / f for i, c in vec.items()}
        combo = {w: c / f for w, c in combo.items()}
        # back-substitute into existing rows
        new_rows = []
        for opiv, ovec, ocombo in rows:
            if piv in ovec:
                g = ovec[piv]
                for i, c in vec.items():
                    nv = ovec.get(i, Fraction(0)) - g * c
                    if nv == 0:
                        ovec.pop(i, None)
                    else:
                        ovec[i] = nv
                for w, c in combo.items():
                    nv = ocombo.get(w, Fraction(0)) - g * c
                    if nv == 0:
                        ocombo.pop(w, None)
                    else:
                        ocombo[w] = nv
            new_rows.append((opiv, ovec, ocombo))
        new_rows.append((piv, vec, combo))
        rows = sorted(new_rows, key=lambda r: r[0])
    return basis_index, tuple(rows)


def ibp_decompose(p: DiffPoly) -> Tuple[DiffPoly, DiffPoly]:
    """Decompose p = T(C) + h with h in a fixed complement of im T.

    The complement is determined per graded slice by exact row reduction of
    the T-image against the canonical monomial order, so the decomposition
    is deterministic and h vanishes iff p is a total z-derivative.
    Raises ValueError if p has a constant term.
    """
    if p.constant_part():
        raise ValueError("ibp_decompose requires an expression without constant term")
    sys_ = p.system
    groups: Dict[Tuple[Tuple[Tuple[str, int, int], ...], int, int], Dict[Word, Fraction]] = {}
    for (word, lam), c in p._terms.items():
        key = (_word_profile(word), sum(dg.dz for dg in word), lam)
        groups.setdefault(key, {})[word] = c

    c_terms: Dict[TermKey, Fraction] = {}
    h_terms: Dict[TermKey, Fraction] = {}
    for (profile, dzsum, lam), vec_by_word in groups.items():
        basis_index, rows = _slice_reduction(sys_, profile, dzsum)
        vec = {basis_index[w]: c for w, c in vec_by_word.items()}
        inv_index = {i: w for w, i in basis_index.items()}
        for piv, rvec, rcombo in rows:
            f = vec.get(piv)
            if not f:
                continue
            for i, c in rvec.items():
                nv = vec.get(i, Fraction(0)) - f * c
                if nv == 0:
                    vec.pop(i, None)
                else:
                    vec[i] = nv
            for w, c in rcombo.items():
                key = (w, lam)
                nv = c_terms.get(key, Fraction(0)) + f * c
                if nv == 0:
                    c_terms.pop(key, None)
                else:
                    c_terms[key] = nv
        for i, c in vec.items():
            if c != 0:
                h_terms[(inv_index[i], lam)] = h_terms.get((inv_index[i], lam), Fraction(0)) + c
    C = DiffPoly(sys_, {k: v for k, v in c_terms.items() if v != 0})
    h = DiffPoly(sys_, {k: v for k, v in h_terms.items() if v != 0})
    return C, h


class Derivation:
    """A graded derivation determined by its values on derived generators."""

    def __init__(self, system: System, parity: int, rule: Callable[[DerivedGenerator], DiffPoly], name: str = ""):
        self.system = system
        self.parity = parity
        self.rule = rule
        self.name = name

    @classmethod
    def from_base_rules(
        cls,
        system: System,
        parity: int,
        images: Dict[Tuple[str, int], DiffPoly],
        name: str = "",
    ) -> "Derivation":
        """Derivation commuting with both total derivatives, given on bases."""

        def rule(dg: DerivedGenerator) -> DiffPoly:
            img = images.get(dg.base_key)
            if img is None or img.is_zero():
                return system.zero()
            out = img.dz(dg.dz)
            if dg.dt:
                out = out.dt(dg.dt)
            return out

        return cls(system, parity, rule, name)

    def __call__(self, p: DiffPoly) -> DiffPoly:
        sys_ = self.system
        out = sys_.zero()
        for (word, lam), c in p._terms.items():
            before = 0
            for i, dg in enumerate(word):
                img = self.rule(dg)
                if not img.is_zero():
                    sign = -1 if (self.parity and before % 2) else 1
                    left = sys_.monomial(word[:i], coef=sign * c, lam=lam)
                    right = sys_.monomial(word[i + 1 :])
                    out = out + left.mul(img).mul(right)
                before += sys_.parity(dg)
        return out
