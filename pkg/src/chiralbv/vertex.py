"""Free-field vertex algebra engine.

Contraction tables hold the central singular OPE of generator pairs as a
finite map {pole order -> Scalar}.  Wick's theorem produces the singular
coefficients C_n of the OPE of two normal-ordered monomials; the Borcherds
commutator formula turns them into the modes Lie bracket on V[z,1/z]
modulo total derivatives, with a normal form based on integration by parts.
Maurer-Cartan residuals delta(I) + (1/2) lam^{-1} [I, I] certify quantum
master equations.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, List, Tuple

from .algebra import (
    Derivation,
    DerivedGenerator,
    DiffPoly,
    Generator,
    Scalar,
    System,
    Word,
    _sort_word,
    ibp_decompose,
)

__all__ = [
    "ContractionTable",
    "ModeElement",
    "wick_ope",
    "nth_product",
    "mode_bracket",
    "bracket_zero_modes",
    "mode_normal_form",
    "mc_residual",
    "make_heisenberg",
    "make_bcov",
    "delta_bcov",
]

BaseKey = Tuple[str, int]


class ContractionTable:
    """Central two-point contractions a(z)b(w) ~ sum_k c_k/(z-w)^k.

    Entries are given for ordered pairs; the reversed pair is filled in by
    graded symmetry c_k(b,a) = (-1)^{p(a)p(b)} (-1)^k c_k(a,b).
    Only central (scalar-valued) singular parts are supported; all systems
    here are free.
    """

    def __init__(self, system: System, entries: Dict[Tuple[BaseKey, BaseKey], Dict[int, Scalar]]):
        self.system = system
        table: Dict[Tuple[BaseKey, BaseKey], Dict[int, Scalar]] = {}
        for (a, b), poles in entries.items():
            ga, gb = system.base(*a), system.base(*b)
            clean = {int(k): v for k, v in poles.items() if not v.is_zero()}
            for k in clean:
                if k < 1:
                    raise ValueError("pole orders must be >= 1")
            self._merge(table, (a, b), clean)
            swap_sign = (-1) ** (ga.parity * gb.parity)
            self._merge(
                table,
                (b, a),
                {k: v * Fraction(swap_sign * (-1) ** k) for k, v in clean.items()},
            )
        for (a, b), poles in table.items():
            ga, gb = system.base(*a), system.base(*b)
            swap_sign = (-1) ** (ga.parity * gb.parity)
            for k, v in poles.items():
                mirror = table.get((b, a), {}).get(k)
                expect = v * Fraction(swap_sign * (-1) ** k)
                if mirror is None or mirror != expect:
                    raise ValueError(f"contraction table breaks graded symmetry at {a},{b} pole {k}")
        self._table = table
        self.max_pole = max((k for poles in table.values() for k in poles), default=0)

    @staticmethod
    def _merge(table, key, poles: Dict[int, Scalar]):
        if not poles:
            return
        if key in table:
            if table[key] != poles:
                raise ValueError(f"conflicting entries for pair {key}")
            return
        table[key] = dict(poles)

    def entry(self, a: BaseKey, b: BaseKey) -> Dict[int, Scalar]:
        return self._table.get((a, b), {})

    def to_obj(self) -> dict:
        pairs = []
        for (a, b), poles in sorted(self._table.items()):
            pairs.append(
                {
                    "a": f"{a[0]}{a[1]}",
                    "b": f"{b[0]}{b[1]}",
                    "poles": {str(k): v.to_obj() for k, v in sorted(poles.items())},
                }
            )
        return {"pairs": pairs}

    @staticmethod
    def _parse_flat_id(s: str) -> BaseKey:
        i = len(s)
        while i > 0 and s[i - 1].isdigit():
            i -= 1
        if i == 0 or i == len(s):
            raise ValueError(f"malformed generator id {s!r}")
        return (s[:i], int(s[i:]))

    @staticmethod
    def from_obj(system: System, obj: dict) -> "ContractionTable":
        entries: Dict[Tuple[BaseKey, BaseKey], Dict[int, Scalar]] = {}
        for pair in obj["pairs"]:
            a = ContractionTable._parse_flat_id(pair["a"])
            b = ContractionTable._parse_flat_id(pair["b"])
            poles = {int(k): Scalar.from_obj(v) for k, v in pair["poles"].items()}
            if (a, b) not in entries and (b, a) not in entries:
                entries[(a, b)] = poles
        return ContractionTable(system, entries)


def _single_term(p: DiffPoly) -> Tuple[Word, int, Fraction]:
    if len(p._terms) != 1:
        raise ValueError("expected a monomial (single-term expression)")
    (word, lam), c = next(iter(p._terms.items()))
    return word, lam, c


def _falling_coeff(k: int, a: int, b: int) -> Fraction:
    # d_z^a d_w^b (z-w)^{-k} = (-1)^a (k+a+b-1)!/(k-1)! (z-w)^{-(k+a+b)}
    return Fraction((-1) ** a * math.factorial(k + a + b - 1), math.factorial(k - 1))


def _wick_terms(
    system: System,
    tbl: ContractionTable,
    wordA: Word,
    lamA: int,
    cA: Fraction,
    wordB: Word,
    lamB: int,
    cB: Fraction,
    n_min: int,
) -> Dict[int, DiffPoly]:
    """All singular coefficients C_n (n >= n_min) of the OPE of two monomials."""
    p, q = len(wordA), len(wordB)
    out: Dict[int, DiffPoly] = {}
    if p == 0 or q == 0:
        return out
    parA = [system.parity(g) for g in wordA]
    parB = [system.parity(g) for g in wordB]

    # pre-compute usable contraction entries per position pair
    pair_entry: Dict[Tuple[int, int], Dict[int, Scalar]] = {}
    for i in range(p):
        for j in range(q):
            ent = tbl.entry(wordA[i].base_key, wordB[j].base_key)
            if not ent:
                continue
            a, b = wordA[i].dz, wordB[j].dz
            pair_entry[(i, j)] = {
                k + a + b: v * _falling_coeff(k, a, b) for k, v in ent.items()
            }

    # enumerate partial matchings over contractible positions only
    partners: Dict[int, List[int]] = {}
    for i in range(p):
        js = [j for j in range(q) if (i, j) in pair_entry]
        if js:
            partners[i] = js
    contractible = sorted(partners)

    matchings: List[List[Tuple[int, int]]] = []

    def enumerate_matchings(idx: int, used: set, current: List[Tuple[int, int]]):
        if idx == len(contractible):
            if current:
                matchings.append(list(current))
            return
        i = contractible[idx]
        enumerate_matchings(idx + 1, used, current)  # leave i uncontracted
        for j in partners[i]:
            if j not in used:
                used.add(j)
                current.append((i, j))
                enumerate_matchings(idx + 1, used, current)
                current.pop()
                used.discard(j)

    enumerate_matchings(0, set(), [])

    for pairs in matchings:
        # Koszul sign of extracting each contracted pair to adjacency
        entries: List[Tuple[str, int]] = [("A", i) for i in range(p)] + [
            ("B", j) for j in range(q)
        ]
        parity_of = lambda e: parA[e[1]] if e[0] == "A" else parB[e[1]]
        sign = 1
        for (i, j) in pairs:
            pos_i = entries.index(("A", i))
            pos_j = entries.index(("B", j))
            between = sum(parity_of(e) for e in entries[pos_i + 1 : pos_j])
            if parA[i] and between % 2:
                sign = -sign
            del entries[pos_j]
            del entries[pos_i]

        # convolve the per-pair pole maps
        polemap: Dict[int, Scalar] = {0: Scalar.of(1)}
        for pr in pairs:
            nxt: Dict[int, Scalar] = {}
            for P0, s0 in polemap.items():
                for k, v in pair_entry[pr].items():
                    sc = s0 * v
                    key = P0 + k
                    nxt[key] = nxt.get(key, Scalar.of(0, sc.lam)) + sc
            polemap = {k: v for k, v in nxt.items() if not v.is_zero()}
        if not polemap:
            continue
        max_pole = max(polemap)

        remA = [e[1] for e in entries if e[0] == "A"]
        remB = [e[1] for e in entries if e[0] == "B"]
        rem_word_B = tuple(wordB[j] for j in remB)

        # Taylor re-expansion of surviving A-factors at w
        smax = max_pole - 1 - n_min
        if smax < 0:
            continue
        for svec in _compositions_upto(len(remA), smax):
            coef_taylor = Fraction(1)
            shifted = []
            for i, s in zip(remA, svec):
                g = wordA[i]
                shifted.append(DerivedGenerator(g.name, g.index, g.dz + s, g.dt))
                coef_taylor /= math.factorial(s)
            sw = _sort_word(system, tuple(shifted) + rem_word_B)
            if sw is None:
                continue
            mono, csign = sw
            stot = sum(svec)
            base = cA * cB * coef_taylor * sign * csign
            for P, sc in polemap.items():
                n = P - 1 - stot
                if n < n_min:
                    continue
                term = DiffPoly(
                    system,
                    {(mono, lamA + lamB + sc.lam): base * sc.coef},
                )
                out[n] = out.get(n, system.zero()) + term
    return {n: v for n, v in out.items() if not v.is_zero()}


def _compositions_upto(slots: int, total_max: int):
    """All tuples of `slots` nonnegative ints with sum <= total_max."""
    if slots == 0:
        yield ()
        return
    for first in range(total_max + 1):
        for rest in _compositions_upto(slots - 1, total_max - first):
            yield (first,) + rest


def wick_ope(A: DiffPoly, B: DiffPoly, tbl: ContractionTable, n_min: int = 0) -> Dict[int, DiffPoly]:
    """Singular OPE coefficients {n >= n_min: C_n} of two monomial fields.

    C_n multiplies (z-w)^{-(n+1)}; the sum runs over nonempty Wick pairings
    with central contractions, Koszul signs and Taylor re-expansion of the
    surviving z-side factors at w.  Generator pairs absent from the table
    contract to zero.
    """
    wordA, lamA, cA = _single_term(A)
    wordB, lamB, cB = _single_term(B)
    return _wick_terms(A.system, tbl, wordA, lamA, cA, wordB, lamB, cB, n_min)


def nth_product(A: DiffPoly, n: int, B: DiffPoly, tbl: ContractionTable) -> DiffPoly:
    """The n-th product A_(n) B for n >= 0, extended bilinearly."""
    if n < 0:
        raise ValueError("nth_product is defined for n >= 0")
    sys_ = A.system
    out = sys_.zero()
    for (wa, la), ca in A._terms.items():
        for (wb, lb), cb in B._terms.items():
            terms = _wick_terms(sys_, tbl, wa, la, ca, wb, lb, cb, n)
            if n in terms:
                out = out + terms[n]
    return out


class ModeElement:
    """A finite sum of A_k tensor z^k, representing modes in V[z,1/z]/im d.

    Equality is only meaningful through `mode_normal_form`; the normal form
    keeps, per z-power, the non-integrable part of the coefficient, pushes
    total derivatives to lower powers via (T A) z^k == -k A z^{k-1}, and
    flags central constants at z^{-1}.
    """

    __slots__ = ("system", "parts")

    def __init__(self, system: System, parts: Dict[int, DiffPoly]):
        self.system = system
        self.parts = {k: p for k, p in parts.items() if not p.is_zero()}

    @staticmethod
    def zero_mode(p: DiffPoly) -> "ModeElement":
        return ModeElement(p.system, {0: p})

    def is_zero(self) -> bool:
        return not self.parts

    def part(self, k: int) -> DiffPoly:
        return self.parts.get(k, self.system.zero())

    def central_part(self) -> Dict[int, Fraction]:
        """lam-power -> coefficient of the central mode 1 tensor z^{-1}."""
        return self.part(-1).constant_part()

    def __add__(self, other: "ModeElement") -> "ModeElement":
        if self.system is not other.system:
            raise ValueError("mode elements belong to different systems")
        parts = dict(self.parts)
        for k, p in other.parts.items():
            parts[k] = parts.get(k, self.system.zero()) + p
        return ModeElement(self.system, parts)

    def __sub__(self, other: "ModeElement") -> "ModeElement":
        return self + other.scale(Fraction(-1))

    def scale(self, factor) -> "ModeElement":
        return ModeElement(self.system, {k: p.scale(factor) for k, p in self.parts.items()})

    def __repr__(self) -> str:
        if not self.parts:
            return "0"
        return " + ".join(f"[{p!r}] z^{k}" for k, p in sorted(self.parts.items()))

    def to_obj(self) -> dict:
        return {
            "parts": [
                {"zpow": k, **self.parts[k].to_obj()} for k in sorted(self.parts)
            ]
        }

    @staticmethod
    def from_obj(system: System, obj: dict) -> "ModeElement":
        return ModeElement(
            system,
            {int(p["zpow"]): DiffPoly.from_obj(system, p) for p in obj["parts"]},
        )


def _gen_binom(m: int, j: int) -> Fraction:
    # binomial coefficient with integer (possibly negative) upper argument
    num = 1
    for s in range(j):
        num *= m - s
    return Fraction(num, math.factorial(j))


def mode_bracket(X: ModeElement, Y: ModeElement, tbl: ContractionTable) -> ModeElement:
    """Borcherds commutator [A_(m), B_(n)] = sum_j C(m,j) (A_(j)B)_(m+n-j).

    The j-sum truncates at the largest pole the table can produce.  Negative
    output powers (central terms) are retained.
    """
    sys_ = X.system
    acc: Dict[int, DiffPoly] = {}
    for m, Am in X.parts.items():
        for n, Bn in Y.parts.items():
            for (wa, la), ca in Am._terms.items():
                for (wb, lb), cb in Bn._terms.items():
                    prods = _wick_terms(sys_, tbl, wa, la, ca, wb, lb, cb, 0)
                    for j, Cj in prods.items():
                        coef = _gen_binom(m, j)
                        if coef == 0:
                            continue
                        k = m + n - j
                        acc[k] = acc.get(k, sys_.zero()) + Cj.scale(coef)
    return ModeElement(sys_, acc)


def bracket_zero_modes(A: DiffPoly, B: DiffPoly, tbl: ContractionTable) -> ModeElement:
    """Fast path for [A z^0, B z^0] = (A_(0) B) z^0."""
    return ModeElement(A.system, {0: nth_product(A, 0, B, tbl)})


def mode_normal_form(X: ModeElement) -> ModeElement:
    """Canonical representative modulo im d.

    Processes z-powers from the top down: at each power the coefficient is
    split into T(C) + h by `ibp_decompose`; h stays, while T(C) z^k is
    replaced by -k C z^{k-1}.  Constants vanish at every power except -1,
    where they are central and kept.  The result is empty iff X == 0 in
    V[z,1/z]/im d.
    """
    sys_ = X.system
    pending = {k: p for k, p in X.parts.items()}
    result: Dict[int, DiffPoly] = {}
    while pending:
        k = max(pending)
        p = pending.pop(k)
        if p.is_zero():
            continue
        const = p.constant_part()
        if const:
            nonconst = p.filter(lambda w, l: bool(w))
            if k == -1:
                keep = p - nonconst
                result[k] = result.get(k, sys_.zero()) + keep
            p = nonconst
        if p.is_zero():
            continue
        C, h = ibp_decompose(p)
        if not h.is_zero():
            result[k] = result.get(k, sys_.zero()) + h
        if k != 0 and not C.is_zero():
            carried = C.scale(Fraction(-k))
            pending[k - 1] = pending.get(k - 1, sys_.zero()) + carried
    return ModeElement(sys_, result)


def mc_residual(
    I: DiffPoly,
    delta: Derivation,
    tbl: ContractionTable,
    hbar_inv: Scalar = Scalar(Fraction(1), -1),
) -> ModeElement:
    """Normal form of delta(I) z^0 + (1/2) hbar_inv [I z^0, I z^0].

    An empty result certifies the renormalized quantum master equation for
    the chiral interaction I.  ``hbar_inv`` defaults to lam^{-1}; pass
    Scalar.of(1) for tables already normalized to lam = 1.
    """
    if delta.parity != 1:
        raise ValueError("the differential must be odd (degree 1)")
    X = ModeElement.zero_mode(I)
    br = mode_bracket(X, X, tbl).scale(hbar_inv * Fraction(1, 2))
    total = ModeElement.zero_mode(delta(I)) + br
    return mode_normal_form(total)


# -- standard systems ------------------------------------------------------------


def make_heisenberg(lam_power: int = 0) -> Tuple[System, ContractionTable]:
    """Single weight-1 boson b0 with b0(z)b0(w) ~ lam^p/(z-w)^2."""
    sys_ = System("vertex", [Generator("b", 0, 0, 0, Fraction(1))])
    tbl = ContractionTable(sys_, {(("b", 0), ("b", 0)): {2: Scalar(Fraction(1), lam_power)}})
    return sys_, tbl


def make_bcov(kmax: int, lam_power: int = 0) -> Tuple[System, ContractionTable]:
    """Descendant fields b_k (even, cw 1-k) and eta_k (odd, cw -k), k <= kmax.

    The kernel is degenerate: only b0-b0 contracts, with a double pole.
    """
    gens = [Generator("b", k, 0, 0, Fraction(1 - k)) for k in range(kmax + 1)]
    gens += [Generator("eta", k, 1, 1, Fraction(-k)) for k in range(kmax + 1)]
    sys_ = System("vertex", gens)
    tbl = ContractionTable(sys_, {(("b", 0), ("b", 0)): {2: Scalar(Fraction(1), lam_power)}})
    return sys_, tbl


def delta_bcov(system: System) -> Derivation:
    """The BCOV differential: b_{k+1} -> d_z eta_k, everything else to zero."""
    images = {}
    for g in system.generators():
        if g.name == "b" and g.index >= 1 and system.has("eta", g.index - 1):
            images[(g.name, g.index)] = system.monomial([system.gen("eta", g.index - 1, dz=1)])
    return Derivation.from_base_rules(system, 1, images, name="delta_bcov")
