"""Moyal algebra on the (z, t) Darboux pair and the flat-connection solver.

The algebra B is freely generated by an even generator bt (cw 1) and an odd
generator et (cw 1), each carrying z- and t-derivative multi-indices with
cw(Dz^m Dt^k x) = m - k + 1.  The star product deforms the Poisson bracket
{F,G} = dt(F) dz(G) - dz(F) dt(G); truncation by the t-derivative count T is
a two-sided ideal, so all identities hold exactly below a T-budget.

The solver produces the unique odd element J = eta-tilde + ... with
delta(J) + (1/2)[J,J]_star = 0, delta^{-1}(J) = 0, level by level in T.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .algebra import (
    Derivation,
    DerivedGenerator,
    DiffPoly,
    Generator,
    System,
)

__all__ = [
    "make_b_system",
    "t_level",
    "split_t_levels",
    "star",
    "star_bracket",
    "delta_b",
    "delta_star",
    "delta_inv",
    "closed_form_j0",
    "reflection",
    "fedosov_solve",
    "FedosovSolution",
]


def make_b_system() -> System:
    return System(
        "moyal",
        [
            Generator("bt", 0, 0, 0, Fraction(1)),
            Generator("et", 0, 1, 1, Fraction(1)),
        ],
    )


def bt(system: System, dz: int = 0, dt: int = 0) -> DerivedGenerator:
    return system.gen("bt", 0, dz, dt)


def et(system: System, dz: int = 0, dt: int = 0) -> DerivedGenerator:
    return system.gen("et", 0, dz, dt)


def t_level(word) -> int:
    return sum(dg.dt for dg in word)


def split_t_levels(p: DiffPoly) -> Dict[int, DiffPoly]:
    out: Dict[int, DiffPoly] = {}
    for (word, lam), c in p._terms.items():
        lv = t_level(word)
        out.setdefault(lv, p.system.zero())
        out[lv] = out[lv] + DiffPoly(p.system, {(word, lam): c})
    return out


def star(F: DiffPoly, G: DiffPoly, tmax: int, strict: bool = True) -> DiffPoly:
    """Moyal product, exact through t-derivative count <= tmax.

    F * G = sum_{k1,k2} (-1)^{k2} / (2^{k1+k2} k1! k2!)
            (Dt^{k1} Dz^{k2} F) (Dt^{k2} Dz^{k1} G).

    When ``strict`` is set (the default), a budget below the input
    T-levels is an error; with strict=False such inputs contribute
    nothing below the budget and are skipped, which is exact for
    consumers that only read T-levels <= tmax.
    """
    sys_ = F.system
    out = sys_.zero()
    levels_f = split_t_levels(F)
    levels_g = split_t_levels(G)
    if strict and levels_f and levels_g and min(levels_f) + min(levels_g) > tmax:
        raise ValueError("tmax is below the T-levels already present")
    for tf, Fc in levels_f.items():
        for tg, Gc in levels_g.items():
            budget = tmax - tf - tg
            if budget < 0:
                # such pairs only produce T-levels above tmax
                continue
            # cache derivative chains
            Fd: Dict[Tuple[int, int], DiffPoly] = {(0, 0): Fc}
            Gd: Dict[Tuple[int, int], DiffPoly] = {(0, 0): Gc}

            def deriv(cache, base, k_t, k_z):
                key = (k_t, k_z)
                if key not in cache:
                    if k_z > 0:
                        cache[key] = deriv(cache, base, k_t, k_z - 1).dz()
                    else:
                        cache[key] = deriv(cache, base, k_t - 1, 0).dt()
                return cache[key]

            for k1 in range(budget + 1):
                for k2 in range(budget + 1 - k1):
                    coef = Fraction((-1) ** k2, 2 ** (k1 + k2) * math.factorial(k1) * math.factorial(k2))
                    piece = deriv(Fd, Fc, k1, k2).mul(deriv(Gd, Gc, k2, k1))
                    out = out + piece.scale(coef)
    return out


def star_bracket(F: DiffPoly, G: DiffPoly, tmax: int, strict: bool = True) -> DiffPoly:
    """Graded star commutator F*G - (-1)^{p(F)p(G)} G*F.

    Parity-inhomogeneous arguments are split into even and odd parts and
    the bracket extended bilinearly.
    """
    out = F.system.zero()
    for pf, Fp in _parity_parts(F).items():
        for pg, Gp in _parity_parts(G).items():
            sign = Fraction((-1) ** (pf * pg))
            out = out + star(Fp, Gp, tmax, strict=strict) - star(Gp, Fp, tmax, strict=strict).scale(sign)
    return out


def _parity_parts(p: DiffPoly) -> Dict[int, DiffPoly]:
    parts: Dict[int, DiffPoly] = {}
    for (word, lam), c in p._terms.items():
        par = p.system.word_parity(word)
        parts.setdefault(par, p.system.zero())
        parts[par] = parts[par] + DiffPoly(p.system, {(word, lam): c})
    return parts


def deg_cw(p: DiffPoly) -> Optional[Tuple[int, Fraction]]:
    """Common (cohomology degree, conformal weight) of all terms, else None."""
    out = None
    for (word, lam) in p._terms:
        g = p.system.word_grading(word, lam)
        cur = (g.deg, g.cw)
        if out is None:
            out = cur
        elif out != cur:
            return None
    return out


def delta_b(system: System) -> Derivation:
    """The differential: bt -> dz(et), et -> 0 (odd, commutes with Dz, Dt)."""
    return Derivation.from_base_rules(
        system, 1, {("bt", 0): system.monomial([et(system, dz=1)])}, name="delta_b"
    )


def delta_star(system: System) -> Derivation:
    """Odd homotopy partner: Dz^{m+1} Dt^k et -> Dz^m Dt^k bt, Dt^k et -> 0."""

    def rule(dg: DerivedGenerator) -> DiffPoly:
        if dg.name == "et" and dg.dz >= 1:
            return system.monomial([DerivedGenerator("bt", 0, dg.dz - 1, dg.dt)])
        return system.zero()

    return Derivation(system, 1, rule, name="delta_star")


def _n_eigenvalue(system: System, word) -> int:
    n = 0
    for dg in word:
        if dg.name == "bt":
            n += 1
        elif dg.name == "et" and dg.dz >= 1:
            n += 1
    return n


def delta_inv(p: DiffPoly, check: bool = True) -> DiffPoly:
    """Contracting homotopy: (1/m) delta_star on N-eigenvalue-m monomials.

    N = delta delta* + delta* delta is diagonal on monomials; when ``check``
    is set the eigenvector property is verified for every monomial.
    """
    sys_ = p.system
    d = delta_b(sys_)
    ds = delta_star(sys_)
    out = sys_.zero()
    for (word, lam), c in p._terms.items():
        n = _n_eigenvalue(sys_, word)
        mono = DiffPoly(sys_, {(word, lam): c})
        if check:
            Nm = d(ds(mono)) + ds(d(mono))
            if Nm != mono.scale(Fraction(n)):
                raise AssertionError(f"monomial is not an N-eigenvector: {word}")
        if n:
            out = out + ds(mono).scale(Fraction(1, n))
    return out


def closed_form_j0(tmax: int, system: Optional[System] = None) -> DiffPoly:
    """eta-tilde + sum_{k>=1} (Dt^{k-1}/k!)(bt^k Dt(et)), through T <= tmax."""
    sys_ = system if system is not None else make_b_system()
    out = sys_.monomial([et(sys_)])
    for k in range(1, tmax + 1):
        term = sys_.monomial([bt(sys_)] * k + [et(sys_, dt=1)], coef=Fraction(1, math.factorial(k)))
        out = out + term.dt(k - 1)
    return out


def reflection(p: DiffPoly) -> DiffPoly:
    """R: Dz -> -Dz, i.e. each monomial times (-1)^{total dz count}."""
    terms = {}
    for (word, lam), c in p._terms.items():
        s = sum(dg.dz for dg in word)
        terms[(word, lam)] = c if s % 2 == 0 else -c
    return DiffPoly(p.system, terms)


class FedosovSolution:
    """Level-by-level solution of delta(J) + (1/2)[J,J]_star = 0."""

    def __init__(self, system: System, levels: List[DiffPoly], residual_zero: Dict[int, bool]):
        self.system = system
        self.levels = levels
        self.residual_zero = residual_zero

    @property
    def tmax(self) -> int:
        return len(self.levels) - 1

    def j(self) -> DiffPoly:
        out = self.system.zero()
        for lv in self.levels:
            out = out + lv
        return out

    def mc_residual(self) -> DiffPoly:
        J = self.j()
        return delta_b(self.system)(J) + star_bracket(J, J, self.tmax).scale(Fraction(1, 2))


def fedosov_solve(tmax: int, system: Optional[System] = None) -> FedosovSolution:
    """Solve the flat-connection equation through T <= tmax.

    J_(0) = eta-tilde; J_(k) = delta^{-1}( -1/2 [J_(<k), J_(<k)]|_k ).
    Every level is checked to be exactly delta-exact (the relevant second
    cohomology vanishes in conformal weight 2) and homogeneous of
    (deg, cw) = (1, 1).
    """
    if tmax < 0:
        raise ValueError("tmax must be >= 0")
    sys_ = system if system is not None else make_b_system()
    d = delta_b(sys_)
    levels = [sys_.monomial([et(sys_)])]
    for k in range(1, tmax + 1):
        partial = sys_.zero()
        for lv in levels:
            partial = partial + lv
        rhs_all = star_bracket(partial, partial, k).scale(Fraction(-1, 2))
        rhs = split_t_levels(rhs_all).get(k, sys_.zero())
        g = deg_cw(rhs)
        if not rhs.is_zero() and g != (2, Fraction(2)):
            raise AssertionError(f"bracket level {k} is not homogeneous of (deg,cw)=(2,2): {g}")
        jk = delta_inv(rhs)
        if d(jk) != rhs:
            raise AssertionError(f"delta-exactness check failed at level {k}")
        g = deg_cw(jk)
        if not jk.is_zero() and g != (1, Fraction(1)):
            raise AssertionError(f"level {k} is not homogeneous of (deg,cw)=(1,1): {g}")
        levels.append(jk)

    sol = FedosovSolution(sys_, levels, {})
    res = split_t_levels(sol.mc_residual())
    sol.residual_zero = {k: res.get(k, sys_.zero()).is_zero() for k in range(tmax + 1)}
    return sol
