"""Truncated Laurent series, Weierstrass factorization, and Euler-class localization.

Every series carries an explicit validity window [min_exp, window]:
coefficients below min_exp are identically zero, coefficients through
window are exact, and nothing is claimed beyond it.  Operations propagate
windows pessimistically; asking for data outside a window raises rather
than silently truncating.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .coeffring import (
    GradedPolynomial,
    Ideal,
    TheoryPresentation,
    reduce_mod_ideal,
    unit_inverse,
    unit_inverse_mod_ideal,
)
from .errors import NotDistinguished, TheoryError, WindowError
from .grading import RODegree, lambda_of


@dataclass(frozen=True)
class VariableTag:
    """Name and degree convention of the series variable.

    kind 'int' is the classical variable of degree -2; 'rho' is the same
    algebra with degree reported as -rho; 'hat' is the integer-shifted
    variable of degree lambda_n - 1 obtained from the rho-line by the
    y-shift.
    """

    name: str = "x"
    kind: str = "int"          # int | rho | hat
    height: int = 0            # used by the hat tag

    def degree_per_exponent(self) -> int:
        if self.kind == "hat":
            return lambda_of(self.height) - 1
        return -2

    def ro_degree(self, e: int) -> RODegree:
        if self.kind == "rho":
            return RODegree(-e, -e)
        return RODegree(e * self.degree_per_exponent(), 0)

    def __str__(self):
        return self.name


X_INT = VariableTag("x", "int")
X_RHO = VariableTag("u", "rho")


def hat_tag(n: int) -> VariableTag:
    return VariableTag("u", "hat", n)


class TruncatedLaurent:
    """A Laurent series with exact polynomial coefficients and a validity window."""

    __slots__ = ("theory", "var", "coeffs", "min_exp", "window")

    def __init__(self, theory: TheoryPresentation, coeffs: dict,
                 min_exp: int, window: int, var: VariableTag = X_INT):
        if window < min_exp:
            raise WindowError(
                f"empty validity window [{min_exp}, {window}]")
        self.theory = theory
        self.var = var
        self.min_exp = min_exp
        self.window = window
        clean = {}
        for e, c in coeffs.items():
            if isinstance(c, (int,)) or not isinstance(c, GradedPolynomial):
                c = GradedPolynomial.const(theory, c)
            if c.is_zero():
                continue
            if e < min_exp or e > window:
                raise WindowError(
                    f"coefficient at x^{e} outside window [{min_exp}, {window}]")
            clean[e] = c
        self.coeffs = clean

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, theory, min_exp=0, window=0, var=X_INT):
        return cls(theory, {}, min_exp, window, var)

    @classmethod
    def x_power(cls, theory, e, window, coeff=1, var=X_INT):
        return cls(theory, {e: GradedPolynomial.const(theory, coeff)},
                   min(e, 0), window, var)

    @classmethod
    def from_poly_coeff(cls, coeff: GradedPolynomial, e: int, window: int,
                        var=X_INT):
        return cls(coeff.theory, {e: coeff}, min(e, 0), window, var)

    # -- access ----------------------------------------------------------------

    def coeff(self, e: int) -> GradedPolynomial:
        if e < self.min_exp or e > self.window:
            raise WindowError(
                f"x^{e} outside validity window [{self.min_exp}, {self.window}]",
                required=e)
        return self.coeffs.get(e, self.theory.zero())

    def support(self):
        return sorted(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def lowest(self):
        """(exponent, coefficient) of the lowest nonzero term, or None."""
        if not self.coeffs:
            return None
        e = min(self.coeffs)
        return e, self.coeffs[e]

    def valuation(self):
        low = self.lowest()
        return low[0] if low else None

    # -- window management -------------------------------------------------------

    def _same_var(self, other):
        if self.var.name != other.var.name or self.var.kind != other.var.kind:
            raise TheoryError("mixed series variables")
        if self.theory != other.theory:
            raise TheoryError("mixed-theory series arithmetic")

    def truncated(self, window: int) -> "TruncatedLaurent":
        if window > self.window:
            raise WindowError(
                f"cannot extend window {self.window} to {window}",
                required=window)
        return TruncatedLaurent(
            self.theory,
            {e: c for e, c in self.coeffs.items() if e <= window},
            self.min_exp, window, self.var)

    def with_min_exp(self, min_exp: int) -> "TruncatedLaurent":
        """Assert a (smaller) guaranteed lower support bound."""
        if any(e < min_exp for e in self.coeffs):
            raise WindowError("series has support below the requested bound")
        return TruncatedLaurent(self.theory, self.coeffs, min_exp,
                                self.window, self.var)

    def retagged(self, var: VariableTag) -> "TruncatedLaurent":
        return TruncatedLaurent(self.theory, self.coeffs, self.min_exp,
                                self.window, var)

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        self._same_var(other)
        window = min(self.window, other.window)
        min_exp = min(self.min_exp, other.min_exp)
        out = {e: c for e, c in self.coeffs.items() if e <= window}
        for e, c in other.coeffs.items():
            if e <= window:
                out[e] = out.get(e, self.theory.zero()) + c
        return TruncatedLaurent(self.theory, out, min_exp, window, self.var)

    def __neg__(self):
        return TruncatedLaurent(self.theory,
                                {e: -c for e, c in self.coeffs.items()},
                                self.min_exp, self.window, self.var)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, GradedPolynomial)):
            if isinstance(other, int):
                other = GradedPolynomial.const(self.theory, other)
            return TruncatedLaurent(
                self.theory, {e: c * other for e, c in self.coeffs.items()},
                self.min_exp, self.window, self.var)
        self._same_var(other)
        min_exp = self.min_exp + other.min_exp
        window = min(self.window + other.min_exp, other.window + self.min_exp)
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = e1 + e2
                if e > window:
                    continue
                out[e] = out.get(e, self.theory.zero()) + c1 * c2
        return TruncatedLaurent(self.theory, out, min_exp, window, self.var)

    __rmul__ = __mul__

    def shifted(self, k: int) -> "TruncatedLaurent":
        """Multiplication by x^k."""
        return TruncatedLaurent(
            self.theory, {e + k: c for e, c in self.coeffs.items()},
            self.min_exp + k, self.window + k, self.var)

    def power(self, k: int) -> "TruncatedLaurent":
        if k < 0:
            raise TheoryError("use laurent_inverse for negative powers")
        if k == 0:
            return TruncatedLaurent(self.theory, {0: self.theory.one()},
                                    0, self.window, self.var)
        result = self
        for _ in range(k - 1):
            result = result * self
        return result

    def map_coefficients(self, fn) -> "TruncatedLaurent":
        return TruncatedLaurent(
            self.theory, {e: fn(c) for e, c in self.coeffs.items()},
            self.min_exp, self.window, self.var)

    def derivative(self) -> "TruncatedLaurent":
        return TruncatedLaurent(
            self.theory,
            {e - 1: c * e for e, c in self.coeffs.items() if e},
            self.min_exp - 1, self.window - 1, self.var)

    def map_to(self, target: TheoryPresentation) -> "TruncatedLaurent":
        return TruncatedLaurent(
            target, {e: c.map_to(target) for e, c in self.coeffs.items()},
            self.min_exp, self.window, self.var)

    def reduced_mod(self, I: Ideal, adic_power: int) -> "TruncatedLaurent":
        return self.map_coefficients(lambda c: reduce_mod_ideal(c, I, adic_power))

    def compose(self, inner: "TruncatedLaurent") -> "TruncatedLaurent":
        """Substitute inner (valuation >= 1) into self (a power series)."""
        if self.min_exp < 0:
            raise TheoryError("can only compose power series")
        self._same_var(inner)
        v = inner.valuation()
        if inner.min_exp < 1 or (v is not None and v < 1):
            raise TheoryError("inner series must have valuation >= 1")
        m = max(inner.min_exp, 1)
        window = min(inner.window, (self.window + 1) * m - 1)
        out = TruncatedLaurent.zero(self.theory, 0, window, self.var)
        power = TruncatedLaurent(self.theory, {0: self.theory.one()}, 0,
                                 window, self.var)
        for k in range(0, self.window + 1):
            if k:
                power = (power * inner).truncated(
                    min(window, power.window + inner.min_exp))
            c = self.coeffs.get(k)
            if c is not None:
                out = out + power.map_coefficients(lambda q, c=c: q * c)
        return out

    # -- comparison / display ------------------------------------------------

    def same_within(self, other, lo=None, hi=None) -> bool:
        """Exact term equality on the overlap of the validity windows."""
        lo = max(self.min_exp, other.min_exp) if lo is None else lo
        hi = min(self.window, other.window) if hi is None else hi
        for e in range(lo, hi + 1):
            if self.coeff(e) != other.coeff(e):
                return False
        return True

    def homogeneous_degree(self):
        """Common underlying degree of coeff*x^e terms, or None for 0."""
        degs = set()
        per = self.var.degree_per_exponent()
        for e, c in self.coeffs.items():
            degs.add(c.degree() + e * per)
        if not degs:
            return None
        if len(degs) > 1:
            raise TheoryError(f"inhomogeneous series: degrees {sorted(degs)}")
        return degs.pop()

    def term_lines(self):
        x = self.var.name
        return [f"{x}^{e} : {self.coeffs[e]}" for e in self.support()]

    def __str__(self):
        if not self.coeffs:
            return "0"
        x = self.var.name
        parts = []
        for e in self.support():
            c = self.coeffs[e]
            cs = str(c)
            if len(c.terms) > 1:
                cs = f"({cs})"
            parts.append(f"{cs}*{x}^{e}" if e else cs)
        return " + ".join(parts)

    __repr__ = __str__


def laurent_add(f: TruncatedLaurent, g: TruncatedLaurent) -> TruncatedLaurent:
    return f + g


def laurent_mul(f: TruncatedLaurent, g: TruncatedLaurent) -> TruncatedLaurent:
    return f * g


def invert_one_plus(t: TruncatedLaurent, I: Ideal | None = None,
                    adic_power: int = 1) -> TruncatedLaurent:
    """Inverse of 1 + t for t of positive valuation (geometric series)."""
    v = t.valuation()
    one = TruncatedLaurent(t.theory, {0: t.theory.one()}, 0, t.window, t.var)
    if t.is_zero():
        return one
    if v is None or v < 1:
        raise TheoryError("tail must have positive valuation")
    t = t.with_min_exp(v)
    acc = one
    power = one
    steps = t.window + 2
    for _ in range(steps):
        power = power * (-t)
        if power.min_exp > t.window:
            break
        if power.window > t.window:
            power = power.truncated(t.window)
        if I is not None:
            power = power.reduced_mod(I, adic_power)
        if power.is_zero():
            break
        acc = acc + power
    return acc


@dataclass
class WeierstrassFactorization:
    """input = lead_unit * x^lead_exp * tail_unit, within window mod I^N."""

    input: TruncatedLaurent
    reduced_input: TruncatedLaurent
    lead_exp: int
    lead_unit: GradedPolynomial
    lead_unit_inv: GradedPolynomial
    tail_unit: TruncatedLaurent
    ideal: Ideal | None = None
    adic_power: int = 1

    def residual(self) -> TruncatedLaurent:
        prod = self.tail_unit.shifted(self.lead_exp) * self.lead_unit
        diff = self.reduced_input - prod
        if self.ideal is not None:
            diff = diff.reduced_mod(self.ideal, self.adic_power)
        return diff

    def check(self) -> bool:
        return self.residual().is_zero()


def weierstrass_factor(f: TruncatedLaurent, I: Ideal | None = None,
                       adic_power: int = 1) -> WeierstrassFactorization:
    """Factor f as unit * x^e0 * (1 + higher) modulo (I, adic_power).

    Raises NotDistinguished when the lowest surviving coefficient is not a
    unit at the stated precision.
    """
    g = f if I is None else f.reduced_mod(I, adic_power)
    low = g.lowest()
    if low is None:
        raise NotDistinguished(
            "series vanishes at this precision; nothing to factor")
    e0, lead = low
    if I is None:
        inv = unit_inverse(lead)
    else:
        inv = unit_inverse_mod_ideal(lead, I, adic_power)
    if inv is None:
        raise NotDistinguished(
            f"leading coefficient {lead} at x^{e0} is not a unit")
    tail = (g.shifted(-e0) * inv).with_min_exp(0)
    if I is not None:
        tail = tail.reduced_mod(I, adic_power)
    return WeierstrassFactorization(
        input=f, reduced_input=g, lead_exp=e0, lead_unit=lead,
        lead_unit_inv=inv, tail_unit=tail, ideal=I, adic_power=adic_power)


def laurent_inverse(f: TruncatedLaurent, I: Ideal | None = None,
                    adic_power: int = 1) -> TruncatedLaurent:
    """Inverse of f in the Laurent ring, via Weierstrass factorization."""
    w = weierstrass_factor(f, I, adic_power)
    t = w.tail_unit - TruncatedLaurent(
        f.theory, {0: f.theory.one()}, 0, w.tail_unit.window, f.var)
    tinv = invert_one_plus(t, I, adic_power)
    inv = (tinv * w.lead_unit_inv).shifted(-w.lead_exp)
    return inv


@dataclass
class DivisionResult:
    remainder: TruncatedLaurent
    quotient: TruncatedLaurent


def divide_mod(f: TruncatedLaurent, d: WeierstrassFactorization
               ) -> DivisionResult:
    """Canonical remainder of f modulo the factored relation d.

    The remainder is supported on exponents below d.lead_exp (within the
    window); f = quotient * d.reduced_input + remainder holds exactly at
    the stated precision.
    """
    I, N = d.ideal, d.adic_power
    rel = d.reduced_input.with_min_exp(d.lead_exp)
    r = f if I is None else f.reduced_mod(I, N)
    window = min(r.window, rel.window)
    r = r.truncated(window)
    q = TruncatedLaurent.zero(f.theory, min(r.min_exp - d.lead_exp, 0),
                              window - d.lead_exp, f.var)
    # single-term steps are exactly known at every degree
    wstep = window - min(d.lead_exp, 0)
    e = max(r.min_exp, d.lead_exp)
    while e <= window:
        c = r.coeffs.get(e)
        if c is None or c.is_zero():
            e += 1
            continue
        qc = c * d.lead_unit_inv
        if I is not None:
            qc = reduce_mod_ideal(qc, I, N)
        step = TruncatedLaurent.from_poly_coeff(qc, e - d.lead_exp,
                                                wstep, f.var)
        q = q + step
        corr = (step * rel).truncated(window)
        r = r - corr
        if I is not None:
            r = r.reduced_mod(I, N)
        e += 1
    rem = TruncatedLaurent(
        f.theory, {e2: c for e2, c in r.coeffs.items() if e2 < d.lead_exp},
        r.min_exp, window, f.var)
    return DivisionResult(remainder=rem, quotient=q)


# ---------------------------------------------------------------------------
# quotient presentations and the Euler-class colimit
# ---------------------------------------------------------------------------

@dataclass
class QuotientPresentation:
    """theory[[x]]/(relation) (laurent=False) or theory((x))/(relation).

    Equality of presentations is canonical-form equality: same theory,
    variable convention, relation terms, and Laurent-ness.  Metadata such
    as the stride used to build a colimit is deliberately excluded.
    """

    theory: TheoryPresentation
    relation: TruncatedLaurent
    laurent: bool
    ideal: Ideal | None = None
    adic_power: int = 1
    reducer: WeierstrassFactorization | None = None
    is_zero_ring: bool = False
    zero_certificate: TruncatedLaurent | None = None
    stride: int = 1

    def canonical_key(self):
        rel = self.relation
        if self.ideal is not None:
            rel = rel.reduced_mod(self.ideal, self.adic_power)
        return (
            self.theory.spec_string(),
            self.relation.var.kind,
            self.laurent,
            tuple((e, str(rel.coeffs[e])) for e in rel.support()),
        )

    def same_presentation(self, other: "QuotientPresentation") -> bool:
        return self.canonical_key() == other.canonical_key()


def power_series_quotient(relation: TruncatedLaurent,
                          I: Ideal | None = None,
                          adic_power: int = 1) -> QuotientPresentation:
    """theory[[x]]/(relation), with a canonical-form reducer when one exists."""
    reducer = None
    try:
        reducer = weierstrass_factor(relation, I, adic_power)
    except NotDistinguished:
        pass
    return QuotientPresentation(
        theory=relation.theory, relation=relation, laurent=False,
        ideal=I, adic_power=adic_power, reducer=reducer)


def localize_colimit(base: QuotientPresentation, step: TruncatedLaurent,
                     cofinal_stride: int = 1) -> QuotientPresentation:
    """Colimit of base --*step--> base --*step--> ..., as a Laurent quotient.

    The step must be a unit multiple of a positive power of x in the
    quotient (up to a unit power-series multiple); the resulting
    presentation is independent of the cofinal stride.
    """
    if base.laurent:
        raise TheoryError("base must be a power-series quotient")
    if cofinal_stride < 1:
        raise TheoryError("stride must be >= 1")
    try:
        sf = weierstrass_factor(step, base.ideal, base.adic_power)
    except NotDistinguished as exc:
        raise TheoryError(
            f"step is not a unit times a power of x: {exc}") from exc
    if sf.lead_exp < 1:
        raise TheoryError("step must have positive x-valuation")

    is_zero = False
    cert = None
    try:
        cert = laurent_inverse(base.relation, base.ideal, base.adic_power)
        prod = cert * base.relation
        if base.ideal is not None:
            prod = prod.reduced_mod(base.ideal, base.adic_power)
        one = TruncatedLaurent(base.theory, {0: base.theory.one()},
                               prod.min_exp, prod.window, base.relation.var)
        if not prod.same_within(one):
            raise NotDistinguished("inverse certificate failed to verify")
        is_zero = True
    except NotDistinguished:
        cert = None
        is_zero = False

    return QuotientPresentation(
        theory=base.theory, relation=base.relation, laurent=True,
        ideal=base.ideal, adic_power=base.adic_power, reducer=base.reducer,
        is_zero_ring=is_zero, zero_certificate=cert, stride=cofinal_stride)
