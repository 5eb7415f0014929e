"""Presentations of the chromatic coefficient rings and exact polynomial arithmetic.

A theory presentation fixes the generator list (each v_i in degree
2(p^i - 1)), which generators are invertible, the characteristic, and the
coefficient domain.  Ring elements are sparse polynomials: a map from
exponent vectors to exact rational coefficients.  For the p-local integral
theories every denominator must be coprime to p; the rationalized variants
(used while computing logarithms) lift that restriction.

Real-flavored presentations share the identical algebra; the flag only
changes how degrees are reported (k becomes k*rho on the kp-line).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from fractions import Fraction
from math import gcd

from .errors import PrimeError, TermBudgetError, TheoryError

BP_MAX_INDEX = 9

KINDS = ("BP", "BPn", "En", "Kn", "HQ")


def term_budget() -> int:
    return int(os.environ.get("CHROMATIC_MAX_TERMS", "500000"))


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


def padic_valuation(c: Fraction, p: int) -> int:
    """Valuation of a nonzero rational; negative when p divides the denominator."""
    if c == 0:
        raise ValueError("valuation of zero")
    v = 0
    num, den = c.numerator, c.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


@dataclass(frozen=True)
class GeneratorSpec:
    name: str
    index: int
    degree: int
    invertible: bool = False


@dataclass(frozen=True)
class TheoryPresentation:
    kind: str
    n: int
    p: int
    generators: tuple[GeneratorSpec, ...]
    inverted: frozenset[int]
    char: int                 # 0, or p for the residue theories
    rationalized: bool        # True: coefficient domain is all of Q
    real_flavored: bool = False
    note: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TheoryError(f"unknown theory kind {self.kind!r}")

    # -- generator access -------------------------------------------------

    def gen(self, index: int) -> GeneratorSpec:
        for g in self.generators:
            if g.index == index:
                return g
        raise TheoryError(f"{self.spec_string()} has no generator v{index}")

    def has_gen(self, index: int) -> bool:
        return any(g.index == index for g in self.generators)

    def max_index(self) -> int:
        return max((g.index for g in self.generators), default=0)

    # -- coefficient domain ------------------------------------------------

    def normalize_coefficient(self, c) -> Fraction:
        c = Fraction(c)
        if c == 0:
            return c
        if self.char:
            if c.denominator % self.char == 0:
                raise TheoryError(
                    f"denominator {c.denominator} not invertible mod {self.char}")
            num = c.numerator % self.char
            inv = pow(c.denominator, -1, self.char)
            return Fraction((num * inv) % self.char)
        if not self.rationalized and c.denominator % self.p == 0:
            raise TheoryError(
                f"coefficient {c} is not p-local at p={self.p}")
        return c

    def coefficient_is_unit(self, c: Fraction) -> bool:
        if c == 0:
            return False
        if self.char:
            return c.numerator % self.char != 0
        if self.rationalized:
            return True
        return padic_valuation(c, self.p) == 0

    def invert_coefficient(self, c: Fraction) -> Fraction:
        if not self.coefficient_is_unit(c):
            raise TheoryError(f"{c} is not a unit in {self.spec_string()}")
        if self.char:
            return Fraction(pow(int(c), -1, self.char))
        return 1 / c

    # -- derived presentations ----------------------------------------------

    def rationalize(self) -> "TheoryPresentation":
        return replace(self, rationalized=True, char=0)

    def with_inverted(self, extra) -> "TheoryPresentation":
        """Presentation with additional generators marked invertible."""
        new = self.inverted | frozenset(extra)
        gens = tuple(
            replace(g, invertible=g.index in new) for g in self.generators)
        return replace(self, generators=gens, inverted=new)

    # -- misc ----------------------------------------------------------------

    def spec_string(self) -> str:
        if self.kind == "BP":
            s = "BP"
        elif self.kind == "BPn":
            s = f"BP<{self.n}>"
        elif self.kind == "En":
            s = f"E({self.n})"
        elif self.kind == "Kn":
            s = f"K({self.n})"
        else:
            s = "HQ"
        if self.p != 2 and self.kind != "HQ":
            s += f"@p={self.p}"
        if self.real_flavored:
            s += "!R"
        return s

    def degree_of_key(self, key) -> int:
        return sum(e * self.gen(i).degree for i, e in key)

    def quotient_ideal(self) -> "Ideal":
        """The defining quotient data: (p) for the residue theories."""
        if self.char:
            return Ideal([GradedPolynomial.const(self.rationalize(), self.char)])
        return Ideal([])

    def zero(self) -> "GradedPolynomial":
        return GradedPolynomial(self, {})

    def one(self) -> "GradedPolynomial":
        return GradedPolynomial.const(self, 1)

    def v(self, index: int, power: int = 1) -> "GradedPolynomial":
        return GradedPolynomial.gen(self, index, power)


def _vgens(p: int, upto: int, inverted=()) -> tuple[GeneratorSpec, ...]:
    inv = set(inverted)
    return tuple(
        GeneratorSpec(f"v{i}", i, 2 * (p ** i - 1), i in inv)
        for i in range(1, upto + 1))


def make_theory(kind: str, n: int = 0, p: int = 2,
                real_flavored: bool = False) -> TheoryPresentation:
    """Build the canonical presentation of one of the standard theories."""
    if not is_prime(p):
        raise PrimeError(f"{p} is not prime")
    if real_flavored and p != 2:
        raise TheoryError("real-flavored presentations require p = 2")
    if kind == "HQ":
        return TheoryPresentation("HQ", 0, p, (), frozenset(), 0, True,
                                  real_flavored)
    if n < 0:
        raise TheoryError("height must be non-negative")
    if kind == "BP":
        return TheoryPresentation("BP", BP_MAX_INDEX, p,
                                  _vgens(p, BP_MAX_INDEX), frozenset(), 0,
                                  False, real_flavored)
    if kind == "BPn":
        return TheoryPresentation("BPn", n, p, _vgens(p, n), frozenset(), 0,
                                  False, real_flavored)
    if kind == "En":
        if n == 0:
            return replace(make_theory("HQ", 0, p, real_flavored),
                           note="E(0) is rational; returning HQ")
        return TheoryPresentation("En", n, p, _vgens(p, n, {n}),
                                  frozenset({n}), 0, False, real_flavored)
    if kind == "Kn":
        if n == 0:
            return replace(make_theory("HQ", 0, p, real_flavored),
                           note="K(0) is rational; returning HQ")
        gens = (GeneratorSpec(f"v{n}", n, 2 * (p ** n - 1), True),)
        return TheoryPresentation("Kn", n, p, gens, frozenset({n}), p, False,
                                  real_flavored)
    raise TheoryError(f"unknown theory kind {kind!r}")


# ---------------------------------------------------------------------------
# sparse polynomials
# ---------------------------------------------------------------------------

def _merge_key(k1, k2):
    d = dict(k1)
    for i, e in k2:
        d[i] = d.get(i, 0) + e
    return tuple(sorted((i, e) for i, e in d.items() if e))


class GradedPolynomial:
    """Sparse exact polynomial over a theory presentation.

    Terms map exponent keys (sorted tuples of (generator index, exponent))
    to nonzero Fraction coefficients.  Negative exponents are allowed only
    on invertible generators.
    """

    __slots__ = ("theory", "terms")

    def __init__(self, theory: TheoryPresentation, terms: dict):
        self.theory = theory
        clean = {}
        for key, c in terms.items():
            c = theory.normalize_coefficient(c)
            if c == 0:
                continue
            for i, e in key:
                if e < 0 and i not in theory.inverted:
                    raise TheoryError(
                        f"negative exponent on non-invertible v{i} "
                        f"in {theory.spec_string()}")
                if not theory.has_gen(i):
                    raise TheoryError(
                        f"{theory.spec_string()} has no generator v{i}")
            clean[key] = c
        if len(clean) > term_budget():
            raise TermBudgetError(
                f"{len(clean)} terms exceed CHROMATIC_MAX_TERMS")
        self.terms = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def const(cls, theory, c) -> "GradedPolynomial":
        c = Fraction(c)
        return cls(theory, {(): c} if c else {})

    @classmethod
    def gen(cls, theory, index: int, power: int = 1) -> "GradedPolynomial":
        if power == 0:
            return cls.const(theory, 1)
        return cls(theory, {((index, power),): Fraction(1)})

    @classmethod
    def monomial(cls, theory, c, exps: dict) -> "GradedPolynomial":
        key = tuple(sorted((i, e) for i, e in exps.items() if e))
        return cls(theory, {key: Fraction(c)})

    # -- predicates ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return self.terms == {(): Fraction(1)}

    def is_constant(self) -> bool:
        return all(k == () for k in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def degree(self):
        """Common degree of all terms, or None for 0; raises if mixed."""
        if not self.terms:
            return None
        degs = {self.theory.degree_of_key(k) for k in self.terms}
        if len(degs) > 1:
            raise TheoryError(f"inhomogeneous polynomial: degrees {sorted(degs)}")
        return degs.pop()

    def is_homogeneous(self) -> bool:
        try:
            self.degree()
            return True
        except TheoryError:
            return False

    # -- arithmetic ------------------------------------------------------------

    def _check_same(self, other):
        if self.theory is not other.theory and self.theory != other.theory:
            raise TheoryError("mixed-theory arithmetic")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = GradedPolynomial.const(self.theory, other)
        self._check_same(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return GradedPolynomial(self.theory, out)

    __radd__ = __add__

    def __neg__(self):
        return GradedPolynomial(self.theory,
                                {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = GradedPolynomial.const(self.theory, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return GradedPolynomial(
                self.theory, {k: c * other for k, c in self.terms.items()})
        self._check_same(other)
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = _merge_key(k1, k2)
                out[k] = out.get(k, Fraction(0)) + c1 * c2
        return GradedPolynomial(self.theory, out)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            inv = unit_inverse(self, self.theory)
            if inv is None:
                raise TheoryError("negative power of a non-unit")
            return inv ** (-e)
        result = GradedPolynomial.const(self.theory, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base_needed = e > 1
            if base_needed:
                base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = GradedPolynomial.const(self.theory, other)
        if not isinstance(other, GradedPolynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- conversion ------------------------------------------------------------

    def map_to(self, target: TheoryPresentation) -> "GradedPolynomial":
        """Reinterpret over another presentation with matching generator names."""
        out = {}
        for key, c in self.terms.items():
            for i, _ in key:
                if not target.has_gen(i):
                    raise TheoryError(
                        f"cannot map term with v{i} into {target.spec_string()}")
            out[key] = out.get(key, Fraction(0)) + c
        return GradedPolynomial(target, out)

    # -- display ------------------------------------------------------------

    def sorted_terms(self):
        """Canonical term order: graded lexicographic on (degree, exponents)."""
        return sorted(
            self.terms.items(),
            key=lambda kv: (self.theory.degree_of_key(kv[0]), kv[0]))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for key, c in self.sorted_terms():
            mono = " ".join(
                f"v{i}^{e}" if e != 1 else f"v{i}" for i, e in key)
            if mono:
                parts.append(f"{c} * {mono}")
            else:
                parts.append(str(c))
        return " + ".join(parts)

    __repr__ = __str__


def poly_mul(f: GradedPolynomial, g: GradedPolynomial,
             theory: TheoryPresentation | None = None) -> GradedPolynomial:
    """Exact product, reduced by the presentation (characteristic, killed v's)."""
    if theory is not None and f.theory != theory:
        f = f.map_to(theory)
        g = g.map_to(theory)
    return f * g


def poly_add(f: GradedPolynomial, g: GradedPolynomial) -> GradedPolynomial:
    return f + g


# ---------------------------------------------------------------------------
# ideals
# ---------------------------------------------------------------------------

class Ideal:
    """A finitely generated homogeneous ideal.

    Ideal reduction is only supported for the standard chromatic shape:
    each generator a unit scalar times p or times a power of one
    non-invertible generator.
    """

    def __init__(self, generators):
        self.generators = list(generators)
        for g in self.generators:
            if not g.is_homogeneous():
                raise TheoryError("ideal generators must be homogeneous")

    def __len__(self):
        return len(self.generators)

    def monomial_shape(self):
        """Per generator: ('p', valuation 1) or ('gen', index, exponent).

        Raises if some generator is not unit-times-monomial.
        """
        shapes = []
        for g in self.generators:
            if not g.is_monomial():
                raise TheoryError(
                    f"ideal generator {g} is not unit-times-monomial")
            (key, c), = g.terms.items()
            T = g.theory
            if key == ():
                if T.char:
                    raise TheoryError("scalar ideal generator in char p")
                v = padic_valuation(c, T.p)
                if v != 1:
                    raise TheoryError(
                        f"scalar ideal generator {c} is not p times a unit")
                shapes.append(("p",))
            else:
                if len(key) != 1:
                    raise TheoryError(
                        f"ideal generator {g} mixes several generators")
                (i, e), = key
                if e < 1:
                    raise TheoryError("ideal generator with non-positive power")
                if not T.coefficient_is_unit(c):
                    raise TheoryError(
                        f"ideal generator {g} has non-unit content")
                if i in g.theory.inverted:
                    raise TheoryError(
                        f"v{i} is invertible; the ideal would be the unit ideal")
                shapes.append(("gen", i, e))
        return shapes

    def __str__(self):
        return "(" + ", ".join(str(g) for g in self.generators) + ")"


def ideal_In(theory: TheoryPresentation, m: int) -> Ideal:
    """The invariant ideal (p, v_1, ..., v_{m-1}) over the given presentation."""
    gens = [GradedPolynomial.const(theory, theory.p)]
    for i in range(1, m):
        gens.append(GradedPolynomial.gen(theory, i))
    return Ideal(gens[:1] if m <= 1 else gens)


def ideal_valuation(term_key, coeff: Fraction, I: Ideal, theory) -> int:
    """Order of one term along the monomial ideal filtration."""
    shapes = I.monomial_shape()
    if not shapes:
        return 0
    val = 0
    exps = dict(term_key)
    for s in shapes:
        if s[0] == "p":
            if coeff != 0:
                val += max(padic_valuation(coeff, theory.p), 0)
        else:
            _, i, e = s
            val += max(exps.get(i, 0), 0) // e
    return val


def reduce_mod_ideal(f: GradedPolynomial, I: Ideal, adic_power: int
                     ) -> GradedPolynomial:
    """The canonical representative of f modulo I^N.

    Terms lying in I^N are deleted; when p is among the ideal generators,
    the surviving coefficient of a term whose monomial part has ideal
    order w is canonicalized to its least non-negative residue mod
    p^(N-w).
    """
    if adic_power < 0:
        raise TheoryError("adic power must be non-negative")
    T = f.theory
    shapes = I.monomial_shape()
    has_p = any(s[0] == "p" for s in shapes)
    out = {}
    for key, c in f.terms.items():
        exps = dict(key)
        w = 0
        for s in shapes:
            if s[0] == "gen":
                _, i, e = s
                w += max(exps.get(i, 0), 0) // e
        if w >= adic_power:
            continue
        if has_p:
            a = padic_valuation(c, T.p)
            if a >= 0:
                if w + a >= adic_power:
                    continue
                mod = T.p ** (adic_power - w)
                inv = pow(c.denominator, -1, mod)
                c = Fraction((c.numerator * inv) % mod)
                if c == 0:
                    continue
            # negative valuation (rationalized intermediates): keep as is
        out[key] = c
    return GradedPolynomial(T, out)


# ---------------------------------------------------------------------------
# units
# ---------------------------------------------------------------------------

def unit_inverse(f: GradedPolynomial, theory=None):
    """Inverse certificate when f is a unit (unit scalar times invertible
    monomial); None otherwise."""
    T = theory or f.theory
    if len(f.terms) != 1:
        return None
    (key, c), = f.terms.items()
    if any(i not in T.inverted for i, _ in key):
        return None
    if not T.coefficient_is_unit(c):
        return None
    inv_key = tuple(sorted((i, -e) for i, e in key))
    return GradedPolynomial(T, {inv_key: T.invert_coefficient(c)})


def is_unit(f: GradedPolynomial, theory=None):
    """(flag, inverse certificate or None)."""
    inv = unit_inverse(f, theory)
    return (inv is not None, inv)


def unit_inverse_mod_ideal(f: GradedPolynomial, I: Ideal, adic_power: int):
    """Inverse of f modulo I^N when f = unit + (terms of positive I-order).

    Returns None when the I-order-zero part of f is not a plain unit.
    """
    T = f.theory
    lead = {}
    rest = {}
    for key, c in f.terms.items():
        if ideal_valuation(key, c, I, T) == 0:
            lead[key] = c
        else:
            rest[key] = c
    lead_poly = GradedPolynomial(T, lead)
    inv0 = unit_inverse(lead_poly, T)
    if inv0 is None:
        return None
    if not rest:
        return inv0
    # (u + r)^-1 = u^-1 * sum (-u^-1 r)^k, nilpotent mod I^N
    t = -(inv0 * GradedPolynomial(T, rest))
    acc = T.one()
    power = T.one()
    for _ in range(1, adic_power):
        power = reduce_mod_ideal(power * t, I, adic_power)
        if power.is_zero():
            break
        acc = acc + power
    return reduce_mod_ideal(acc * inv0, I, adic_power)


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------

def format_poly(f: GradedPolynomial) -> str:
    return str(f)


def parse_poly(text: str, theory: TheoryPresentation) -> GradedPolynomial:
    """Parse 'c * v1^a v2^b + ...' (the output format of format_poly)."""
    text = text.strip()
    if text == "0":
        return theory.zero()
    total = theory.zero()
    for part in text.split("+"):
        part = part.strip()
        if not part:
            raise TheoryError("empty term in polynomial text")
        if "*" in part:
            cs, _, mono = part.partition("*")
            c = Fraction(cs.strip())
        else:
            # bare coefficient or bare monomial
            if part[0] == "v":
                c, mono = Fraction(1), part
            else:
                c, mono = Fraction(part), ""
        exps = {}
        for factor in mono.split():
            name, _, e = factor.partition("^")
            if not name.startswith("v"):
                raise TheoryError(f"bad generator {factor!r}")
            idx = int(name[1:])
            exps[idx] = exps.get(idx, 0) + (int(e) if e else 1)
        total = total + GradedPolynomial.monomial(theory, c, exps)
    return total
