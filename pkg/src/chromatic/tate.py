"""Tate coefficient rings for trivial cyclic actions, with zero-ring certificates.

The coefficient model for a theory T and the cyclic group of order p^k is
T_*((x))/([p^k](x)).  The relation is always computed twice: as the p^k
multiple exp(p^k log x) and as the k-fold composite of [p]; the two must
agree on the nose before anything else is claimed.  "Zero ring" is only
ever asserted with an explicit inverse of the relation in the Laurent
ring.
"""

from __future__ import annotations

from dataclasses import dataclass

from .coeffring import (
    GradedPolynomial,
    Ideal,
    TheoryPresentation,
    ideal_In,
    make_theory,
    unit_inverse,
)
from .errors import NotDistinguished, TheoryError, WindowError
from .fgl import PSeries, p_series, p_series_by_composition
from .grading import RODegree, lambda_of
from .series import (
    QuotientPresentation,
    TruncatedLaurent,
    VariableTag,
    WeierstrassFactorization,
    X_INT,
    X_RHO,
    hat_tag,
    localize_colimit,
    power_series_quotient,
    weierstrass_factor,
)


@dataclass
class TateRingPresentation:
    """The coefficient ring of a Tate construction, at finite precision."""

    theory: TheoryPresentation
    group_order: int
    k: int
    relation: PSeries
    quotient: QuotientPresentation           # the Laurent quotient
    power_series_model: QuotientPresentation
    reducer: WeierstrassFactorization | None
    is_zero_ring: bool
    zero_certificate: TruncatedLaurent | None
    ideal: Ideal | None = None
    adic_power: int = 1

    @property
    def var(self) -> VariableTag:
        return self.relation.series.var

    def degree_of(self, coeff: GradedPolynomial, exponent: int) -> RODegree:
        """RO(C2) degree of coeff * x^exponent in this presentation."""
        d = coeff.degree()
        if self.theory.real_flavored:
            # coefficient degrees live on the kp-line
            base = RODegree(d // 2, d // 2)
        else:
            base = RODegree(d, 0)
        return base + self.var.ro_degree(exponent)


def _relation_two_routes(T: TheoryPresentation, k: int, trunc: int) -> PSeries:
    """[p^k](x) via exp(p^k log), cross-checked against the k-fold composite."""
    direct = p_series(T, k, trunc)
    composed = p_series_by_composition(T, k, trunc)
    lo = max(direct.series.min_exp, composed.series.min_exp)
    hi = min(direct.series.window, composed.series.window)
    if not direct.series.same_within(composed.series, lo, hi):
        raise TheoryError(
            "internal inconsistency: [p^k] differs between the multiplier "
            "route and the composition route")
    return direct


def tate_coefficients(T: TheoryPresentation, k: int = 1, trunc: int = 8,
                      mod_ideal: Ideal | None = None, adic_power: int = 1,
                      ) -> TateRingPresentation:
    """Assemble T_*((x))/([p^k](x)) with a canonical-form reducer when the
    relation has a unit leading term at the stated precision."""
    relation = _relation_two_routes(T, k, trunc)
    if relation.series.is_zero():
        raise TheoryError(
            f"[{T.p ** k}](x) vanishes at truncation {trunc}; it would be a "
            "zero divisor")
    if mod_ideal is not None:
        series = relation.series.reduced_mod(mod_ideal, adic_power)
        relation = PSeries(T, relation.multiplier, series, relation.truncation,
                           relation.convention,
                           reduced_along=f"mod {mod_ideal}^{adic_power}")
    var = X_RHO if T.real_flavored else X_INT
    rel_series = relation.series.retagged(var)
    base = power_series_quotient(rel_series, mod_ideal, adic_power)
    step = TruncatedLaurent(T, {1: T.one()}, 0, rel_series.window, var)
    laurent = localize_colimit(base, step, 1)
    return TateRingPresentation(
        theory=T, group_order=T.p ** k, k=k, relation=relation,
        quotient=laurent, power_series_model=base, reducer=base.reducer,
        is_zero_ring=laurent.is_zero_ring,
        zero_certificate=laurent.zero_certificate,
        ideal=mod_ideal, adic_power=adic_power)


@dataclass
class VanishingCertificate:
    """Unit factorization of [p^k](x) over the residue theory at height n.

    The factorization exhibits the relation as a unit of the Laurent ring,
    so the Tate coefficient ring is zero; the inverse is carried as the
    certificate.
    """

    n: int
    k: int
    p: int
    truncation: int
    relation: PSeries
    factorization: WeierstrassFactorization
    lead_exp: int
    lead_unit: GradedPolynomial
    relation_inverse: TruncatedLaurent
    is_zero_ring: bool = True

    def expected_lead_exp(self) -> int:
        return self.p ** (self.n * self.k)

    def expected_unit_exponent(self) -> int:
        return (self.p ** (self.n * self.k) - 1) // (self.p ** self.n - 1)

    def check(self) -> bool:
        if self.lead_exp != self.expected_lead_exp():
            return False
        (key, _), = self.lead_unit.terms.items()
        if key != ((self.n, self.expected_unit_exponent()),):
            return False
        prod = self.relation_inverse * self.relation.series
        if prod.window < 0 or prod.min_exp > 0:
            return False
        one = TruncatedLaurent(prod.theory, {0: prod.theory.one()},
                               prod.min_exp, prod.window, prod.var)
        return self.factorization.check() and prod.same_within(one)


def vanishing_certificate(n: int, k: int, trunc: int | None = None,
                          p: int = 2) -> VanishingCertificate:
    """Certify that the height-n residue theory has zero Tate ring for C_{p^k}."""
    if n < 1 or k < 1:
        raise TheoryError("need height n >= 1 and power k >= 1")
    needed = p ** (n * k) + 1
    if trunc is None:
        # room for the inverse certificate to be checked through x^0
        trunc = 2 * p ** (n * k) + 2
    K = make_theory("Kn", n, p)
    relation = _relation_two_routes(K, k, trunc)
    try:
        fact = weierstrass_factor(relation.series)
    except NotDistinguished as exc:
        raise WindowError(
            f"no unit leading term at truncation {trunc}; required "
            f"truncation >= {needed}", required=needed) from exc
    if fact.lead_exp != p ** (n * k):
        raise WindowError(
            f"leading exponent {fact.lead_exp} at truncation {trunc}; "
            f"required truncation >= {needed}", required=needed)
    from .series import laurent_inverse
    inv = laurent_inverse(relation.series)
    return VanishingCertificate(
        n=n, k=k, p=p, truncation=trunc, relation=relation,
        factorization=fact, lead_exp=fact.lead_exp,
        lead_unit=fact.lead_unit, relation_inverse=inv)


@dataclass
class ComparisonReport:
    """Outcome of comparing the one-step and Euler-class localizations."""

    n: int
    truncation: int
    presentations_equal: bool
    stride_invariant: bool
    euler_step_valid: bool
    euler_step_exponent: int
    euler_unit: GradedPolynomial
    generator_images: list          # (stage j, exponent, unit coefficient)
    classical_step_degree: int      # cohomological degree of the Euler datum
    degree_ledger_ok: bool

    def passed(self) -> bool:
        return (self.presentations_equal and self.stride_invariant
                and self.euler_step_valid and self.degree_ledger_ok)


def comparison_map_check(n: int, trunc: int = 8) -> ComparisonReport:
    """Compare the two Euler-class colimits building the Tate Laurent ring.

    One tower inverts the degree-rho class one power of x at a time; the
    other uses the orientation-forced datum v_n^(-2^(n+1)(2^n-1)) x^(2^(n+1))
    with a coarser cofinal stride.  Both must give the identical quotient
    presentation, the classical step must be a unit times a pure power of
    x, and its degree must come out to the real rank 2^(n+2) of the bundle
    it orients.
    """
    if n < 1:
        raise TheoryError("height must be >= 1")
    E = make_theory("En", n, 2)
    relation = _relation_two_routes(E, 1, trunc)
    base = power_series_quotient(relation.series)

    step_par = TruncatedLaurent(E, {1: E.one()}, 0, trunc, relation.series.var)
    m = 2 ** (n + 1)
    vexp = -m * (2 ** n - 1)
    euler_coeff = GradedPolynomial.gen(E, n, vexp)
    step_cl = TruncatedLaurent.from_poly_coeff(euler_coeff, m, trunc,
                                               relation.series.var)

    L_par = localize_colimit(base, step_par, 1)
    L_cl = localize_colimit(base, step_cl, 2 ** (n + 2))
    L_par2 = localize_colimit(base, step_par, 2)

    euler_valid = True
    try:
        sf = weierstrass_factor(step_cl)
        euler_valid = (sf.lead_exp == m
                       and unit_inverse(sf.lead_unit) is not None)
    except NotDistinguished:
        euler_valid = False

    images = []
    for j in (1, 2):
        # the step is a single monomial, so its powers are exact
        coeff = euler_coeff ** j
        images.append((j, m * j, coeff))
        if unit_inverse(coeff) is None:
            euler_valid = False

    # degree of the classical Euler datum in the hat convention
    lam = lambda_of(n)
    homotopy = euler_coeff.degree() + m * (lam - 1)
    coh = -homotopy
    ledger_ok = coh == 2 ** (n + 2)

    return ComparisonReport(
        n=n, truncation=trunc,
        presentations_equal=L_par.same_presentation(L_cl),
        stride_invariant=L_par.same_presentation(L_par2),
        euler_step_valid=euler_valid,
        euler_step_exponent=m,
        euler_unit=euler_coeff,
        generator_images=images,
        classical_step_degree=coh,
        degree_ledger_ok=ledger_ok)
