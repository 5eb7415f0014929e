"""The p-typical formal group law: logarithm, exponential, formal sum, p-series.

Everything is computed exactly in characteristic zero over a rationalized
presentation (denominators are powers of p during intermediate steps) and
then mapped back; the residue theories get their p-series by reducing the
characteristic-zero answer along the invariant ideal.  Direct composition
in characteristic p is kept as an independent oracle, never the primary
route.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

from .coeffring import (
    GradedPolynomial,
    Ideal,
    TheoryPresentation,
    ideal_In,
    make_theory,
)
from .errors import ChromaticError, TheoryError, WindowError
from .series import TruncatedLaurent, VariableTag, X_INT, invert_one_plus

CONVENTIONS = ("hazewinkel", "araki")


@dataclass
class LogSeries:
    """log(x) = sum m_i x^(p^i) with m_0 = 1, over the rationalized theory."""

    theory: TheoryPresentation          # original (integral) presentation
    rational_theory: TheoryPresentation
    depth: int
    coefficients: list                  # m_0 .. m_depth
    convention: str = "hazewinkel"

    def as_series(self, trunc: int, var: VariableTag = X_INT
                  ) -> TruncatedLaurent:
        """The logarithm as a truncated power series in x."""
        p = self.theory.p
        if p ** self.depth < trunc and p ** (self.depth + 1) <= trunc:
            raise WindowError(
                f"log depth {self.depth} only supports truncation "
                f"{p ** (self.depth + 1) - 1}", required=trunc)
        coeffs = {}
        for i, m in enumerate(self.coefficients):
            e = p ** i
            if e <= trunc and not m.is_zero():
                coeffs[e] = m
        return TruncatedLaurent(self.rational_theory, coeffs, 1, trunc, var)


def required_depth(p: int, trunc: int) -> int:
    d = 0
    while p ** (d + 1) <= trunc:
        d += 1
    return d


def hazewinkel_log(T: TheoryPresentation, depth: int,
                   convention: str = "hazewinkel") -> LogSeries:
    """Logarithm coefficients from the generator recursion.

    Hazewinkel: p*m_k = sum_{0<=i<k} m_i * v_{k-i}^(p^i).
    Araki (cross-check convention): p*m_k = sum_{0<=i<=k} m_i * v_{k-i}^(p^i)
    with v_0 = p, i.e. (p - p^(p^k))*m_k equals the i<k part of the sum.

    Generators above the height are zero; the residue theories are
    rejected (no logarithm in characteristic p).
    """
    if T.char:
        raise TheoryError(
            "no logarithm in characteristic p; compute the p-series over a "
            "characteristic-zero lift and reduce")
    if convention not in CONVENTIONS:
        raise TheoryError(f"unknown generator convention {convention!r}")
    R = T.rationalize()
    p = T.p
    ms = [R.one()]
    for k in range(1, depth + 1):
        acc = R.zero()
        for i in range(k):
            j = k - i
            if not R.has_gen(j):
                continue
            acc = acc + ms[i] * R.v(j, 1) ** (p ** i)
        if convention == "hazewinkel":
            ms.append(acc * Fraction(1, p))
        else:
            ms.append(acc * Fraction(1, p - p ** (p ** k)))
    return LogSeries(T, R, depth, ms, convention)


def series_inverse(log, trunc: int) -> TruncatedLaurent:
    """Functional inverse exp of a power series with linear coefficient 1.

    Newton iteration with doubling precision; the round trip
    log(exp(y)) = y is asserted exactly through the truncation degree
    before returning.
    """
    if isinstance(log, LogSeries):
        log = log.as_series(trunc)
    if log.window < trunc:
        raise WindowError(
            f"inverse to degree {trunc} needs the series to degree {trunc}, "
            f"have {log.window}", required=trunc)
    if log.min_exp < 1 or not log.coeff(1).is_one():
        raise TheoryError("series must start with x (unit linear term)")
    T = log.theory
    var = log.var
    log = log.truncated(trunc)
    dlog = log.derivative().with_min_exp(0)
    one = TruncatedLaurent(T, {0: T.one()}, 0, trunc, var)
    coeffs = {1: T.one()}
    prec = 1
    while prec < trunc:
        prec = min(2 * prec, trunc)
        g = TruncatedLaurent(T, coeffs, 1, prec, var)
        y = TruncatedLaurent(T, {1: T.one()}, 1, prec, var)
        err = log.truncated(prec).compose(g) - y
        if err.is_zero():
            coeffs = dict(g.coeffs)
            continue
        err = err.with_min_exp(err.valuation())
        # the denominator only matters through degree prec - val(err)
        needed = prec - err.valuation()
        den = dlog.truncated(min(dlog.window, needed)).compose(
            g.truncated(min(g.window, max(needed, 1))))
        corr = err * invert_one_plus(den - one.truncated(den.window))
        g = (g - corr.truncated(min(corr.window, prec))).with_min_exp(1)
        coeffs = dict(g.coeffs)
    exp = TruncatedLaurent(T, coeffs, 1, trunc, var)
    check = log.compose(exp)
    ident = TruncatedLaurent(T, {1: T.one()}, 1, check.window, var)
    if not (check - ident).is_zero():
        raise ChromaticError("functional inverse failed its round trip")
    return exp


def log_exp_pair(T: TheoryPresentation, trunc: int,
                 convention: str = "hazewinkel"):
    depth = required_depth(T.p, trunc)
    log = hazewinkel_log(T, depth, convention).as_series(trunc)
    exp = series_inverse(log, trunc)
    return log, exp


# ---------------------------------------------------------------------------
# multivariable truncated series (for the formal sum and its axioms)
# ---------------------------------------------------------------------------

class SeriesNV:
    """A series in several variables truncated by total degree."""

    __slots__ = ("theory", "nvars", "trunc", "terms")

    def __init__(self, theory, nvars: int, trunc: int, terms: dict | None = None):
        self.theory = theory
        self.nvars = nvars
        self.trunc = trunc
        self.terms = {}
        for exps, c in (terms or {}).items():
            if not isinstance(c, GradedPolynomial):
                c = GradedPolynomial.const(theory, c)
            if c.is_zero():
                continue
            if len(exps) != nvars:
                raise TheoryError("wrong arity in multivariable term")
            if sum(exps) > trunc:
                continue
            self.terms[tuple(exps)] = c

    @classmethod
    def variable(cls, theory, nvars, i, trunc):
        exps = tuple(1 if j == i else 0 for j in range(nvars))
        return cls(theory, nvars, trunc, {exps: theory.one()})

    def _check(self, other):
        if self.nvars != other.nvars:
            raise TheoryError("mixed arities")

    def __add__(self, other):
        self._check(other)
        trunc = min(self.trunc, other.trunc)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, self.theory.zero()) + c
        return SeriesNV(self.theory, self.nvars, trunc, out)

    def __neg__(self):
        return SeriesNV(self.theory, self.nvars, self.trunc,
                        {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, GradedPolynomial):
            return SeriesNV(self.theory, self.nvars, self.trunc,
                            {e: c * other for e, c in self.terms.items()})
        self._check(other)
        trunc = min(self.trunc, other.trunc)
        out = {}
        for e1, c1 in self.terms.items():
            d1 = sum(e1)
            for e2, c2 in other.terms.items():
                if d1 + sum(e2) > trunc:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, self.theory.zero()) + c1 * c2
        return SeriesNV(self.theory, self.nvars, trunc, out)

    def is_zero(self):
        return not self.terms

    def coeff(self, exps):
        return self.terms.get(tuple(exps), self.theory.zero())

    def min_total_degree(self):
        return min((sum(e) for e in self.terms), default=None)

    def substitute_zero(self, i: int) -> "SeriesNV":
        """Set variable i to 0, keeping the arity for comparisons."""
        out = {e: c for e, c in self.terms.items() if e[i] == 0}
        return SeriesNV(self.theory, self.nvars, self.trunc, out)

    def swap(self, i: int, j: int) -> "SeriesNV":
        out = {}
        for e, c in self.terms.items():
            l = list(e)
            l[i], l[j] = l[j], l[i]
            out[tuple(l)] = c
        return SeriesNV(self.theory, self.nvars, self.trunc, out)

    def inject(self, positions, nvars: int) -> "SeriesNV":
        """View this series inside a larger variable set."""
        out = {}
        for e, c in self.terms.items():
            big = [0] * nvars
            for pos, exp in zip(positions, e):
                big[pos] = exp
            out[tuple(big)] = c
        return SeriesNV(self.theory, nvars, self.trunc, out)

    def map_coefficients(self, fn):
        return SeriesNV(self.theory, self.nvars, self.trunc,
                        {e: fn(c) for e, c in self.terms.items()})

    def __str__(self):
        if not self.terms:
            return "0"
        names = "xyzw"
        parts = []
        for e in sorted(self.terms, key=lambda t: (sum(t), t)):
            mono = " ".join(
                f"{names[i]}^{k}" if k > 1 else names[i]
                for i, k in enumerate(e) if k)
            c = self.terms[e]
            cs = f"({c})" if len(c.terms) > 1 else str(c)
            parts.append(f"{cs}*{mono}" if mono else cs)
        return " + ".join(parts)

    __repr__ = __str__


def evaluate_power_series(f: TruncatedLaurent, arg: SeriesNV) -> SeriesNV:
    """f(arg) for a one-variable power series f and arg of positive order.

    The result is truncated to what both windows support: terms of f past
    its window would first contribute in total degree (window+1)*ord(arg).
    """
    if f.min_exp < 0:
        raise TheoryError("needs a power series")
    m = arg.min_total_degree()
    if m is not None and m < 1:
        raise TheoryError("argument must have positive order")
    m = 1 if m is None else m
    trunc = min(arg.trunc, (f.window + 1) * m - 1)
    out = SeriesNV(arg.theory, arg.nvars, trunc)
    const = f.coeffs.get(0)
    if const is not None:
        zero_exp = tuple([0] * arg.nvars)
        out = out + SeriesNV(arg.theory, arg.nvars, trunc, {zero_exp: const})
    power = None
    for k in range(1, min(f.window, trunc) + 1):
        power = arg if k == 1 else power * arg
        if power.is_zero():
            break
        c = f.coeffs.get(k)
        if c is not None:
            out = out + power.map_coefficients(lambda q, c=c: q * c)
    return out


def evaluate_nv(F: SeriesNV, args: list) -> SeriesNV:
    """Substitute series of positive order for the variables of F."""
    if len(args) != F.nvars:
        raise TheoryError("arity mismatch")
    nvars = args[0].nvars
    trunc = min([F.trunc] + [a.trunc for a in args])
    theory = args[0].theory
    for a in args:
        m = a.min_total_degree()
        if m is not None and m < 1:
            raise TheoryError("arguments must have positive order")
    max_exp = [max((e[i] for e in F.terms), default=0) for i in range(F.nvars)]
    powers = []
    for i, a in enumerate(args):
        pw = [SeriesNV(theory, nvars, trunc,
                       {tuple([0] * nvars): theory.one()})]
        for k in range(1, max_exp[i] + 1):
            pw.append(pw[-1] * a)
        powers.append(pw)
    out = SeriesNV(theory, nvars, trunc)
    for e, c in F.terms.items():
        term = None
        for i, k in enumerate(e):
            if k == 0:
                continue
            term = powers[i][k] if term is None else term * powers[i][k]
        if term is None:
            term = SeriesNV(theory, nvars, trunc,
                            {tuple([0] * nvars): theory.one()})
        out = out + term.map_coefficients(lambda q, c=c: q * c)
    return out


def fgl_sum(T: TheoryPresentation, trunc: int,
            convention: str = "hazewinkel") -> SeriesNV:
    """The formal sum F(x, y) = exp(log x + log y), truncated by total degree.

    Coefficients are returned over the integral presentation; a
    non-p-local coefficient here would mean the engine is broken.
    """
    log, exp = log_exp_pair(T, trunc, convention)
    x = SeriesNV.variable(log.theory, 2, 0, trunc)
    y = SeriesNV.variable(log.theory, 2, 1, trunc)
    s = evaluate_power_series(log, x) + evaluate_power_series(log, y)
    F = evaluate_power_series(exp, s)
    return F.map_coefficients(lambda c: c.map_to(T))


def formal_sum_of(F: SeriesNV, a: SeriesNV, b: SeriesNV) -> SeriesNV:
    return evaluate_nv(F, [a, b])


# ---------------------------------------------------------------------------
# p-series and m-series
# ---------------------------------------------------------------------------

@dataclass
class PSeries:
    """The m-series [m](x), a power series with no constant term."""

    theory: TheoryPresentation
    multiplier: int
    series: TruncatedLaurent
    truncation: int
    convention: str = "hazewinkel"
    reduced_along: str = ""

    def __post_init__(self):
        if self.series.min_exp < 1:
            raise TheoryError("an m-series is a power series without "
                              "constant term")
        lin = self.series.coeff(1) if self.series.window >= 1 else None
        expected = GradedPolynomial.const(self.theory, self.multiplier)
        if lin is not None and not self.reduced_along and lin != expected:
            raise TheoryError(
                f"linear coefficient {lin} does not match multiplier "
                f"{self.multiplier}")

    def coeff(self, e):
        return self.series.coeff(e)


_SERIES_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def _cached(key, builder):
    with _CACHE_LOCK:
        hit = _SERIES_CACHE.get(key)
    if hit is not None:
        return hit
    value = builder()
    with _CACHE_LOCK:
        _SERIES_CACHE[key] = value
    return value


def m_series(T: TheoryPresentation, m: int, trunc: int,
             convention: str = "hazewinkel") -> PSeries:
    """[m](x) = exp(m * log x) over a characteristic-zero presentation.

    Results are memoized per (theory, multiplier, truncation, convention);
    series are immutable so sharing is safe across threads.
    """
    if T.char:
        raise TheoryError("use p_series for the residue theories")

    def build():
        log, exp = _cached(
            ("logexp", T.spec_string(), trunc, convention),
            lambda: log_exp_pair(T, trunc, convention))
        scaled = log.map_coefficients(lambda c: c * m)
        ser = exp.compose(scaled).with_min_exp(1)
        return PSeries(T, m, ser.map_to(T), trunc, convention)

    return _cached(("mseries", T.spec_string(), m, trunc, convention), build)


def p_series(T: TheoryPresentation, k: int = 1, trunc: int = 8,
             convention: str = "hazewinkel") -> PSeries:
    """[p^k](x) over T; residue theories are computed over a lift and reduced."""
    if k < 1:
        raise TheoryError("the power k must be >= 1")
    if not T.char:
        return m_series(T, T.p ** k, trunc, convention)
    lift = make_theory("BPn", T.n, T.p)
    ps = m_series(lift, T.p ** k, trunc, convention)
    return reduce_p_series_mod(ps, ideal_In(lift, T.n), 1, target=T)


def reduce_p_series_mod(ps: PSeries, I: Ideal, adic_power: int,
                        target: TheoryPresentation | None = None) -> PSeries:
    """Coefficientwise ideal reduction, optionally pushed into a residue theory."""
    ser = ps.series.reduced_mod(I, adic_power)
    theory = ps.theory
    if target is not None:
        ser = ser.map_to(target)
        theory = target
    label = f"mod {I}^{adic_power}"
    return PSeries(theory, ps.multiplier, ser, ps.truncation,
                   ps.convention, reduced_along=label)


def compose_series(outer: PSeries, inner: PSeries) -> PSeries:
    """[a]([b](x)): composition of m-series over the same theory."""
    if outer.theory != inner.theory:
        raise TheoryError("composition across different theories")
    ser = outer.series.compose(inner.series).with_min_exp(1)
    return PSeries(outer.theory, outer.multiplier * inner.multiplier,
                   ser, min(outer.truncation, ser.window),
                   outer.convention,
                   reduced_along=outer.reduced_along or inner.reduced_along)


def p_series_by_composition(T: TheoryPresentation, k: int, trunc: int,
                            convention: str = "hazewinkel") -> PSeries:
    """[p^k] as the k-fold composite [p] o ... o [p] (independent oracle).

    For residue theories the composition happens in characteristic p.
    """
    base = p_series(T, 1, trunc, convention)
    out = base
    for _ in range(k - 1):
        out = compose_series(base, out)
    return out


def araki_defining_series(T: TheoryPresentation, trunc: int) -> PSeries:
    """px +_F v_1 x^p +_F v_2 x^(p^2) +_F ... using the Araki log.

    Equals [p](x) in the Araki convention; used as a cross-check only.
    """
    if T.char:
        raise TheoryError("characteristic-zero presentations only")
    log, exp = log_exp_pair(T, trunc, "araki")
    R = log.theory
    p = T.p
    # formal sum via log: log[p](x) = p*log(x) means
    # [p](x) = exp(p x_log) with x_log summed termwise, so instead verify
    # the series sum_F v_i x^(p^i) by adding logs of the summands.
    total_log = TruncatedLaurent.zero(R, 1, trunc, log.var)
    summands = [TruncatedLaurent(R, {1: GradedPolynomial.const(R, p)},
                                 1, trunc, log.var)]
    i = 1
    while p ** i <= trunc and R.has_gen(i):
        summands.append(TruncatedLaurent(
            R, {p ** i: R.v(i)}, 1, trunc, log.var))
        i += 1
    for s in summands:
        total_log = total_log + log.compose(s).with_min_exp(1)
    ser = exp.compose(total_log).with_min_exp(1).map_to(T)
    return PSeries(T, p, ser, trunc, "araki")
