"""RO(C2) and integer degree arithmetic for the kp-line calculus.

Degrees a+b*sigma are stored as integer pairs.  The only constants the
rest of the engine needs are the shift exponent lambda_n, the regular
representation rho = 1+sigma, and the translation between k*rho degrees
and the integer degree k*(1-lambda) obtained by shifting with the
invertible class y in degree lambda+sigma.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import TheoryError


@dataclass(frozen=True)
class RODegree:
    """A virtual C2-representation degree a + b*sigma."""

    a: int
    b: int

    def __add__(self, other: "RODegree") -> "RODegree":
        return RODegree(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "RODegree") -> "RODegree":
        return RODegree(self.a - other.a, self.b - other.b)

    def __neg__(self) -> "RODegree":
        return RODegree(-self.a, -self.b)

    def scale(self, k: int) -> "RODegree":
        return RODegree(k * self.a, k * self.b)

    @property
    def underlying(self) -> int:
        """Total (forgetful) degree a+b."""
        return self.a + self.b

    @property
    def fixed(self) -> int:
        """Trivial-representation multiplicity."""
        return self.a

    def is_integer(self) -> bool:
        return self.b == 0

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}s"
        return f"{self.a}{self.b:+d}s"


SIGMA = RODegree(0, 1)
RHO = RODegree(1, 1)


def regular_degree(k: int) -> RODegree:
    """k copies of the regular representation."""
    return RODegree(k, k)


def lambda_of(n: int) -> int:
    """The shift exponent 2^(n+2) * (2^(n-1) - 1) + 1 for height n >= 1."""
    if n < 1:
        raise TheoryError("lambda is only defined for height n >= 1")
    return 2 ** (n + 2) * (2 ** (n - 1) - 1) + 1


def lambda_plus_sigma(n: int) -> RODegree:
    """Degree of the invertible shifting class y at height n."""
    return RODegree(lambda_of(n), 1)


def hat_shift(k: int, n: int) -> int:
    """Integer degree of z*y^(-k) for z in degree k*rho: k*(1-lambda_n)."""
    return k * (1 - lambda_of(n))


def splitting_degrees(n: int, jmin: int, jmax: int) -> list[int]:
    """Suspension degrees of the height-(n-1) wedge summands, j in [jmin, jmax].

    The n=1 case is special: the summands sit in degrees 4j (the target is
    rational and there is no shift exponent at height 0).
    """
    if n < 1:
        raise TheoryError("splitting degrees require height n >= 1")
    if n == 1:
        return [4 * j for j in range(jmin, jmax + 1)]
    step = 1 - lambda_of(n - 1)
    return [step * j for j in range(jmin, jmax + 1)]


@dataclass(frozen=True)
class TheoryParams:
    """Numeric height data: shift exponent, torsion exponent, periodicity."""

    n: int
    p: int
    lam: int
    torsion_exponent: int
    periodicity: int

    @classmethod
    def at_height(cls, n: int, p: int = 2) -> "TheoryParams":
        if n < 1:
            raise TheoryError("height must be >= 1")
        return cls(
            n=n,
            p=p,
            lam=lambda_of(n),
            torsion_exponent=2 ** (n + 1) - 1,
            periodicity=2 ** (n + 1) * (2 ** n - 1),
        )


@dataclass(frozen=True)
class DistinguishedClass:
    """Degree-tagged metadata for a named class; not a ring element."""

    name: str
    degree: RODegree
    invertible: bool = False
    torsion_order: int = 0          # 0 = non-torsion
    nilpotence_exponent: int = 0    # 0 = not known nilpotent


def distinguished_classes(n: int) -> dict[str, DistinguishedClass]:
    """The bookkeeping classes of the height-n fixed-point theory.

    Only degrees and torsion/nilpotence exponents are modeled; the full
    RO(C2)-graded ring is out of scope.
    """
    params = TheoryParams.at_height(n)
    lam = params.lam
    return {
        "x": DistinguishedClass(
            "x", RODegree(lam, 0), torsion_order=2,
            nilpotence_exponent=params.torsion_exponent,
        ),
        "y": DistinguishedClass("y", RODegree(lam, 1), invertible=True),
        "a_sigma": DistinguishedClass("a_sigma", RODegree(0, -1)),
        "u_2sigma": DistinguishedClass("u_2sigma", RODegree(2, -2), invertible=True),
        "vn_periodicity": DistinguishedClass(
            "vn_periodicity", RODegree(params.periodicity, 0), invertible=True,
        ),
        "vbar_n": DistinguishedClass("vbar_n", regular_degree(2 ** n - 1)),
    }
