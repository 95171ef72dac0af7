"""Precision contexts: the truncation data that governs every computation.

A context fixes the prime, the coefficient domain (arbitrary-precision
rationals, Z/p^N, or F_p), an ordered list of variables with per-variable
truncation windows and grading degrees, optional joint total-degree caps
(used for bivariate laws truncated at total degree D), and an optional
ideal-adic cap for completions at an ideal (p, v_1, ..).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import TateFglError

RATIONAL = "rational"
ZMOD = "zmod"
CHARP = "charp"

_DOMAINS = (RATIONAL, ZMOD, CHARP)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class Variable:
    """One series variable: exponents live in ``[-tail, order)``.

    ``tail_mode`` controls what happens when an operation drops below the
    tail bound: ``strict`` raises (exact Laurent windows, the x of the Tate
    ring), ``truncate`` silently discards (completion at the inverse
    variable, the y of the residue field).
    """

    name: str
    order: int
    degree: int = 0
    tail: int = 0
    tail_mode: str = "strict"

    def __post_init__(self) -> None:
        if self.order < 1:
            raise TateFglError(f"variable {self.name}: truncation order must be >= 1")
        if self.tail < 0:
            raise TateFglError(f"variable {self.name}: tail bound must be >= 0")
        if self.tail_mode not in ("strict", "truncate"):
            raise TateFglError(f"variable {self.name}: bad tail_mode {self.tail_mode!r}")

    @property
    def laurent(self) -> bool:
        return self.tail > 0


@dataclass(frozen=True)
class Ideal:
    """Adic cap for the ideal generated by p together with ``variables``.

    A term is kept only when (p-valuation of its coefficient) plus its total
    exponent in the listed variables stays below ``order``.
    """

    variables: tuple[str, ...]
    order: int

    def __post_init__(self) -> None:
        if self.order < 1:
            raise TateFglError("ideal-adic order must be >= 1")


@dataclass(frozen=True)
class PrecisionContext:
    """Joint caps are triples (names, weights, max_total): a term is kept
    only when the weighted sum of its exponents over ``names`` is at most
    ``max_total``.  Weights must be nonnegative so that the cap cuts out a
    genuine ideal (weighted degree can only grow under multiplication)."""

    p: int
    domain: str
    variables: tuple[Variable, ...]
    padic_order: int | None = None
    joint_caps: tuple[tuple[tuple[str, ...], tuple[int, ...], int], ...] = ()
    ideal: Ideal | None = None

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise TateFglError(f"{self.p} is not prime")
        if self.domain not in _DOMAINS:
            raise TateFglError(f"unknown coefficient domain {self.domain!r}")
        if self.domain == ZMOD and (self.padic_order is None or self.padic_order < 1):
            raise TateFglError("zmod domain needs padic_order >= 1")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise TateFglError("duplicate variable names")
        for subset, weights, cap in self.joint_caps:
            for n in subset:
                if n not in names:
                    raise TateFglError(f"joint cap on unknown variable {n}")
            if len(weights) != len(subset):
                raise TateFglError("joint cap weights must match its variables")
            if any(w < 0 for w in weights):
                raise TateFglError("joint cap weights must be >= 0")
            if cap < 0:
                raise TateFglError("joint cap must be >= 0")
        if self.ideal is not None:
            for n in self.ideal.variables:
                if n not in names:
                    raise TateFglError(f"ideal generator {n} is not a variable")

    # -- lookups ---------------------------------------------------------

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def index(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise TateFglError(f"no variable named {name}")

    def var(self, name: str) -> Variable:
        return self.variables[self.index(name)]

    @property
    def modulus(self) -> int | None:
        if self.domain == ZMOD:
            return self.p ** self.padic_order
        if self.domain == CHARP:
            return self.p
        return None

    # -- coefficient helpers ----------------------------------------------

    def normalize_coeff(self, c):
        """Reduce a raw coefficient into the domain; returns 0 for zero."""
        if self.domain == RATIONAL:
            if isinstance(c, int):
                c = Fraction(c)
            return c
        m = self.modulus
        if isinstance(c, Fraction):
            if c.denominator == 1:
                c = c.numerator
            else:
                from .errors import IntegralityFailure

                if c.denominator % self.p == 0:
                    raise IntegralityFailure(
                        f"denominator {c.denominator} not invertible mod {self.p}^k"
                    )
                c = c.numerator * pow(c.denominator, -1, m)
        return c % m

    def pval(self, c) -> int:
        """p-valuation of a nonzero normalized coefficient (capped at N)."""
        p = self.p
        if self.domain == RATIONAL:
            num, den = c.numerator, c.denominator
            v = 0
            while num % p == 0:
                num //= p
                v += 1
            while den % p == 0:
                den //= p
                v -= 1
            return v
        cap = self.padic_order if self.domain == ZMOD else 1
        v = 0
        while v < cap and c % p == 0:
            c //= p
            v += 1
        return v

    # -- derived contexts --------------------------------------------------

    def with_domain(self, domain: str, padic_order: int | None = None) -> "PrecisionContext":
        return replace(self, domain=domain, padic_order=padic_order)

    def with_variables(self, variables: tuple[Variable, ...]) -> "PrecisionContext":
        return replace(self, variables=variables)

    def add_variable(self, v: Variable) -> "PrecisionContext":
        return replace(self, variables=self.variables + (v,))

    def drop_variable(self, name: str) -> "PrecisionContext":
        i = self.index(name)
        caps = []
        for subset, weights, cap in self.joint_caps:
            kept = tuple((n, w) for n, w in zip(subset, weights) if n != name)
            if kept:
                caps.append((tuple(n for n, _ in kept), tuple(w for _, w in kept), cap))
        ideal = self.ideal
        if ideal is not None and name in ideal.variables:
            ideal = Ideal(tuple(n for n in ideal.variables if n != name), ideal.order)
        return replace(
            self,
            variables=self.variables[:i] + self.variables[i + 1 :],
            joint_caps=tuple(caps),
            ideal=ideal,
        )

    def with_var_order(self, name: str, order: int) -> "PrecisionContext":
        i = self.index(name)
        v = self.variables[i]
        nv = Variable(v.name, order, v.degree, v.tail, v.tail_mode)
        return replace(
            self, variables=self.variables[:i] + (nv,) + self.variables[i + 1 :]
        )

    def with_joint_cap(
        self, subset: tuple[str, ...], cap: int, weights: tuple[int, ...] | None = None
    ) -> "PrecisionContext":
        if weights is None:
            weights = (1,) * len(subset)
        return replace(
            self, joint_caps=self.joint_caps + ((tuple(subset), tuple(weights), cap),)
        )

    def with_ideal(self, variables: tuple[str, ...], order: int) -> "PrecisionContext":
        return replace(self, ideal=Ideal(tuple(variables), order))

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "p": self.p,
            "domain": self.domain,
            "variables": [
                {
                    "name": v.name,
                    "order": v.order,
                    "degree": v.degree,
                    "tail": v.tail,
                    "tail_mode": v.tail_mode,
                }
                for v in self.variables
            ],
        }
        if self.padic_order is not None:
            d["padic_order"] = self.padic_order
        if self.joint_caps:
            d["joint_caps"] = [
                {"variables": list(subset), "weights": list(weights), "max_total": cap}
                for subset, weights, cap in self.joint_caps
            ]
        if self.ideal is not None:
            d["ideal"] = {"variables": list(self.ideal.variables), "order": self.ideal.order}
        return d

    @staticmethod
    def from_dict(d: dict) -> "PrecisionContext":
        return PrecisionContext(
            p=d["p"],
            domain=d["domain"],
            padic_order=d.get("padic_order"),
            variables=tuple(
                Variable(
                    name=v["name"],
                    order=v["order"],
                    degree=v.get("degree", 0),
                    tail=v.get("tail", 0),
                    tail_mode=v.get("tail_mode", "strict"),
                )
                for v in d["variables"]
            ),
            joint_caps=tuple(
                (
                    tuple(c["variables"]),
                    tuple(c.get("weights", [1] * len(c["variables"]))),
                    c["max_total"],
                )
                for c in d.get("joint_caps", [])
            ),
            ideal=(
                Ideal(tuple(d["ideal"]["variables"]), d["ideal"]["order"])
                if "ideal" in d
                else None
            ),
        )
