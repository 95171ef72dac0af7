"""Formal group laws: Araki logarithms, BP<n> and Honda laws, twists.

The construction pipeline runs over exact rationals (where logarithms
exist) and reduces to Z/p^N or F_p afterwards; p-integrality of every
law coefficient is a runtime check, not an assumption.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .context import CHARP, RATIONAL, ZMOD, PrecisionContext, Variable
from .errors import (
    HomogeneityFailure,
    IntegralityFailure,
    LogDivergence,
    NonConvergence,
    NonzeroConstantTerm,
    TateFglError,
)
from .series import MultiSeries


@dataclass(frozen=True)
class FormalGroupLaw:
    """A bivariate law F(s,t) over the coefficient variables of its context."""

    ctx: PrecisionContext
    series: MultiSeries
    p: int
    tag: str
    svar: str = "s"
    tvar: str = "t"

    @property
    def degree(self) -> int:
        """Common grading degree of the law's variables and values."""
        return self.ctx.var(self.svar).degree

    def plus(self, a: MultiSeries, b: MultiSeries) -> MultiSeries:
        """Formal sum a +_F b evaluated in the context of the arguments.

        Grouped Horner evaluation: the law is bucketed by (s,t)-bidegree
        and the coefficient series multiply cached argument powers.
        """
        for g in (a, b):
            if g.constant_coeff():
                raise NonzeroConstantTerm("formal sum argument has a constant term")
        if a.ctx != b.ctx:
            raise TateFglError("formal sum arguments live in different contexts")
        target = a.ctx
        ctx = self.ctx
        si, ti = ctx.index(self.svar), ctx.index(self.tvar)
        slots: list[int | None] = []
        for idx, v in enumerate(ctx.variables):
            slots.append(None if idx in (si, ti) else target.index(v.name))
        width = len(target.variables)
        groups: dict[tuple[int, int], dict] = {}
        for e, c in self.series.terms():
            ne = [0] * width
            for idx, k in enumerate(e):
                if k and idx not in (si, ti):
                    ne[slots[idx]] = k
            d = groups.setdefault((e[si], e[ti]), {})
            te = tuple(ne)
            d[te] = d.get(te, 0) + c

        one = MultiSeries.one(target)

        def powers(base: MultiSeries, top: int) -> list[MultiSeries]:
            out = [one]
            for _ in range(top):
                out.append(out[-1] * base)
            return out

        by_i: dict[int, list] = {}
        for (i, j), d in groups.items():
            by_i.setdefault(i, []).append((j, d))
        apow = powers(a, max(by_i) if by_i else 0)
        bpow = powers(b, max((j for v in by_i.values() for j, _ in v), default=0))
        total = MultiSeries.zero(target)
        for i in sorted(by_i):
            inner = MultiSeries.zero(target)
            for j, d in sorted(by_i[i], key=lambda t: t[0]):
                inner = inner + MultiSeries(target, d) * bpow[j]
            total = total + apow[i] * inner
        return total


@dataclass(frozen=True)
class PTypicalGenerators:
    p: int
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise TateFglError("height bound must be >= 0")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f"v{i}" for i in range(1, self.n + 1))

    def degree(self, i: int) -> int:
        return 2 * (self.p ** i - 1)


@dataclass(frozen=True)
class LogSeries:
    """Araki-style logarithm sum(l_k x^(p^k)) with rational v-polynomial l_k."""

    p: int
    n: int
    ctx: PrecisionContext
    coeffs: tuple[MultiSeries, ...]

    def __post_init__(self) -> None:
        if self.coeffs[0] != MultiSeries.one(self.ctx):
            raise TateFglError("logarithm must start with l_0 = 1")

    def cutoff(self) -> int:
        return len(self.coeffs) - 1


def _v_context(p: int, n: int, weight_bound: int) -> PrecisionContext:
    gens = PTypicalGenerators(p, n)
    vs = tuple(
        Variable(f"v{i}", order=weight_bound + 1, degree=gens.degree(i))
        for i in range(1, n + 1)
    )
    return PrecisionContext(p=p, domain=RATIONAL, variables=vs)


def araki_log(p: int, n: int, cutoff: int, weight_bound: int | None = None) -> LogSeries:
    """Solve (p - p^(p^k)) l_k = sum_{i<k} l_i v_{k-i}^(p^i), l_0 = 1, v_0 = p."""
    if cutoff < 0:
        raise TateFglError("cutoff must be >= 0")
    if weight_bound is None:
        weight_bound = p ** cutoff
    ctx = _v_context(p, n, weight_bound)
    coeffs = [MultiSeries.one(ctx)]
    for k in range(1, cutoff + 1):
        rhs = MultiSeries.zero(ctx)
        for i in range(k):
            j = k - i
            if j > n:
                continue
            rhs = rhs + coeffs[i] * (MultiSeries.variable(ctx, f"v{j}") ** (p ** i))
        denom = Fraction(p) - Fraction(p) ** (p ** k)
        coeffs.append(rhs * (Fraction(1) / denom))
    return LogSeries(p=p, n=n, ctx=ctx, coeffs=tuple(coeffs))


def law_context(
    p: int,
    n: int,
    D: int,
    st_degree: int = -2,
    domain: str = RATIONAL,
    padic_order: int | None = None,
) -> PrecisionContext:
    """Context for a law over v_1..v_n truncated at (s,t)-total degree D."""
    gens = PTypicalGenerators(p, n)
    vs = tuple(
        Variable(f"v{i}", order=D + 1, degree=gens.degree(i)) for i in range(1, n + 1)
    )
    st = (
        Variable("s", order=D + 1, degree=st_degree),
        Variable("t", order=D + 1, degree=st_degree),
    )
    return PrecisionContext(
        p=p,
        domain=domain,
        padic_order=padic_order,
        variables=vs + st,
        joint_caps=((("s", "t"), (1, 1), D),),
    )


def log_on_variable(log: LogSeries, ctx: PrecisionContext, name: str) -> MultiSeries:
    """sum(l_k name^(p^k)) inside a context containing the v's and ``name``."""
    out = MultiSeries.zero(ctx)
    cap = ctx.var(name).order
    for k, lk in enumerate(log.coeffs):
        e = log.p ** k
        if e >= cap:
            break
        out = out + lk.convert(ctx, clip=True) * MultiSeries.monomial(ctx, {name: e})
    return out


def fgl_from_log(
    log: LogSeries, D: int, st_degree: int = -2, ctx: PrecisionContext | None = None
) -> FormalGroupLaw:
    """F(s,t) = l^(-1)(l(s) + l(t)), truncated at total degree D.

    A custom rational context (with extra pruning caps) may be supplied;
    it must contain v_1..v_n and the law variables s, t.
    """
    if ctx is None:
        ctx = law_context(log.p, log.n, D, st_degree=st_degree, domain=RATIONAL)
    ls = log_on_variable(log, ctx, "s")
    lt = log_on_variable(log, ctx, "t")
    linv = ls.comp_inverse("s")
    lam = ls + lt
    if lam.constant_coeff():
        raise TateFglError("logarithm has a constant term")
    F = linv.evaluate({"s": lam})
    law = FormalGroupLaw(ctx=ctx, series=F, p=log.p, tag=f"BP<{log.n}> rational", svar="s", tvar="t")
    if not F.is_homogeneous(st_degree):
        raise HomogeneityFailure("law from log is not homogeneous")
    return law


def reduce_law(
    law: FormalGroupLaw, domain: str, padic_order: int | None = None, tag: str | None = None
) -> FormalGroupLaw:
    """Reduce a rational law to Z/p^N or F_p; IntegralityFailure on p-denominators."""
    ctx = law.ctx.with_domain(domain, padic_order)
    try:
        series = law.series.convert(ctx)
    except IntegralityFailure:
        raise
    return FormalGroupLaw(
        ctx=ctx,
        series=series,
        p=law.p,
        tag=tag or law.tag.replace("rational", domain),
        svar=law.svar,
        tvar=law.tvar,
    )


def bp_law(p: int, n: int, D: int, padic_order: int | None = None):
    """The BP<n> law with Araki p-series: rational law plus Z/p^N copy."""
    cutoff = 0
    while p ** (cutoff + 1) <= D:
        cutoff += 1
    log = araki_log(p, n, cutoff, weight_bound=max(D, p ** cutoff))
    rational = fgl_from_log(log, D)
    reduced = None
    if padic_order is not None:
        reduced = reduce_law(rational, ZMOD, padic_order)
    return log, rational, reduced


def additive_law(ctx: PrecisionContext, p: int, svar: str = "s", tvar: str = "t") -> FormalGroupLaw:
    series = MultiSeries.variable(ctx, svar) + MultiSeries.variable(ctx, tvar)
    return FormalGroupLaw(ctx=ctx, series=series, p=p, tag="additive", svar=svar, tvar=tvar)


# -- law interrogation ---------------------------------------------------------


def check_fgl_axioms(law: FormalGroupLaw) -> dict[str, MultiSeries]:
    """Residuals of the unit, commutativity and associativity axioms.

    Associativity is checked modulo total degree D+1 in (s,t,u), D being
    the joint (s,t) cap of the law's context.
    """
    ctx = law.ctx
    s = MultiSeries.variable(ctx, law.svar)
    t = MultiSeries.variable(ctx, law.tvar)
    zero = MultiSeries.zero(ctx)
    unit_s = law.plus(s, zero) - s
    unit_t = law.plus(zero, t) - t
    comm = law.series - law.series.evaluate({law.svar: t, law.tvar: s})

    cap = None
    for subset, weights, c in ctx.joint_caps:
        if set(subset) == {law.svar, law.tvar} and set(weights) == {1}:
            cap = c
    if cap is None:
        cap = max(ctx.var(law.svar).order, ctx.var(law.tvar).order) - 1
    tvar_spec = ctx.var(law.tvar)
    ctx3 = ctx.add_variable(
        Variable("u_assoc", order=tvar_spec.order, degree=tvar_spec.degree)
    ).with_joint_cap((law.svar, law.tvar, "u_assoc"), cap)
    F3 = law.series.convert(ctx3)
    law3 = FormalGroupLaw(ctx3, F3, law.p, law.tag, law.svar, law.tvar)
    s3 = MultiSeries.variable(ctx3, law.svar)
    t3 = MultiSeries.variable(ctx3, law.tvar)
    u3 = MultiSeries.variable(ctx3, "u_assoc")
    assoc = law3.plus(law3.plus(s3, t3), u3) - law3.plus(s3, law3.plus(t3, u3))
    return {"unit_s": unit_s, "unit_t": unit_t, "commutativity": comm, "associativity": assoc}


def formal_sum(law: FormalGroupLaw, args: list[MultiSeries]) -> MultiSeries:
    """Fold the law over the arguments (right-associated)."""
    if not args:
        raise TateFglError("formal sum of no arguments")
    acc = args[-1]
    if acc.constant_coeff():
        raise NonzeroConstantTerm("formal sum argument has a constant term")
    for a in reversed(args[:-1]):
        acc = law.plus(a, acc)
    return acc


def formal_negate(law: FormalGroupLaw, g: MultiSeries) -> MultiSeries:
    """The series i with F(g, i) = 0 at precision."""
    if g.constant_coeff():
        raise NonzeroConstantTerm("formal negation argument has a constant term")
    neg = -g
    cap = _iteration_cap(g.ctx)
    for _ in range(cap):
        err = law.plus(g, neg)
        if err.is_zero():
            return neg
        neg = neg - err
    raise NonConvergence("formal negation did not stabilize")


def n_series(law: FormalGroupLaw, n: int, g: MultiSeries) -> MultiSeries:
    """The n-fold formal sum [n]_F(g) for n >= 0."""
    if n < 0:
        raise TateFglError("n-series implemented for n >= 0")
    if n == 0:
        return MultiSeries.zero(g.ctx)
    acc = g
    for _ in range(n - 1):
        acc = law.plus(g, acc)
    return acc


def p_series(law: FormalGroupLaw, g: MultiSeries) -> MultiSeries:
    return n_series(law, law.p, g)


def _iteration_cap(ctx: PrecisionContext) -> int:
    cap = 8
    for v in ctx.variables:
        cap += v.order + v.tail
    return cap


# -- Honda laws ---------------------------------------------------------------


def honda_fgl(p: int, h: int, D: int, target: PrecisionContext | None = None) -> FormalGroupLaw:
    """The Honda law of height h: p-typical over F_p with [p](t) = t^q, q = p^h.

    Built from the logarithm sum(x^(q^i) / p^i) over the rationals and
    reduced mod p; a non-integral coefficient would signal a bug.
    """
    if h < 1:
        raise TateFglError("Honda height must be >= 1")
    q = p ** h
    ctx = PrecisionContext(
        p=p,
        domain=RATIONAL,
        variables=(Variable("s", order=D + 1), Variable("t", order=D + 1)),
        joint_caps=((("s", "t"), (1, 1), D),),
    )
    ls = MultiSeries.zero(ctx)
    k = 0
    while q ** k <= D:
        ls = ls + MultiSeries.monomial(ctx, {"s": q ** k}, Fraction(1, p ** k))
        k += 1
    lt = ls.evaluate({"s": MultiSeries.variable(ctx, "t")})
    F = ls.comp_inverse("s").evaluate({"s": ls + lt})
    rational = FormalGroupLaw(ctx=ctx, series=F, p=p, tag=f"Honda height {h} rational")
    if target is None:
        target = ctx.with_domain(CHARP)
    series = rational.series.convert(target)
    return FormalGroupLaw(
        ctx=target, series=series, p=p, tag=f"Honda height {h}", svar="s", tvar="t"
    )


# -- twisting by a graded unit --------------------------------------------------


def twist_by_unit(
    law: FormalGroupLaw,
    images: dict[str, tuple[MultiSeries, int]],
    target: PrecisionContext,
    unit_degree: int = 2,
    unit_power: int = 1,
    tag: str | None = None,
) -> FormalGroupLaw:
    """F(s,t) = w^e G(w^-e s, w^-e t) with coefficient variables re-expressed.

    ``images`` sends each coefficient variable of the law to (series in the
    target, exponent of the twisting unit w).  The w-exponents of the
    twisted law must cancel identically (checked); that is the degree-0
    homogeneity statement.  ``unit_power`` is e above (use -1 to untwist).
    """
    span = 4 * (law.ctx.var(law.svar).order + 1)
    for _, wexp in images.values():
        span += abs(wexp)
    ctx_w = target.add_variable(
        Variable("__w__", order=4 * span + 8, degree=unit_degree, tail=4 * span + 8)
    )
    w_e = MultiSeries.monomial(ctx_w, {"__w__": unit_power})
    w_back = MultiSeries.monomial(ctx_w, {"__w__": -unit_power})
    full_images = {
        k: v.convert(ctx_w) * MultiSeries.monomial(ctx_w, {"__w__": wexp})
        for k, (v, wexp) in images.items()
    }
    full_images[law.svar] = w_back * MultiSeries.variable(ctx_w, law.svar)
    full_images[law.tvar] = w_back * MultiSeries.variable(ctx_w, law.tvar)
    twisted = w_e * law.series.evaluate(full_images, ctx_w)
    lo, hi = twisted.var_range("__w__")
    if (lo, hi) != (0, 0):
        raise HomogeneityFailure(
            f"unit exponents do not cancel (range {lo}..{hi}); check the variable images"
        )
    series = twisted.convert(target)
    return FormalGroupLaw(
        ctx=target,
        series=series,
        p=law.p,
        tag=tag or f"{law.tag} twisted",
        svar=law.svar,
        tvar=law.tvar,
    )


# -- p-series verification and p-typicality --------------------------------------


def verify_p_series(
    law: FormalGroupLaw, gens: PTypicalGenerators, x_ctx: PrecisionContext, xvar: str = "x"
) -> MultiSeries:
    """[p]_F(x) minus the formal sum p x +_F v_1 x^p +_F ... +_F v_n x^(p^n).

    Zero at precision iff the Araki property holds; the i = 0 summand is
    the p x term (v_0 = p).
    """
    x = MultiSeries.variable(x_ctx, xvar)
    lhs = p_series(law, x)
    args = [x * law.p]
    for i in range(1, gens.n + 1):
        e = law.p ** i
        if e < x_ctx.var(xvar).order:
            args.append(
                MultiSeries.monomial(x_ctx, {f"v{i}": 1}) * MultiSeries.monomial(x_ctx, {xvar: e})
            )
    rhs = formal_sum(law, args)
    return lhs - rhs


def fgl_log(law: FormalGroupLaw) -> MultiSeries:
    """Logarithm of a rational law: integral of ds / (dF/dt)(s, 0)."""
    if law.ctx.domain != RATIONAL:
        raise TateFglError("logarithms need rational coefficients")
    ctx = law.ctx
    ft = law.series.derivative(law.tvar)
    ft0 = ft.substitute(law.tvar, MultiSeries.zero(ctx))
    if ctx.normalize_coeff(ft0.constant_coeff()) != Fraction(1):
        raise LogDivergence("dF/dt at the origin is not 1")
    return ft0.mult_inverse().integrate(law.svar)


def is_p_typical(law: FormalGroupLaw) -> bool:
    """True iff the logarithm has only p-power exponents at precision."""
    lg = fgl_log(law)
    i = law.ctx.index(law.svar)
    p = law.p
    for e, _ in lg.terms():
        k = e[i]
        while k > 1 and k % p == 0:
            k //= p
        if k != 1:
            return False
    return True
