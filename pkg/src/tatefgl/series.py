"""Exact truncated multivariate power/Laurent series.

Terms are a dict from exponent vectors (one int per context variable,
negative only inside a Laurent window) to nonzero coefficients.  All
operations are pure: they return new series and never mutate.  Every
result is filtered through the context truncation rules, so structural
equality of term dicts is semantic equality at precision.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from operator import add
from typing import Iterable, Mapping

from .context import CHARP, RATIONAL, ZMOD, PrecisionContext
from .errors import (
    ContextMismatch,
    IntegralityFailure,
    LaurentTailOverflow,
    NonConvergence,
    NonInvertibleSubstitutionIntoLaurent,
    NonUnitLinearCoefficient,
    NonzeroConstantTerm,
    NotAQthPower,
    NotAUnit,
    SubstitutionDiverges,
    TateFglError,
    WrongCharacteristic,
)

_DROP = object()


def _grlex_key(item):
    exp = item[0]
    return (sum(exp), exp)


class MultiSeries:
    __slots__ = ("ctx", "_terms")

    def __init__(self, ctx: PrecisionContext, terms: Mapping[tuple, object] | None = None):
        self.ctx = ctx
        cleaned: dict = {}
        if terms:
            for exp, c in terms.items():
                c = ctx.normalize_coeff(c)
                if not c:
                    continue
                kept = _admit(ctx, tuple(exp), c)
                if kept is not _DROP:
                    cleaned[tuple(exp)] = c
        self._terms = cleaned

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(ctx: PrecisionContext) -> "MultiSeries":
        return MultiSeries(ctx)

    @staticmethod
    def const(ctx: PrecisionContext, c) -> "MultiSeries":
        return MultiSeries(ctx, {(0,) * len(ctx.variables): c})

    @staticmethod
    def one(ctx: PrecisionContext) -> "MultiSeries":
        return MultiSeries.const(ctx, 1)

    @staticmethod
    def variable(ctx: PrecisionContext, name: str) -> "MultiSeries":
        return MultiSeries.monomial(ctx, {name: 1})

    @staticmethod
    def monomial(ctx: PrecisionContext, exps: Mapping[str, int], coeff=1) -> "MultiSeries":
        e = [0] * len(ctx.variables)
        for name, k in exps.items():
            e[ctx.index(name)] = k
        return MultiSeries(ctx, {tuple(e): coeff})

    # -- inspection --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self._terms

    def terms(self) -> list[tuple[tuple, object]]:
        """Terms in graded-lexicographic order (deterministic)."""
        return sorted(self._terms.items(), key=_grlex_key)

    def coeff(self, exps: Mapping[str, int]):
        e = [0] * len(self.ctx.variables)
        for name, k in exps.items():
            e[self.ctx.index(name)] = k
        return self._terms.get(tuple(e), 0)

    def constant_coeff(self):
        return self._terms.get((0,) * len(self.ctx.variables), 0)

    def var_range(self, name: str) -> tuple[int, int]:
        """(min, max) exponent of ``name`` over stored terms; (0, 0) if absent."""
        i = self.ctx.index(name)
        exps = [e[i] for e in self._terms]
        if not exps:
            return (0, 0)
        return (min(exps), max(exps))

    def coeff_of(self, name: str, k: int) -> "MultiSeries":
        """Series of terms with ``name``-exponent exactly k, that slot zeroed."""
        i = self.ctx.index(name)
        out = {}
        for e, c in self._terms.items():
            if e[i] == k:
                out[e[:i] + (0,) + e[i + 1 :]] = c
        return MultiSeries(self.ctx, out)

    def degrees(self) -> set[int]:
        degs = tuple(v.degree for v in self.ctx.variables)
        return {sum(a * d for a, d in zip(e, degs)) for e in self._terms}

    def is_homogeneous(self, degree: int) -> bool:
        d = self.degrees()
        return d == set() or d == {degree}

    def max_total_degree(self, names: Iterable[str]) -> int:
        idx = [self.ctx.index(n) for n in names]
        return max((sum(e[i] for i in idx) for e in self._terms), default=0)

    # -- ring structure ----------------------------------------------------

    def _require_ctx(self, other: "MultiSeries") -> None:
        if self.ctx != other.ctx:
            raise ContextMismatch("operands built over different precision contexts")

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiSeries):
            return NotImplemented
        return self.ctx == other.ctx and self._terms == other._terms

    def __hash__(self):
        return hash((self.ctx, tuple(self.terms())))

    def __add__(self, other) -> "MultiSeries":
        if isinstance(other, (int, Fraction)):
            other = MultiSeries.const(self.ctx, other)
        self._require_ctx(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0) + c
        return _from_admitted(self.ctx, out)

    __radd__ = __add__

    def __neg__(self) -> "MultiSeries":
        return MultiSeries(self.ctx, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "MultiSeries":
        if isinstance(other, (int, Fraction)):
            other = MultiSeries.const(self.ctx, other)
        return self + (-other)

    def __rsub__(self, other) -> "MultiSeries":
        return (-self) + other

    def __mul__(self, other) -> "MultiSeries":
        if isinstance(other, (int, Fraction)):
            c = self.ctx.normalize_coeff(other)
            return MultiSeries(self.ctx, {e: v * c for e, v in self._terms.items()})
        self._require_ctx(other)
        ctx = self.ctx
        orders, tails, strict, caps = _rules(ctx)
        out: dict = {}
        get = out.get
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(map(add, e1, e2))
                ok = True
                for i, k in enumerate(e):
                    if k >= orders[i]:
                        ok = False
                        break
                    if k < -tails[i]:
                        if strict[i]:
                            raise LaurentTailOverflow(
                                f"exponent {k} of {ctx.variables[i].name} below "
                                f"tail bound {-tails[i]}"
                            )
                        ok = False
                        break
                if not ok:
                    continue
                for idx_w, cap in caps:
                    total = 0
                    for i, w in idx_w:
                        total += w * e[i]
                    if total > cap:
                        ok = False
                        break
                if not ok:
                    continue
                out[e] = get(e, 0) + c1 * c2
        return _from_admitted(ctx, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "MultiSeries":
        if n < 0:
            raise TateFglError("negative series power; use mult_inverse")
        result = MultiSeries.one(self.ctx)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    # -- windows and reshaping ----------------------------------------------

    def shift(self, name: str, delta: int) -> "MultiSeries":
        """Multiply by name**delta (delta may be negative on a Laurent variable)."""
        i = self.ctx.index(name)
        out = {}
        for e, c in self._terms.items():
            out[e[:i] + (e[i] + delta,) + e[i + 1 :]] = c
        return MultiSeries(self.ctx, out)

    def convert(self, target: PrecisionContext, clip: bool = False) -> "MultiSeries":
        """Reinterpret in ``target``: variables matched by name.

        Variables absent from ``target`` must not occur.  Coefficients are
        re-normalized into the target domain (this is where rational-to-Z/p^N
        reduction can raise IntegralityFailure).  With ``clip`` set, terms
        outside the target windows are dropped instead of raising.
        """
        if self.ctx.domain == ZMOD and target.modulus and target.domain != RATIONAL:
            if target.modulus > self.ctx.modulus:
                raise TateFglError("cannot convert to a larger coefficient modulus")
        if self.ctx.domain == CHARP and target.domain == ZMOD and target.padic_order > 1:
            raise TateFglError("cannot convert char-p coefficients to Z/p^N with N > 1")
        src_names = self.ctx.names
        slot = {}
        for i, n in enumerate(src_names):
            slot[i] = target.index(n) if n in target.names else None
        width = len(target.variables)
        out: dict = {}
        for e, c in self._terms.items():
            ne = [0] * width
            for i, k in enumerate(e):
                if k == 0:
                    continue
                j = slot[i]
                if j is None:
                    raise TateFglError(
                        f"variable {src_names[i]} absent from target context"
                    )
                ne[j] = k
            ne = tuple(ne)
            c2 = target.normalize_coeff(c)
            if not c2:
                continue
            if clip and _admit(target, ne, c2, soft=True) is _DROP:
                continue
            out[ne] = out.get(ne, 0) + c2
        return MultiSeries(target, out)

    def divide_by_p_power(self, j: int) -> "MultiSeries":
        """Exact division by p**j over Z/p^N; result lives mod p^(N-j)."""
        ctx = self.ctx
        if ctx.domain != ZMOD:
            raise TateFglError("divide_by_p_power needs a Z/p^N context")
        if j >= ctx.padic_order:
            raise TateFglError("dividing away the whole modulus")
        q = ctx.p ** j
        out = {}
        for e, c in self._terms.items():
            if c % q:
                raise IntegralityFailure(f"coefficient {c} not divisible by {q}")
            out[e] = c // q
        return MultiSeries(ctx.with_domain(ZMOD, ctx.padic_order - j), out)

    # -- substitution ------------------------------------------------------

    def evaluate(
        self,
        images: Mapping[str, "MultiSeries"],
        target: PrecisionContext | None = None,
    ) -> "MultiSeries":
        """Apply the ring map sending each named variable to its image.

        Unmapped variables go to the variable of the same name in the
        target context.  Negative exponents require the image to be an
        invertible monomial.
        """
        if target is None:
            target = self.ctx
        for g in images.values():
            if g.ctx != target:
                raise ContextMismatch("image series must live in the target context")
        pow_cache: dict[tuple[str, int], MultiSeries] = {}

        def image_power(name: str, k: int) -> MultiSeries:
            got = pow_cache.get((name, k))
            if got is not None:
                return got
            if name in images:
                g = images[name]
                if k >= 0:
                    val = g ** k
                else:
                    val = _monomial_inverse(g) ** (-k)
            else:
                val = MultiSeries.monomial(target, {name: k})
            pow_cache[(name, k)] = val
            return val

        total = MultiSeries.zero(target)
        names = self.ctx.names
        for e, c in self.terms():
            acc = MultiSeries.const(target, c)
            for i, k in enumerate(e):
                if k == 0:
                    continue
                acc = acc * image_power(names[i], k)
                if acc.is_zero():
                    break
            total = total + acc
        return total

    def substitute(self, name: str, g: "MultiSeries") -> "MultiSeries":
        """Replace ``name`` by ``g`` (same context), re-truncating."""
        self._require_ctx(g)
        lo, hi = self.var_range(name)
        if lo < 0 and not _is_unit_monomial(g):
            raise NonInvertibleSubstitutionIntoLaurent(
                f"negative powers of {name} need a unit-monomial image"
            )
        if hi > 0 and g.constant_coeff():
            raise SubstitutionDiverges(
                f"image of {name} has a constant term; truncated substitution diverges"
            )
        return self.evaluate({name: g})

    def compose(self, g: "MultiSeries", name: str = "t") -> "MultiSeries":
        """f(g) for univariate-in-``name`` series; g must vanish at 0."""
        self._require_ctx(g)
        i = g.ctx.index(name)
        if any(e[i] < 1 for e in g._terms):
            raise NonzeroConstantTerm(f"composition argument has terms of {name}-order < 1")
        return self.evaluate({name: g})

    # -- multiplicative and compositional inverses ---------------------------

    def mult_inverse(self) -> "MultiSeries":
        """Inverse of a unit: the constant term must be invertible and the
        rest topologically nilpotent at this precision.  Newton iteration
        y -> y (2 - f y), squaring the error ideal each step."""
        ctx = self.ctx
        inv0 = _invert_coeff(ctx, self.constant_coeff())
        one = MultiSeries.one(ctx)
        y = MultiSeries.const(ctx, inv0)
        cap = _nilpotence_cap(ctx)
        steps = 1
        while (1 << steps) <= cap:
            steps += 1
        for _ in range(steps + 1):
            err = one - self * y
            if err.is_zero():
                return y
            y = y + y * err
        if (self * y - one).is_zero():
            return y
        raise NotAUnit("series is not invertible at this precision")

    def derivative(self, name: str) -> "MultiSeries":
        i = self.ctx.index(name)
        out: dict = {}
        for e, c in self._terms.items():
            k = e[i]
            if k == 0:
                continue
            ne = e[:i] + (k - 1,) + e[i + 1 :]
            out[ne] = out.get(ne, 0) + c * k
        return MultiSeries(self.ctx, out)

    def integrate(self, name: str) -> "MultiSeries":
        if self.ctx.domain != RATIONAL:
            raise TateFglError("integration needs rational coefficients")
        i = self.ctx.index(name)
        out = {}
        for e, c in self._terms.items():
            k = e[i]
            out[e[:i] + (k + 1,) + e[i + 1 :]] = Fraction(c) / (k + 1)
        return MultiSeries(self.ctx, out)

    def comp_inverse(self, name: str = "t") -> "MultiSeries":
        """Compositional inverse; Newton iteration on a doubling truncation
        window, so most steps run at small caps."""
        ctx = self.ctx
        i = ctx.index(name)
        if any(e[i] < 1 for e in self._terms):
            raise NonUnitLinearCoefficient(f"series has terms of {name}-order < 1")
        lin = self.coeff_of(name, 1)
        try:
            lin_inv = lin.mult_inverse()
        except NotAUnit as exc:
            raise NonUnitLinearCoefficient(str(exc)) from exc
        full = ctx.var(name).order
        cap = min(4, full)
        sub = ctx.with_var_order(name, cap)
        g = lin_inv.convert(sub, clip=True) * MultiSeries.variable(sub, name)

        def newton(f, g, t):
            err = f.compose(g, name) - t
            if err.is_zero():
                return g, True
            g = g - err * f.derivative(name).compose(g, name).mult_inverse()
            return g, False

        while True:
            f_sub = self.convert(sub, clip=True)
            t_sub = MultiSeries.variable(sub, name)
            g, _ = newton(f_sub, g, t_sub)
            if cap >= full:
                for _ in range(40):
                    g, done = newton(f_sub, g, t_sub)
                    if done:
                        return g.convert(ctx)
                raise NonConvergence("compositional inverse failed to converge")
            cap = min(cap * 2, full)
            sub = ctx.with_var_order(name, cap)
            g = g.convert(sub)

    # -- characteristic-p operations -----------------------------------------

    def qth_root(self, q: int) -> "MultiSeries":
        """Unique q-th root when every exponent is divisible by q (char p)."""
        ctx = self.ctx
        if ctx.domain != CHARP:
            raise WrongCharacteristic("q-th roots live in characteristic p")
        _check_p_power(ctx.p, q)
        out = {}
        for e, c in self._terms.items():
            if any(k % q for k in e):
                raise NotAQthPower(f"exponent vector {e} not divisible by {q}")
            out[tuple(k // q for k in e)] = c
        return MultiSeries(ctx, out)

    def frobenius_twist(self, q: int, name: str = "t") -> "MultiSeries":
        """Coefficientwise q-power Frobenius: every exponent except the
        series variable is scaled by q; satisfies f^sigma(t^q) = f(t)^q."""
        ctx = self.ctx
        if ctx.domain != CHARP:
            raise WrongCharacteristic("Frobenius twist lives in characteristic p")
        _check_p_power(ctx.p, q)
        i = ctx.index(name)
        out: dict = {}
        for e, c in self._terms.items():
            ne = tuple(k if j == i else k * q for j, k in enumerate(e))
            c2 = pow(c, q, ctx.p)
            if _admit(ctx, ne, c2, soft=False) is _DROP:
                continue
            out[ne] = out.get(ne, 0) + c2
        return MultiSeries(ctx, out)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "context": self.ctx.to_dict(),
            "terms": [
                {"exp": list(e), "coeff": str(c)} for e, c in self.terms()
            ],
        }

    @staticmethod
    def from_dict(d: dict) -> "MultiSeries":
        ctx = PrecisionContext.from_dict(d["context"])
        terms = {}
        for t in d["terms"]:
            s = t["coeff"]
            c = Fraction(s) if "/" in s else int(s)
            terms[tuple(t["exp"])] = c
        return MultiSeries(ctx, terms)

    def __repr__(self) -> str:
        names = self.ctx.names
        parts = []
        for e, c in self.terms()[:10]:
            mono = "*".join(
                f"{n}^{k}" if k != 1 else n for n, k in zip(names, e) if k
            )
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        body = " + ".join(parts) if parts else "0"
        if len(self._terms) > 10:
            body += f" + ... ({len(self._terms)} terms)"
        return f"<MultiSeries {body}>"


# -- term admission ----------------------------------------------------------


@lru_cache(maxsize=256)
def _rules(ctx: PrecisionContext):
    """Per-context admission data compiled to plain tuples for hot loops."""
    orders = tuple(v.order for v in ctx.variables)
    tails = tuple(v.tail for v in ctx.variables)
    strict = tuple(v.tail_mode == "strict" for v in ctx.variables)
    caps = tuple(
        (tuple((ctx.index(n), w) for n, w in zip(subset, weights)), cap)
        for subset, weights, cap in ctx.joint_caps
    )
    return orders, tails, strict, caps


def _from_admitted(ctx: PrecisionContext, raw: dict) -> "MultiSeries":
    """Finalize accumulated terms whose exponents were already admitted:
    reduce coefficients, prune zeros, re-apply the ideal-adic cap (sums can
    gain p-valuation)."""
    m = ctx.modulus
    ideal = ctx.ideal
    out = {}
    for e, c in raw.items():
        if m is not None:
            c = c % m
        if not c:
            continue
        if ideal is not None:
            weight = ctx.pval(c)
            for nm in ideal.variables:
                weight += max(e[ctx.index(nm)], 0)
            if weight >= ideal.order:
                continue
        out[e] = c
    s = MultiSeries.__new__(MultiSeries)
    s.ctx = ctx
    s._terms = out
    return s


def _admit(ctx: PrecisionContext, exp: tuple, coeff, soft: bool = False):
    """Return _DROP when the term falls outside the context windows.

    Raises LaurentTailOverflow for strict Laurent violations unless
    ``soft`` (used when clipping a series into a smaller window).
    """
    for k, v in zip(exp, ctx.variables):
        if k >= v.order:
            return _DROP
        if k < -v.tail:
            if soft or v.tail_mode == "truncate":
                return _DROP
            raise LaurentTailOverflow(
                f"exponent {k} of {v.name} below tail bound {-v.tail}"
            )
    for subset, weights, cap in ctx.joint_caps:
        total = 0
        for n, w in zip(subset, weights):
            total += w * exp[ctx.index(n)]
        if total > cap:
            return _DROP
    if ctx.ideal is not None:
        weight = ctx.pval(coeff)
        for n in ctx.ideal.variables:
            weight += max(exp[ctx.index(n)], 0)
            if weight >= ctx.ideal.order:
                return _DROP
        if weight >= ctx.ideal.order:
            return _DROP
    return coeff


def _invert_coeff(ctx: PrecisionContext, c):
    if ctx.domain == RATIONAL:
        if not c:
            raise NotAUnit("zero constant term")
        return Fraction(1) / c
    m = ctx.modulus
    c = c % m
    if c == 0 or c % ctx.p == 0:
        raise NotAUnit(f"constant term {c} is not a unit mod {m}")
    return pow(c, -1, m)


def _is_unit_monomial(g: MultiSeries) -> bool:
    if len(g._terms) != 1:
        return False
    ((_, c),) = g._terms.items()
    try:
        _invert_coeff(g.ctx, c)
    except NotAUnit:
        return False
    return True


def _monomial_inverse(g: MultiSeries) -> MultiSeries:
    if not _is_unit_monomial(g):
        raise NonInvertibleSubstitutionIntoLaurent(
            "image must be a unit monomial to invert"
        )
    ((e, c),) = g._terms.items()
    return MultiSeries(g.ctx, {tuple(-k for k in e): _invert_coeff(g.ctx, c)})


def _nilpotence_cap(ctx: PrecisionContext) -> int:
    cap = 8
    for v in ctx.variables:
        cap += v.order + v.tail
    if ctx.domain == ZMOD:
        cap += ctx.padic_order
    if ctx.ideal is not None:
        cap += ctx.ideal.order
    return cap


def _check_p_power(p: int, q: int) -> None:
    if q < 1:
        raise TateFglError("q must be a positive power of p")
    r = q
    while r > 1:
        if r % p:
            raise TateFglError(f"{q} is not a power of {p}")
        r //= p
