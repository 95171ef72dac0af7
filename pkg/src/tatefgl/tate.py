"""Normal forms for pi_*(tBP<n>) = BP<n>_*((x)) / ([p](x)).

The quotient relation [p](x) = 0 is rewritten through the degree-0
elements w_i = v_i x^(p^i - 1): iterating w_n = -(p + w_1 + ... + w_{n-1}
+ corrections) produces the power series W_n eliminating v_n, the map
v_i -> v_i, x -> x, v_n -> x^-(p^n - 1) W_n(w_1..w_{n-1}) is the normal
form, and p itself acquires an x-series expression.  Everything runs
over Z/p^N inside explicit Laurent windows.
"""

from __future__ import annotations

from dataclasses import dataclass

from .context import RATIONAL, ZMOD, Ideal, PrecisionContext, Variable
from .errors import LaurentTailOverflow, NonConvergence, NotAUnit, TateFglError
from .fgl import araki_log, log_on_variable
from .series import MultiSeries


@dataclass(frozen=True)
class WnElimination:
    """W_n with w_n = W_n(w_1..w_{n-1}) solving [p](x)/x = 0 at precision."""

    p: int
    n: int
    wn: MultiSeries
    residual: MultiSeries
    iterations: int

    def linear_defect(self) -> MultiSeries:
        """W_n + (p + w_1 + ... + w_{n-1}); decomposable iff the elimination
        matches eq. the expected congruence mod (p, w)^2."""
        ctx = self.wn.ctx
        lin = MultiSeries.const(ctx, self.p)
        for j in range(1, self.n):
            lin = lin + MultiSeries.variable(ctx, f"w{j}")
        return self.wn + lin

    def linear_part_is_exact(self) -> bool:
        defect = self.linear_defect()
        ctx = defect.ctx
        names = [f"w{j}" for j in range(1, self.n)]
        for e, c in defect.terms():
            weight = ctx.pval(c) + sum(e[ctx.index(nm)] for nm in names)
            if weight < 2:
                return False
        return True


def _solve_log(
    p: int,
    lk_img: list[MultiSeries],
    total: MultiSeries,
    slice_names: tuple[str, ...],
    max_deg: int,
    ctx: PrecisionContext,
) -> MultiSeries:
    """Solve S + sum_{k>=1} lk_img[k] S^(p^k) = total for S, slice by slice.

    Every coefficient image lk_img[k] (k >= 1) must have positive total
    degree in ``slice_names``; then the degree-d slice of the equation
    involves only slices < d of S, and one pass per degree suffices.
    """
    S = MultiSeries.zero(ctx)
    for d in range(0, max_deg + 1):
        ctx_d = ctx.with_joint_cap(slice_names, d)
        rhs = total.convert(ctx_d, clip=True)
        cur = S.convert(ctx_d, clip=True)
        for k in range(1, len(lk_img)):
            cur = cur ** p
            if cur.is_zero():
                break
            if not lk_img[k].is_zero():
                rhs = rhs - lk_img[k].convert(ctx_d, clip=True) * cur
        S = rhs.convert(ctx)
    return S


def wn_elimination(p: int, n: int, i0: int, w_orders: tuple[int, ...]) -> WnElimination:
    """Iterate the rewrite of w_n out of [p](x)/x = 0.

    Result lives in Z/(p^i0)[w_1..w_{n-1}] / (w_1^i1, ..., w_{n-1}^i_{n-1});
    iteration count is capped at i0 * sum(w_orders) and NonConvergence is
    raised when the cap is hit (a precision misconfiguration).

    The relation is assembled through the logarithm: the formal sum
    p x +_F w_1 x +_F ... +_F w_n x equals l^{-1}(l(px) + sum l(w_j x)),
    computed in the degree-0 w-coordinates where every term is x-linear.
    """
    if n < 1:
        raise TateFglError("n must be >= 1")
    if len(w_orders) != n - 1:
        raise TateFglError("need one w-order per variable w_1..w_{n-1}")
    K = (i0 - 1) + sum(o - 1 for o in w_orders) + 2
    ws = tuple(
        Variable(f"w{j}", order=w_orders[j - 1], degree=0) for j in range(1, n)
    )
    wn_names = tuple(f"w{j}" for j in range(1, n + 1))
    ctx_wn = PrecisionContext(
        p=p,
        domain=ZMOD,
        padic_order=i0,
        variables=ws + (Variable(f"w{n}", order=K + 1, degree=0),),
        ideal=Ideal(wn_names, K),
    )
    x_cap = K + 3
    ctx_rel = ctx_wn.add_variable(
        Variable("x", order=x_cap + 1, degree=-2, tail=x_cap)
    )
    from dataclasses import replace

    ctx_q = replace(ctx_rel.with_domain(RATIONAL), ideal=None)

    cutoff = 0
    while p ** (cutoff + 1) <= x_cap:
        cutoff += 1
    log = araki_log(p, n, cutoff, weight_bound=x_cap)
    vimg = {
        f"v{m}": MultiSeries.monomial(ctx_q, {f"w{m}": 1, "x": 1 - p ** m})
        for m in range(1, n + 1)
    }
    lk_img = [c.evaluate(vimg, ctx_q) for c in log.coeffs]
    xq = MultiSeries.variable(ctx_q, "x")
    lxw = MultiSeries.zero(ctx_q)
    for k, li in enumerate(lk_img):
        lxw = lxw + li * MultiSeries.monomial(ctx_q, {"x": p ** k})

    def log_at(arg: MultiSeries) -> MultiSeries:
        out = MultiSeries.zero(ctx_q)
        for k, li in enumerate(lk_img):
            out = out + li * (arg ** (p ** k))
        return out

    total = log_at(xq * p)
    for j in range(1, n + 1):
        total = total + log_at(MultiSeries.monomial(ctx_q, {f"w{j}": 1, "x": 1}))

    # solve l(S) = total: every l_k image carries positive w-degree, so the
    # degree-sliced solver needs one pass per total w-degree
    partial = _solve_log(p, lk_img, total, wn_names, K + 1, ctx_q)
    if partial.var_range("x") not in ((1, 1), (0, 0)):
        raise TateFglError("relation is not purely linear in x; grading bug")
    relation = partial.shift("x", -1).convert(ctx_wn)

    wn_var = f"w{n}"
    step = MultiSeries.variable(ctx_wn, wn_var) - relation
    W = MultiSeries.zero(ctx_wn)
    cap = max(i0 * max(1, sum(w_orders)), K + 4)
    it = 0
    while True:
        it += 1
        if it > cap:
            raise NonConvergence(f"w_{n} elimination exceeded {cap} iterations")
        W_next = step.evaluate({wn_var: W})
        if W_next == W:
            break
        W = W_next
    residual = relation.evaluate({wn_var: W})
    ctx_w = ctx_wn.drop_variable(wn_var)
    out = WnElimination(
        p=p, n=n, wn=W.convert(ctx_w), residual=residual, iterations=it
    )
    return out


# -- the full quotient model -----------------------------------------------------


@dataclass(frozen=True)
class TateRing:
    """Computable model of BP<n>_*((x))/([p](x)) at a fixed precision.

    x-exponents of reported values live in the user window [-x_neg,
    x_degree]; larger internal windows absorb the x^-(p^n - 1) shifts of
    the v_n-elimination.
    """

    p: int
    n: int
    padic_order: int
    x_neg: int
    x_degree: int
    ideal_order: int | None
    ctx_ambient: PrecisionContext
    ctx_target: PrecisionContext
    ctx_report: PrecisionContext
    elimination: WnElimination
    vn_image: MultiSeries
    relation: MultiSeries
    p_expr: MultiSeries

    @staticmethod
    def build(
        p: int,
        n: int,
        padic_order: int,
        x_neg: int,
        x_degree: int,
        ideal_order: int | None = None,
    ) -> "TateRing":
        if n < 1:
            raise TateFglError("n must be >= 1")
        shift = p ** n - 1
        low_cap = x_degree + 2
        # v_n^k-terms forward into the x-window for EVERY k (the x^(p^n k)
        # and x^(-shift k) cancel); they die only p-adically since W_n lies
        # in (p, w_1, ..): a surviving image needs pval >= k - low_cap/(p-1)
        k_bound = padic_order + (low_cap // (p - 1) if n >= 2 else 0) + 1
        x_hi = low_cap + shift * k_bound + 4
        x_tail = x_neg + shift * k_bound + 2

        low = tuple(
            Variable(f"v{i}", order=low_cap + 2, degree=2 * (p ** i - 1))
            for i in range(1, n)
        )
        vn = Variable(f"v{n}", order=k_bound + 1, degree=2 * shift)
        xv = Variable("x", order=x_hi + 1, degree=-2, tail=x_tail)
        caps = ()
        if n > 1:
            caps = (
                (
                    tuple(f"v{i}" for i in range(1, n)),
                    tuple(p ** i - 1 for i in range(1, n)),
                    low_cap,
                ),
            )
        # I_{n-1} = (p, v_1, .., v_{n-2}); for n = 1 the ideal is zero and the
        # requested adic order is vacuous (p-completion is the modulus itself)
        ideal = None
        if ideal_order is not None and n >= 2:
            ideal = Ideal(tuple(f"v{i}" for i in range(1, n - 1)), ideal_order)
        ctx_ambient = PrecisionContext(
            p=p,
            domain=ZMOD,
            padic_order=padic_order,
            variables=low + (vn, xv),
            joint_caps=caps,
            ideal=ideal,
        )
        ctx_target = ctx_ambient.drop_variable(f"v{n}")
        report_vars = tuple(
            Variable(v.name, order=x_degree + 1, degree=v.degree)
            if v.name != "x"
            else Variable("x", order=x_degree + 1, degree=-2, tail=x_neg)
            for v in ctx_target.variables
        )
        ctx_report = PrecisionContext(
            p=p,
            domain=ZMOD,
            padic_order=padic_order,
            variables=report_vars,
            joint_caps=ctx_target.joint_caps,
            ideal=ideal,
        )

        w_orders = tuple(low_cap // (p ** j - 1) + 2 for j in range(1, n))
        elim = wn_elimination(p, n, padic_order, w_orders)

        w_images = {
            f"w{j}": MultiSeries.monomial(ctx_target, {f"v{j}": 1, "x": p ** j - 1})
            for j in range(1, n)
        }
        vn_image = elim.wn.evaluate(w_images, ctx_target).shift("x", -shift)

        # [p](x) = l^{-1}(p l(x)) and p x = [-1](v_1 x^p +_F ... +_F v_n x^{p^n})
        # = l^{-1}(-sum_i l(v_i x^{p^i})); the inverse log is applied by the
        # degree-sliced solver (every l_k has positive v-degree)
        from dataclasses import replace

        ctx_q = replace(ctx_ambient.with_domain(RATIONAL), ideal=None)
        cutoff = 0
        while p ** (cutoff + 1) <= x_hi:
            cutoff += 1
        log = araki_log(p, n, cutoff, weight_bound=max(x_hi, p ** cutoff))
        lx = log_on_variable(log, ctx_q, "x")
        lk_img = [c.convert(ctx_q, clip=True) for c in log.coeffs]
        vnames = tuple(f"v{i}" for i in range(1, n + 1))
        v_deg_cap = low_cap + k_bound + 2
        relation = _solve_log(p, lk_img, lx * p, vnames, v_deg_cap, ctx_q)
        relation = relation.shift("x", -1).convert(ctx_ambient)
        logsum = MultiSeries.zero(ctx_q)
        for i in range(1, n + 1):
            arg = MultiSeries.monomial(ctx_q, {f"v{i}": 1, "x": p ** i})
            logsum = logsum + lx.evaluate({"x": arg})
        p_expr = _solve_log(p, lk_img, -logsum, vnames, v_deg_cap, ctx_q)
        p_expr = p_expr.shift("x", -1).convert(ctx_ambient)

        return TateRing(
            p=p,
            n=n,
            padic_order=padic_order,
            x_neg=x_neg,
            x_degree=x_degree,
            ideal_order=ideal_order,
            ctx_ambient=ctx_ambient,
            ctx_target=ctx_target,
            ctx_report=ctx_report,
            elimination=elim,
            vn_image=vn_image,
            relation=relation,
            p_expr=p_expr,
        )

    # -- the forward normal-form map ------------------------------------------

    def forward(self, f: MultiSeries) -> MultiSeries:
        """v_i -> v_i (i < n), x -> x, v_n -> x^-(p^n-1) W_n; clipped to the
        reporting window."""
        if f.ctx != self.ctx_ambient:
            raise TateFglError("forward_map arguments live in the ambient context")
        try:
            image = f.evaluate({f"v{self.n}": self.vn_image}, self.ctx_target)
        except LaurentTailOverflow as exc:
            from .errors import PrecisionExhausted

            raise PrecisionExhausted(str(exc)) from exc
        return image.convert(self.ctx_report, clip=True)

    def include(self, g: MultiSeries) -> MultiSeries:
        """The inverse direction: BP<n-1>_*((x)) included into the quotient."""
        return g.convert(self.ctx_ambient, clip=False)

    def roundtrip_report(self) -> dict[str, MultiSeries]:
        """Residuals of the Prop 2.4 / 2.5 round trip on every generator,
        of forwarding the defining relation, and of the expression of p."""
        out: dict[str, MultiSeries] = {}
        amb, rep = self.ctx_ambient, self.ctx_report
        out["relation"] = self.forward(self.relation)
        out["p_expansion"] = MultiSeries.const(rep, self.p) - self.forward(self.p_expr)
        one = MultiSeries.one(amb)
        out["unit"] = self.forward(one) - MultiSeries.one(rep)
        for i in range(1, self.n):
            g = MultiSeries.variable(amb, f"v{i}")
            out[f"v{i}"] = self.forward(g) - MultiSeries.variable(rep, f"v{i}")
        gx = MultiSeries.variable(amb, "x")
        out["x"] = self.forward(gx) - MultiSeries.variable(rep, "x")
        vn = MultiSeries.variable(amb, f"v{self.n}")
        out[f"v{self.n}"] = self.forward(vn) - self.vn_image.convert(rep, clip=True)
        return out


def p_as_x_series(
    p: int, n: int, padic_order: int, x_neg: int, x_degree: int
) -> tuple[MultiSeries, MultiSeries]:
    """The series s with p = s(x, v_1..v_n) in the quotient, plus the
    residual of p - s under the normal-form map (zero at precision)."""
    ring = TateRing.build(p, n, padic_order, x_neg, x_degree)
    residual = MultiSeries.const(ring.ctx_report, p) - ring.forward(ring.p_expr)
    return ring.p_expr, residual


# -- the section-2 non-unit discussion -------------------------------------------


@dataclass(frozen=True)
class UnitInverseReport:
    p: int
    n: int
    inverse: MultiSeries
    tail: tuple[int, ...]
    product_residual: MultiSeries

    def tail_congruences(self) -> list[bool]:
        """a_i = (-1)^i p^i mod p^(i+1), read off the paper's normalized
        presentation -(w_n / w_{n-1})^-1 = 1 + (tail)."""
        out = []
        for i, a in enumerate(self.tail, start=1):
            out.append((a - (-1) ** i * self.p ** i) % self.p ** (i + 1) == 0)
        return out


def completed_unit_inverse(
    p: int,
    n: int,
    padic_order: int,
    tail_len: int,
    completed: bool = True,
) -> UnitInverseReport:
    """Invert w_n / w_{n-1} in the I_{n-1}-adically completed model.

    Works modulo (v_1, .., v_{n-2}); the negative-tail coefficients a_i of
    the normalized inverse satisfy a_i = (-1)^i p^i mod p^(i+1).  With
    ``completed`` unset the computation runs over the uncompleted ring,
    where the element is not a unit: NotAUnit is raised, mirroring the
    negative result of the quotient-ring discussion.
    """
    if n < 2:
        raise TateFglError("unit inverse needs n >= 2")
    if padic_order < tail_len + 1:
        raise TateFglError("padic_order must exceed tail_len to see the congruences")
    w_order = padic_order + tail_len + 2
    w_orders = tuple(1 for _ in range(1, n - 1)) + (w_order,)
    elim = wn_elimination(p, n, padic_order, w_orders)

    name = f"w{n-1}"
    mode = "truncate" if completed else "strict"
    domain = ZMOD if completed else RATIONAL
    ctx_u = PrecisionContext(
        p=p,
        domain=domain,
        padic_order=padic_order if completed else None,
        variables=(
            Variable(name, order=w_order, degree=0, tail=tail_len + padic_order + 2, tail_mode=mode),
        ),
    )
    wbar = elim.wn.convert(ctx_u)
    u = wbar.shift(name, -1)
    try:
        g = u.mult_inverse()
    except (NotAUnit, LaurentTailOverflow) as exc:
        raise NotAUnit(
            f"w_{n}/w_{n-1} is not invertible without I-adic completion: {exc}"
        ) from exc
    minus_g = -g
    tail = tuple(int(minus_g.coeff({name: -i})) for i in range(1, tail_len + 1))
    product_residual = g * u - MultiSeries.one(ctx_u)
    return UnitInverseReport(
        p=p, n=n, inverse=g, tail=tail, product_residual=product_residual
    )
