"""The Honda coordinate on the residue formal group.

Pipeline (p odd, n >= 2, q = p^(n-1)): twist the BP<n> law by a unit w
with w^(q-1) = v_{n-1} to get the degree-0 law F over Z/p^N[w_1..w_{n-2},
w_n]; reduce mod (p, w_1, .., w_{n-2}) and send w_n to -y^((1-p)q) to get
the residue law G_0 over F_p[y^-1]; extract tau as the q-th root of
[p]_{G_0}; assemble the strict isomorphism Phi onto the Honda law as the
finite composite of inverse Frobenius twists of tau^(-1).
"""

from __future__ import annotations

from dataclasses import dataclass

from .context import CHARP, ZMOD, PrecisionContext, Variable
from .errors import NonConvergence, OddPrimeRequired, TateFglError
from .fgl import (
    FormalGroupLaw,
    bp_law,
    honda_fgl,
    n_series,
    twist_by_unit,
)
from .series import MultiSeries


@dataclass(frozen=True)
class TateResidueLaw:
    """G_0 over F_p[y^-1]: the residue of the twisted law, of height n-1."""

    p: int
    n: int
    q: int
    law: FormalGroupLaw
    y_order: int
    t_degree: int
    wn_image: MultiSeries

    @property
    def ctx(self) -> PrecisionContext:
        return self.law.ctx

    def p_series(self) -> MultiSeries:
        return n_series(self.law, self.p, MultiSeries.variable(self.ctx, "t"))

    def functional_equation_residual(self) -> MultiSeries:
        """[p]_{G_0}(t) - (t^q +_{G_0} (-y^((1-p)q)) t^(pq)); zero at precision."""
        ctx = self.ctx
        tq = MultiSeries.monomial(ctx, {"t": self.q})
        tail = self.wn_image * MultiSeries.monomial(ctx, {"t": self.p * self.q})
        return self.p_series() - self.law.plus(tq, tail)

    def honda_comparison_residual(self) -> MultiSeries:
        """G_0 minus the Honda law of height n-1, modulo y^-1 (drops all
        negative y-powers); zero by the comparison at y = infinity."""
        H = honda_fgl(self.p, self.n - 1, self.t_degree, target=self.ctx)
        diff = self.law.series - H.series
        i = self.ctx.index("y")
        kept = {e: c for e, c in diff.terms() if e[i] == 0}
        return MultiSeries(self.ctx, kept)


@dataclass(frozen=True)
class IsoWitness:
    """A strict univariate series together with the residual of the
    identity it claims to satisfy (zero at precision on success)."""

    series: MultiSeries
    tag: str
    residual: MultiSeries

    def is_strict(self) -> bool:
        one = MultiSeries.one(self.series.ctx)
        return self.series.coeff_of("t", 1) == one

    def congruent_to_identity_mod_y(self) -> bool:
        ctx = self.series.ctx
        i = ctx.index("y")
        kept = {e: c for e, c in self.series.terms() if e[i] == 0}
        return MultiSeries(ctx, kept) == MultiSeries.variable(ctx, "t")


def residue_context(p: int, D: int, M: int) -> PrecisionContext:
    """F_p coefficients; y is the Laurent variable of the residue field
    k((y)) truncated at y^-1-order M (deeper tails drop, modelling the
    completion); t and s are the law variables at total degree D."""
    return PrecisionContext(
        p=p,
        domain=CHARP,
        variables=(
            Variable("y", order=1, degree=0, tail=M, tail_mode="truncate"),
            Variable("s", order=D + 1, degree=0),
            Variable("t", order=D + 1, degree=0),
        ),
        joint_caps=((("s", "t"), (1, 1), D),),
    )


def build_twisted_law(
    p: int, n: int, D: int, M: int, padic_order: int = 4
) -> tuple[FormalGroupLaw, TateResidueLaw]:
    """The degree-0 twist F of the BP<n> law and its residue G_0.

    F lives over Z/p^N[w_1..w_{n-2}, w_n] (w_{n-1} = 1 by the choice
    w^(q-1) = v_{n-1}); the residue sends w_i to 0 and w_n to -y^((1-p)q).
    """
    if p == 2:
        raise OddPrimeRequired("the twisted-law pipeline needs p odd")
    if n < 2:
        raise TateFglError("the twisted-law pipeline needs n >= 2")
    q = p ** (n - 1)
    D_G = max(D, p * q)
    _, rational, _ = bp_law(p, n, D_G)

    wn_cap = (D_G - 1) // (p * q - 1) + 2
    ws = tuple(
        Variable(f"w{j}", order=D_G + 1, degree=0) for j in range(1, n - 1)
    ) + (Variable(f"w{n}", order=wn_cap, degree=0),)
    ctx_F = PrecisionContext(
        p=p,
        domain=ZMOD,
        padic_order=padic_order,
        variables=ws
        + (
            Variable("s", order=D_G + 1, degree=0),
            Variable("t", order=D_G + 1, degree=0),
        ),
        joint_caps=((("s", "t"), (1, 1), D_G),),
    )
    images: dict[str, tuple[MultiSeries, int]] = {}
    for m in range(1, n - 1):
        images[f"v{m}"] = (MultiSeries.variable(ctx_F, f"w{m}"), p ** m - 1)
    images[f"v{n-1}"] = (MultiSeries.one(ctx_F), q - 1)
    images[f"v{n}"] = (MultiSeries.variable(ctx_F, f"w{n}"), p * q - 1)
    from .fgl import reduce_law

    law_int = reduce_law(rational, ZMOD, padic_order)
    F = twist_by_unit(
        law_int, images, ctx_F, unit_degree=2, tag=f"twisted BP<{n}> mod p^{padic_order}"
    )

    ctx0 = residue_context(p, D, M)
    wn_image = MultiSeries.monomial(ctx0, {"y": (1 - p) * q}, -1)
    resid_images = {f"w{j}": MultiSeries.zero(ctx0) for j in range(1, n - 1)}
    resid_images[f"w{n}"] = wn_image
    G0_series = F.series.evaluate(resid_images, ctx0)
    G0 = FormalGroupLaw(
        ctx=ctx0, series=G0_series, p=p, tag=f"residue law (p={p}, n={n})"
    )
    lo, hi = G0_series.var_range("y")
    if hi > 0:
        raise TateFglError("residue law has positive y-exponents; grading bug")
    resid = TateResidueLaw(
        p=p, n=n, q=q, law=G0, y_order=M, t_degree=D, wn_image=wn_image
    )
    return F, resid


def compute_tau(resid: TateResidueLaw) -> IsoWitness:
    """The unique series with tau(t)^q = [p]_{G_0}(t): exponentwise q-th
    root; strict and congruent to t mod y^-1."""
    ps = resid.p_series()
    tau = ps.qth_root(resid.q)
    residual = tau ** resid.q - ps
    return IsoWitness(series=tau, tag="tau-root", residual=residual)


@dataclass(frozen=True)
class PhiResult:
    witness: IsoWitness
    stages: int
    stable_under_extra_stage: bool


def compute_phi(resid: TateResidueLaw, tau: IsoWitness) -> PhiResult:
    """Phi = tau^(-sigma^r) o ... o tau^(-sigma), r minimal with q^r > M.

    tau = t mod y^-1 forces tau^(-sigma^r) = t mod y^(-q^r), so stages
    beyond r cannot change the result at y-precision M (checked and
    reported).  The witness residual is the intertwining defect
    Phi^sigma - Phi o tau^sigma.
    """
    q, M = resid.q, resid.y_order
    r = 1
    while q ** r <= M:
        r += 1
    tinv = tau.series.comp_inverse("t")
    phi = tinv.frobenius_twist(q, "t")
    for k in range(2, r + 1):
        phi = tinv.frobenius_twist(q ** k, "t").compose(phi, "t")
    extra = tinv.frobenius_twist(q ** (r + 1), "t").compose(phi, "t")
    stable = extra == phi
    residual = phi.frobenius_twist(q, "t") - phi.compose(
        tau.series.frobenius_twist(q, "t"), "t"
    )
    witness = IsoWitness(series=phi, tag="phi-intertwine", residual=residual)
    return PhiResult(witness=witness, stages=r, stable_under_extra_stage=stable)


def verify_strict_iso(
    phi: IsoWitness, resid: TateResidueLaw, H: FormalGroupLaw | None = None
) -> MultiSeries:
    """Phi(G_0(s,t)) - H(Phi(s), Phi(t)); identically zero at precision."""
    ctx = resid.ctx
    if H is None:
        H = honda_fgl(resid.p, resid.n - 1, resid.t_degree, target=ctx)
    G0sum = resid.law.series
    if G0sum.constant_coeff():
        raise TateFglError("residue law has a constant term")
    lhs = phi.series.evaluate({"t": G0sum})
    phi_s = phi.series.evaluate({"t": MultiSeries.variable(ctx, "s")})
    rhs = H.plus(phi_s, phi.series)
    return lhs - rhs


def artin_schreier_data(
    phi: IsoWitness, tau: IsoWitness, resid: TateResidueLaw
) -> list[tuple[int, MultiSeries]]:
    """Residuals of the generalized Artin-Schreier equations
    Phi_i^q - Phi_i - R_i(Phi_0..Phi_{i-1}) = 0 for each t-degree.

    R_i is extracted as the t^(i+1)-coefficient of (Phi with degrees < i
    only) o tau^sigma, i.e. the recursion is checked, not re-derived.
    """
    ctx = resid.ctx
    q = resid.q
    tau_sigma = tau.series.frobenius_twist(q, "t")
    out = []
    partial = MultiSeries.zero(ctx)
    for i in range(0, resid.t_degree):
        phi_i = phi.series.coeff_of("t", i + 1)
        if i == 0:
            R_i = MultiSeries.zero(ctx)
        else:
            R_i = partial.compose(tau_sigma, "t").coeff_of("t", i + 1)
        res = phi_i ** q - phi_i - R_i
        out.append((i, res))
        partial = partial + phi_i * MultiSeries.monomial(ctx, {"t": i + 1})
    return out


def solve_phi_by_artin_schreier(
    tau: IsoWitness, resid: TateResidueLaw
) -> MultiSeries:
    """Independent derivation of Phi: solve psi^q - psi = R_i coefficient
    by coefficient, with psi_0 = 1 and psi_i = 0 mod y^-1 for i >= 1.

    The Artin-Schreier equation is solved by iterating psi <- psi^q - R
    from zero, which converges y^-1-adically.  Agreement with the
    composite construction is the uniqueness evidence.
    """
    ctx = resid.ctx
    q = resid.q
    tau_sigma = tau.series.frobenius_twist(q, "t")
    psi = MultiSeries.monomial(ctx, {"t": 1})
    for i in range(1, resid.t_degree):
        R_i = psi.compose(tau_sigma, "t").coeff_of("t", i + 1)
        sol = MultiSeries.zero(ctx)
        for _ in range(resid.y_order + 4):
            nxt = sol ** q - R_i
            if nxt == sol:
                break
            sol = nxt
        else:
            raise NonConvergence("Artin-Schreier solve did not stabilize")
        psi = psi + sol * MultiSeries.monomial(ctx, {"t": i + 1})
    return psi
