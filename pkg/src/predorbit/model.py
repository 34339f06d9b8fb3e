"""The rescaled two-predator/one-prey field, its derivatives, and norm tables.

The auxiliary field after the amplitude blow-up is

    f_1 = delta_1 (u3 - lambda_1)/(u3 + alpha_1) u1
    f_2 = delta_2 (u3 - lambda_2)/(u3 + alpha_2) u2
    f_3 = (1 - u3 - zeta_1 u1/(u3 + alpha_1) - zeta_2 u2/(u3 + alpha_2)) u3

with alpha_j(eta) = a_j/kappa(eta) and lambda_j(eta) = a_j d_j /
((m_j - d_j) kappa(eta)) affine in eta.  Every division is routed through
one certified reciprocal per denominator ``(u3 + alpha_j)^{-1}``; squares
and cubes are products of that reciprocal with itself.
"""

from __future__ import annotations

import numpy as np

from . import fcfloat
from .errors import DomainError
from .interval import Interval, interval_max, parse_outward
from .seqspace import (BallSeries, ChebSeq, FourierChebSeq, UVec, as_fc,
                       ball_inverse_bound, fc_mul, neumann_inverse_error,
                       norm_P, norm_W, truncate)

PARAM_NAMES = ("a1", "a2", "d1", "d2", "m1", "m2", "y1", "y2", "gamma",
               "kappa1", "kappa2")


class ModelParams:
    """The ten model parameters plus the continuation endpoints kappa1 <= kappa2."""

    __slots__ = PARAM_NAMES

    def __init__(self, **kwargs):
        for name in PARAM_NAMES:
            val = kwargs[name]
            if not isinstance(val, Interval):
                val = parse_outward(str(val))
            object.__setattr__(self, name, val)
        self._validate()

    def __setattr__(self, name, value):
        raise AttributeError("ModelParams is immutable")

    @classmethod
    def from_strings(cls, mapping) -> "ModelParams":
        return cls(**{name: parse_outward(mapping[name]) for name in PARAM_NAMES})

    def _validate(self):
        for name in PARAM_NAMES:
            if not getattr(self, name).lo > 0.0:
                raise ValueError(f"parameter {name} must be positive")
        if not self.kappa1.lo <= self.kappa2.hi:
            raise ValueError("kappa1 <= kappa2 required")
        for j in (1, 2):
            m, d = getattr(self, f"m{j}"), getattr(self, f"d{j}")
            if not (m - d).lo > 0.0:
                raise ValueError(f"m{j} - d{j} > 0 required")
            for kap in (self.kappa1, self.kappa2):
                lam = getattr(self, f"a{j}") * d / ((m - d) * kap)
                if not (Interval(1.0) - lam).lo > 0.0:
                    raise ValueError(f"1 - lambda{j} > 0 fails at kappa = {kap}")

    def delta(self, j: int) -> Interval:
        return (getattr(self, f"m{j}") - getattr(self, f"d{j}")) / self.gamma

    def lam_scale(self, j: int) -> Interval:
        """a_j d_j / (m_j - d_j): lambda_j(eta) times kappa(eta)."""
        a, d, m = getattr(self, f"a{j}"), getattr(self, f"d{j}"), getattr(self, f"m{j}")
        return a * d / (m - d)


def kappa_of_eta(p: ModelParams, eta: Interval) -> Interval:
    """kappa(eta) = 2 k1 k2 / (k1 + k2 + (k1 - k2) eta)."""
    den = p.kappa1 + p.kappa2 + (p.kappa1 - p.kappa2) * eta
    return (p.kappa1 * p.kappa2 * 2.0) / den


def eta_of_kappa(p: ModelParams, kappa: Interval) -> Interval:
    """Inverse of kappa_of_eta on [kappa1, kappa2]."""
    if p.kappa1.hi >= p.kappa2.lo:
        raise DomainError("eta_of_kappa needs kappa1 < kappa2")
    num = p.kappa1 * p.kappa2 * 2.0 - kappa * (p.kappa1 + p.kappa2)
    return (num / (kappa * (p.kappa1 - p.kappa2))).intersect(Interval(-1.0, 1.0))


class ParamCurves:
    """Affine-in-eta parameter curves and the rate constants delta_j."""

    __slots__ = ("alpha1", "alpha2", "lambda1", "lambda2", "delta1", "delta2",
                 "nu", "params")

    def __init__(self, alpha1, alpha2, lambda1, lambda2, delta1, delta2, nu, params):
        self.alpha1, self.alpha2 = alpha1, alpha2
        self.lambda1, self.lambda2 = lambda1, lambda2
        self.delta1, self.delta2 = delta1, delta2
        self.nu = nu
        self.params = params

    def alpha(self, j: int) -> ChebSeq:
        return self.alpha1 if j == 1 else self.alpha2

    def lam(self, j: int) -> ChebSeq:
        return self.lambda1 if j == 1 else self.lambda2

    def delta(self, j: int) -> Interval:
        return self.delta1 if j == 1 else self.delta2


def build_param_curves(p: ModelParams, nu: float) -> ParamCurves:
    """Degree-1 Chebyshev representations of alpha_j(eta), lambda_j(eta)."""
    inv2k = (p.kappa1 * p.kappa2 * 2.0)
    c0 = (p.kappa1 + p.kappa2) / inv2k
    c1 = (p.kappa1 - p.kappa2) / inv2k

    def curve(scale: Interval) -> ChebSeq:
        s0, s1 = scale * c0, scale * c1 * 0.5
        out = ChebSeq.zero(nu, 1)
        out.coeffs.rl[0], out.coeffs.rh[0] = s0.lo, s0.hi
        out.coeffs.rl[1], out.coeffs.rh[1] = s1.lo, s1.hi
        return out

    return ParamCurves(curve(p.a1), curve(p.a2),
                       curve(p.lam_scale(1)), curve(p.lam_scale(2)),
                       p.delta(1), p.delta(2), nu, p)


# ---------------------------------------------------------------------------
# certified reciprocals of u3 + alpha_j


class Reciprocals:
    """Approximate reciprocals of u3 + alpha_j with certified error bounds."""

    __slots__ = ("den", "inv", "err", "defect_norm", "inv_norm")

    def __init__(self, den, inv, err, defect_norm, inv_norm):
        self.den = den              # (den1, den2): exact series u3 + alpha_j
        self.inv = inv              # (inv1, inv2): approximate reciprocal series
        self.err = err              # certified ||inv_j - den_j^{-1}|| upper bounds
        self.defect_norm = defect_norm
        self.inv_norm = inv_norm

    def ball(self, j: int) -> BallSeries:
        return BallSeries(self.inv[j - 1], self.err[j - 1])

    def ball_bound(self, j: int, R: float) -> Interval:
        """Uniform reciprocal norm over the R-ball, from the cached defect."""
        from .errors import BallNotInvertible
        d = self.defect_norm[j - 1]
        bn = self.inv_norm[j - 1]
        den = Interval(1.0) - d - bn * Interval(R)
        if not den.lo > 0.0:
            raise BallNotInvertible(
                f"reciprocal {j}: defect + R*norm = {(d + bn * Interval(R)).hi} >= 1")
        return Interval(0.0, (bn / den).hi)


def approx_reciprocal(den: FourierChebSeq, deg: int, K: int) -> FourierChebSeq:
    """Floating-point reciprocal by pointwise division on a collocation grid."""
    mid = den.mid()
    etas = fcfloat.cheb_nodes(deg)
    node_modes = fcfloat.coeffs_to_vals(np.moveaxis(mid, 0, -1), etas)  # (2K+1, deg+1)
    M = max(128, 4 * (den.K + K))
    vals = fcfloat.fourier_vals(np.moveaxis(node_modes, 0, -1), M)     # (deg+1, M)
    inv_modes = fcfloat.fourier_coeffs(1.0 / vals, K)                  # (deg+1, 2K+1)
    inv_coeffs = fcfloat.vals_to_coeffs(np.moveaxis(inv_modes, 0, -1)) # (2K+1, deg+1)
    return FourierChebSeq.from_floats(np.moveaxis(inv_coeffs, -1, 0), K, den.nu)


def certify_reciprocals(pc: ParamCurves, u3: FourierChebSeq,
                        inv: tuple | None = None) -> Reciprocals:
    """Certify reciprocals of u3 + alpha_j via the Neumann-series bound.

    The defect series is multiplied out once per denominator; the error
    bound uses the submultiplicative form of the numerator.
    """
    from .seqspace import reciprocal_defect
    dens, invs, errs, dnorms, inorms = [], [], [], [], []
    for j in (1, 2):
        den = u3 + as_fc(pc.alpha(j), pc.nu)
        cand = inv[j - 1] if inv is not None else \
            approx_reciprocal(den, 2 * max(den.deg, 1), 2 * max(den.K, 1))
        defect = reciprocal_defect(den, cand)
        err = neumann_inverse_error(den, cand, defect=defect, cheap=True)
        dens.append(den)
        invs.append(cand)
        errs.append(err.hi)
        dnorms.append(Interval(0.0, norm_W(defect).hi))
        inorms.append(Interval(0.0, norm_W(cand).hi))
    return Reciprocals(tuple(dens), tuple(invs), tuple(errs),
                       tuple(dnorms), tuple(inorms))


# ---------------------------------------------------------------------------
# the field and its derivatives as ball-series enclosures


def _bs(x, nu) -> BallSeries:
    if isinstance(x, BallSeries):
        return x
    return BallSeries(as_fc(x, nu), 0.0)


def vector_field(pc: ParamCurves, zeta1: ChebSeq, zeta2: ChebSeq, u: UVec,
                 recips: Reciprocals | None = None) -> tuple:
    """Enclosure of (f_1, f_2, f_3) as ball series."""
    nu = pc.nu
    if recips is None:
        recips = certify_reciprocals(pc, u[2])
    u1, u2, u3 = (_bs(x, nu) for x in u)
    out = []
    for j, uj in ((1, u1), (2, u2)):
        pj = recips.ball(j)
        gj = (u3 - as_fc(pc.lam(j), nu)).mul(pj)
        out.append(gj.mul(uj).scale(pc.delta(j)))
    s = _bs(FourierChebSeq.one(nu), nu) - u3
    for j, uj, zj in ((1, u1, zeta1), (2, u2, zeta2)):
        pj = recips.ball(j)
        s = s - uj.mul(pj).mul(_bs(zj, nu))
    out.append(s.mul(u3))
    return tuple(out)


def jacobian_u(pc: ParamCurves, zeta1: ChebSeq, zeta2: ChebSeq, u: UVec,
               recips: Reciprocals | None = None) -> list:
    """Enclosure of the 3x3 state Jacobian of f; entries (1,2) and (2,1) vanish."""
    nu = pc.nu
    if recips is None:
        recips = certify_reciprocals(pc, u[2])
    u1, u2, u3 = (_bs(x, nu) for x in u)
    one = _bs(FourierChebSeq.one(nu), nu)
    zero = BallSeries(FourierChebSeq.zero(nu), 0.0)
    J = [[zero] * 3 for _ in range(3)]
    for j, uj in ((1, u1), (2, u2)):
        pj = recips.ball(j)
        pj2 = pj.mul(pj)
        lam = as_fc(pc.lam(j), nu)
        la = as_fc(pc.lam(j) + pc.alpha(j), nu)
        J[j - 1][j - 1] = (u3 - lam).mul(pj).scale(pc.delta(j))
        J[j - 1][2] = _bs(la, nu).mul(pj2).mul(uj).scale(pc.delta(j))
    for j, uj, zj in ((1, u1, zeta1), (2, u2, zeta2)):
        pj = recips.ball(j)
        J[2][j - 1] = -(u3.mul(pj).mul(_bs(zj, nu)))
    s = one - u3.scale(Interval(2.0))
    for j, uj, zj in ((1, u1, zeta1), (2, u2, zeta2)):
        pj2 = recips.ball(j).mul(recips.ball(j))
        al = as_fc(pc.alpha(j), nu)
        s = s - uj.mul(pj2).mul(_bs(al, nu)).mul(_bs(zj, nu))
    J[2][2] = s
    return J


def dzeta_field(pc: ParamCurves, u: UVec, recips: Reciprocals, m: int) -> tuple:
    """Enclosure of (d f_j / d zeta_m)_{j=1..3}; only the third entry is nonzero."""
    nu = pc.nu
    u3 = _bs(u[2], nu)
    um = _bs(u[m - 1], nu)
    pj = recips.ball(m)
    zero = BallSeries(FourierChebSeq.zero(nu), 0.0)
    return (zero, zero, -(um.mul(u3).mul(pj)))


# ---------------------------------------------------------------------------
# second-derivative norm table


_SLOTS = ("tau", "zeta1", "zeta2", "u1", "u2", "u3")


class SecondDerivativeTable:
    """Upper bounds for all second partials of (tau f_i) over a norm ball.

    ``bound(x, y, i)`` bounds ``|| d^2 (tau f_i) / (dx dy) ||`` uniformly on
    the ball of radius R around the supplied approximation; ``z2_args``
    assembles the six column sums whose maximum bounds the full bilinear
    norm, and ``jac_grad_bound`` the per-entry gradients of tau * (d_u f).
    """

    def __init__(self, pc: ParamCurves, R: float, chi_norms: dict, cj: tuple):
        self.R = Interval(R)
        self.c = (Interval(0.0), cj[0], cj[1])   # 1-indexed
        n = chi_norms
        self.nt = n["tau"] + self.R
        self.nz = (None, n["zeta1"] + self.R, n["zeta2"] + self.R)
        self.nu_ = (None, n["u1"] + self.R, n["u2"] + self.R, n["u3"] + self.R)
        self.nu3lam = (None, n["u3_minus_lambda1"] + self.R, n["u3_minus_lambda2"] + self.R)
        self.none2u3 = n["one_minus_2u3"] + self.R * 2.0
        self.nla = (None, n["lam_plus_alpha1"], n["lam_plus_alpha2"])
        self.nal = (None, n["alpha1"], n["alpha2"])
        self.delta = (None, pc.delta1, pc.delta2)

    def _pred(self, x: str, y: str, j: int) -> Interval:
        """Second partials of tau f_j for a predator component j = 1, 2."""
        uj = f"u{j}"
        key = frozenset((x, y))
        if key == frozenset(("tau", uj)):
            return self.delta[j] * self.nu3lam[j] * self.c[j]
        if key == frozenset(("tau", "u3")):
            return self.delta[j] * self.nla[j] * self.nu_[j] * self.c[j] ** 2
        if key == frozenset((uj, "u3")):
            return self.nt * self.delta[j] * self.nla[j] * self.c[j] ** 2
        if x == y == "u3":
            return self.nt * self.delta[j] * self.nla[j] * self.nu_[j] * self.c[j] ** 3 * 2.0
        return Interval(0.0)

    def _prey(self, x: str, y: str) -> Interval:
        """Second partials of tau f_3."""
        key = frozenset((x, y))
        for j in (1, 2):
            zj, uj = f"zeta{j}", f"u{j}"
            if key == frozenset(("tau", zj)):
                return self.nu_[j] * self.nu_[3] * self.c[j]
            if key == frozenset(("tau", uj)):
                return self.nz[j] * self.nu_[3] * self.c[j]
            if key == frozenset((zj, uj)):
                return self.nt * self.nu_[3] * self.c[j]
            if key == frozenset((zj, "u3")):
                return self.nt * self.nu_[j] * self.nal[j] * self.c[j] ** 2
            if key == frozenset((uj, "u3")):
                return self.nt * self.nz[j] * self.nal[j] * self.c[j] ** 2
        if key == frozenset(("tau", "u3")):
            out = self.none2u3
            for j in (1, 2):
                out = out + self.nz[j] * self.nu_[j] * self.nal[j] * self.c[j] ** 2
            return out
        if x == y == "u3":
            out = Interval(1.0)
            for j in (1, 2):
                out = out + self.nz[j] * self.nu_[j] * self.nal[j] * self.c[j] ** 3
            return self.nt * out * 2.0
        return Interval(0.0)

    def bound(self, x: str, y: str, i: int) -> Interval:
        if i in (1, 2):
            return self._pred(x, y, i)
        return self._prey(x, y)

    def z2_args(self) -> list:
        args = []
        for x in _SLOTS:
            total = Interval(0.0)
            for i in (1, 2, 3):
                total = total + interval_max(*(self.bound(x, y, i) for y in _SLOTS))
            args.append(total)
        return args

    def d2f_bound(self) -> Interval:
        return interval_max(*self.z2_args())

    def jac_grad_bound(self, i: int, m: int) -> Interval:
        """sup over the ball of the gradient norm of tau * d_{u_m} f_i."""
        return interval_max(*(self.bound(x, f"u{m}", i) for x in _SLOTS))


def second_derivative_norms(pc: ParamCurves, R: float, chi_bar,
                            recips: Reciprocals, cj: tuple | None = None
                            ) -> SecondDerivativeTable:
    """Assemble the ball-uniform second-derivative table at radius R."""
    nu = pc.nu
    if cj is None:
        cj = (recips.ball_bound(1, R), recips.ball_bound(2, R))
    u1, u2, u3 = chi_bar.u
    two_u3 = FourierChebSeq.one(nu) - u3.scale(Interval(2.0))
    norms = {
        "tau": Interval(0.0, norm_P(chi_bar.tau).hi),
        "zeta1": Interval(0.0, norm_P(chi_bar.zeta1).hi),
        "zeta2": Interval(0.0, norm_P(chi_bar.zeta2).hi),
        "u1": Interval(0.0, norm_W(u1).hi),
        "u2": Interval(0.0, norm_W(u2).hi),
        "u3": Interval(0.0, norm_W(u3).hi),
        "u3_minus_lambda1": Interval(0.0, norm_W(u3 - as_fc(pc.lambda1, nu)).hi),
        "u3_minus_lambda2": Interval(0.0, norm_W(u3 - as_fc(pc.lambda2, nu)).hi),
        "one_minus_2u3": Interval(0.0, norm_W(two_u3).hi),
        "lam_plus_alpha1": Interval(0.0, norm_P(pc.lambda1 + pc.alpha1).hi),
        "lam_plus_alpha2": Interval(0.0, norm_P(pc.lambda2 + pc.alpha2).hi),
        "alpha1": Interval(0.0, norm_P(pc.alpha1).hi),
        "alpha2": Interval(0.0, norm_P(pc.alpha2).hi),
    }
    return SecondDerivativeTable(pc, R, norms, cj)
