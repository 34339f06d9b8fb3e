"""The zero-finding map for the branch of periodic orbits.

An unknown is a branch point chi = (tau, zeta1, zeta2, u) and the map is

    F(chi) = ( rho(u),  d_t u - tau f(zeta1, zeta2, u) ),

where rho collects the phase pairing against a fixed reference derivative
and the two initial-value normalizations ``[Pi_{N,K} u_j](0, .) - 1``.
"""

from __future__ import annotations

import numpy as np

from . import model
from .interval import Interval, RectComplex
from .seqspace import (BallSeries, ChebSeq, FourierChebSeq, UVec, as_fc,
                       cheb_mul, dt, norm_P, norm_W, truncate)


class BranchPoint:
    """One element of the product space: three eta-series and the orbit data."""

    __slots__ = ("tau", "zeta1", "zeta2", "u")

    def __init__(self, tau: ChebSeq, zeta1: ChebSeq, zeta2: ChebSeq, u: UVec):
        self.tau = tau
        self.zeta1 = zeta1
        self.zeta2 = zeta2
        self.u = u

    @classmethod
    def from_floats(cls, tau, zeta1, zeta2, u_arrays, K: int, nu: float) -> "BranchPoint":
        return cls(ChebSeq.from_floats(tau, nu),
                   ChebSeq.from_floats(zeta1, nu),
                   ChebSeq.from_floats(zeta2, nu),
                   UVec(*(FourierChebSeq.from_floats(a, K, nu) for a in u_arrays)))

    @property
    def nu(self) -> float:
        return self.tau.nu

    def norm(self) -> Interval:
        out = norm_P(self.tau) + norm_P(self.zeta1) + norm_P(self.zeta2)
        for p in self.u:
            out = out + norm_W(p)
        return out

    def scalars(self):
        return (self.tau, self.zeta1, self.zeta2)

    def __add__(self, other: "BranchPoint") -> "BranchPoint":
        return BranchPoint(self.tau + other.tau, self.zeta1 + other.zeta1,
                           self.zeta2 + other.zeta2, self.u + other.u)

    def __sub__(self, other: "BranchPoint") -> "BranchPoint":
        return BranchPoint(self.tau - other.tau, self.zeta1 - other.zeta1,
                           self.zeta2 - other.zeta2, self.u - other.u)

    def sigma(self) -> "BranchPoint":
        """Complex-conjugacy reflection; fixed points are real-valued branches."""
        return BranchPoint(self.tau.conj(), self.zeta1.conj(), self.zeta2.conj(),
                           UVec(*(p.sigma() for p in self.u)))


class PhaseReference:
    """Fixed finitely-supported reference derivative for the phase condition."""

    __slots__ = ("g", "N", "K")

    def __init__(self, g: UVec, N: int, K: int):
        self.g = UVec(*(truncate(p, K, N) for p in g))
        self.N = N
        self.K = K

    @classmethod
    def from_branch_velocity(cls, u: UVec, N: int, K: int) -> "PhaseReference":
        return cls(UVec(*(dt(p) for p in u)), N, K)


def phase_rho(u: UVec, ref: PhaseReference, N: int, K: int):
    """The three constraint series: phase pairing and the two normalizations.

    The pairing conjugates the reference factor, so feeding the reference
    itself yields a nonnegative function of eta.
    """
    nu = u.nu
    two_pi = Interval.two_pi()
    acc = ChebSeq.zero(nu)
    for j in range(3):
        gj = ref.g[j]
        uj = u[j]
        for k in range(-min(gj.K, uj.K), min(gj.K, uj.K) + 1):
            acc = acc + cheb_mul(uj.mode(k), gj.mode(k).conj())
    rho1 = acc.scale(two_pi)
    rows = [rho1]
    for j in range(2):
        uj = truncate(u[j], K, N)
        ell = ChebSeq.zero(nu, uj.deg)
        for k in range(-uj.K, uj.K + 1):
            ell = ell + uj.mode(k)
        rows.append(ell - ChebSeq.one(nu))
    return tuple(rows)


class FResult:
    """Residual enclosure: three constraint series and three state series."""

    __slots__ = ("rho", "ode")

    def __init__(self, rho, ode):
        self.rho = rho      # tuple of 3 ChebSeq
        self.ode = ode      # tuple of 3 BallSeries

    def norm_upper(self) -> float:
        total = Interval(0.0)
        for r in self.rho:
            total = total + Interval(0.0, norm_P(r).hi)
        for o in self.ode:
            total = total + Interval(0.0, o.norm_upper())
        return total.hi


def eval_F(chi: BranchPoint, pc: model.ParamCurves, ref: PhaseReference,
           recips: model.Reciprocals | None = None) -> FResult:
    """Full residual enclosure of the zero-finding map at chi."""
    if recips is None:
        recips = model.certify_reciprocals(pc, chi.u[2])
    rho = phase_rho(chi.u, ref, ref.N, ref.K)
    f = model.vector_field(pc, chi.zeta1, chi.zeta2, chi.u, recips)
    tau = BallSeries.exact(as_fc(chi.tau, chi.nu))
    ode = tuple(BallSeries.exact(dt(chi.u[j])) - tau.mul(f[j]) for j in range(3))
    return FResult(rho, ode)


def apply_DF(chi: BranchPoint, direction: BranchPoint, pc: model.ParamCurves,
             ref: PhaseReference, recips: model.Reciprocals | None = None) -> FResult:
    """Directional derivative of the map at chi applied to the given direction."""
    if recips is None:
        recips = model.certify_reciprocals(pc, chi.u[2])
    nu = chi.nu
    rho1, _, _ = phase_rho(direction.u, ref, ref.N, ref.K)
    rows = [rho1]
    for j in range(2):
        uj = truncate(direction.u[j], ref.K, ref.N)
        ell = ChebSeq.zero(nu, uj.deg)
        for k in range(-uj.K, uj.K + 1):
            ell = ell + uj.mode(k)
        rows.append(ell)
    f = model.vector_field(pc, chi.zeta1, chi.zeta2, chi.u, recips)
    jac = model.jacobian_u(pc, chi.zeta1, chi.zeta2, chi.u, recips)
    dz1 = model.dzeta_field(pc, chi.u, recips, 1)
    dz2 = model.dzeta_field(pc, chi.u, recips, 2)
    tau = BallSeries.exact(as_fc(chi.tau, nu))
    dtau = BallSeries.exact(as_fc(direction.tau, nu))
    dzeta = (BallSeries.exact(as_fc(direction.zeta1, nu)),
             BallSeries.exact(as_fc(direction.zeta2, nu)))
    ode = []
    for j in range(3):
        term = BallSeries.exact(dt(direction.u[j])) - dtau.mul(f[j])
        term = term - tau.mul(dz1[j]).mul(dzeta[0]) - tau.mul(dz2[j]).mul(dzeta[1])
        for m in range(3):
            term = term - tau.mul(jac[j][m]).mul(BallSeries.exact(direction.u[m]))
        ode.append(term)
    return FResult(tuple(rows), tuple(ode))
