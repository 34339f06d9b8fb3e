"""Floquet normal form along the branch: a second contraction argument for

    G(C, V) = ( [Pi_{N,K} V](0) - I,  d_t V + V C - J V ),

with J the state Jacobian of the rescaled field scaled by the period
factor, followed by disc-based eigenvalue localization of C(0) and
resolvent exclusion of the spectrum from box boundaries along eta.
"""

from __future__ import annotations

import math

import numpy as np

from . import fcfloat, ivec, model
from .contraction import (NKBounds, _col_norms, _pack_two_sided, _Slots,
                          _two_sided_cheb, operator_norm_A, verify_contraction)
from .errors import SingularNodeMatrix, StabilityUnverified, XiNotInvertible
from .interval import Interval, RectComplex, interval_max
from .numerics import GRID_M, FloatBranch, _NodeContext
from .seqspace import (BallSeries, ChebSeq, FourierChebSeq, as_fc, dt,
                       eval_cheb, fc_mul, norm_P, norm_W)
from .zero_problem import BranchPoint


# ---------------------------------------------------------------------------
# float stage: node solves of the normal-form equations


def _node_jac_toeplitz(fm, eta: float, branch: FloatBranch, K: int):
    """Toeplitz blocks of tau * d_u f at one node, plus the grid context."""
    tau, z1, z2, u = branch.at_eta(float(eta))
    ctx = _NodeContext(fm, float(eta), tau, z1, z2, u)
    toep = np.empty((3, 3, 2 * K + 1, 2 * K + 1), dtype=np.complex128)
    for i in range(3):
        for m in range(3):
            toep[i, m] = tau.real * ctx.toeplitz(ctx.jac[i, m], K)
    return toep, ctx, float(tau.real)


def _monodromy_normal_form(jac_coeffs: np.ndarray, K_out: int, M: int = GRID_M):
    """Integrate V' = J(t)V over a period; return (C, V-modes up to K_out).

    C is the principal real matrix logarithm of the monodromy over the
    period, so the exponent imaginary parts lie in (-1/2, 1/2].
    """
    from scipy.integrate import solve_ivp
    from scipy.linalg import expm, logm

    Kj = (jac_coeffs.shape[-1] - 1) // 2
    ks = np.arange(-Kj, Kj + 1)

    def rhs(t, y):
        ph = np.exp(-1j * ks * t)
        J = np.real(jac_coeffs @ ph)
        return (J @ y.reshape(3, 3)).reshape(-1)

    sol = solve_ivp(rhs, [0.0, 2.0 * np.pi], np.eye(3).reshape(-1),
                    method="DOP853", rtol=1e-13, atol=1e-13, dense_output=True)
    if not sol.success:
        raise SingularNodeMatrix("monodromy integration failed")
    mono = sol.sol(2.0 * np.pi).reshape(3, 3)
    C = np.real(logm(mono)) / (2.0 * np.pi)
    tg = fcfloat.t_grid(M)
    phis = sol.sol(tg).reshape(3, 3, M)
    V = np.empty((3, 3, M), dtype=np.complex128)
    for m in range(M):
        V[:, :, m] = phis[:, :, m] @ expm(-C * tg[m])
    return C, fcfloat.fourier_coeffs(V, K_out)


def _pack_ups(C, Vmodes):
    return np.concatenate([np.asarray(C, dtype=np.complex128).reshape(-1),
                           Vmodes.reshape(-1)])


def _unpack_ups(x, K):
    nk = 2 * K + 1
    return x[:9].reshape(3, 3), x[9:].reshape(3, 3, nk)


def _g_node_residual(x, jac_toep, K):
    C, V = _unpack_ups(x, K)
    ks = np.arange(-K, K + 1)
    g1 = V.sum(axis=2) - np.eye(3)
    g2 = -1j * ks[None, None, :] * V + np.einsum("imk,mj->ijk", V, C)
    g2 -= np.einsum("imkl,mjl->ijk", jac_toep, V)
    return np.concatenate([g1.reshape(-1), g2.reshape(-1)])


def _g_node_jacobian(x, jac_toep, K):
    C, V = _unpack_ups(x, K)
    nk = 2 * K + 1
    S = 9 + 9 * nk
    ks = np.arange(-K, K + 1)
    A = np.zeros((S, S), dtype=np.complex128)

    def vcol(i, j):
        return 9 + (3 * i + j) * nk

    for i in range(3):
        for j in range(3):
            A[3 * i + j, vcol(i, j):vcol(i, j) + nk] = 1.0
    eye = np.eye(nk)
    for i in range(3):
        for j in range(3):
            rows = slice(vcol(i, j), vcol(i, j) + nk)
            A[rows, rows] += np.diag(-1j * ks)
            for m in range(3):
                A[rows, 3 * m + j] = V[i, m]                     # d/dC_{mj}
                A[rows, vcol(i, m):vcol(i, m) + nk] += eye * C[m, j]
                A[rows, vcol(m, j):vcol(m, j) + nk] -= jac_toep[i, m]
    return A


def _g_newton(x0, jac_toep, K, tol=1e-12, max_iter=30):
    x = x0.copy()
    best = np.inf
    rn = np.inf
    for _ in range(max_iter):
        res = _g_node_residual(x, jac_toep, K)
        rn = float(np.max(np.abs(res)))
        if rn < tol:
            return x, rn
        if not np.isfinite(rn) or rn > 1e6 * max(best, 1.0):
            raise SingularNodeMatrix(f"normal-form Newton blow-up: {rn}")
        best = min(best, rn)
        J = _g_node_jacobian(x, jac_toep, K)
        try:
            dx = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError as exc:
            raise SingularNodeMatrix("singular normal-form Jacobian") from exc
        x = x + dx
    raise SingularNodeMatrix(f"normal-form Newton stalled at {rn}")


class FloquetPair:
    """Interpolated normal-form data (stored-coefficient convention)."""

    def __init__(self, C, V, K):
        self.C = C      # (3, 3, N+1) complex
        self.V = V      # (3, 3, N+1, 2K+1) complex
        self.K = K

    @property
    def N(self):
        return self.C.shape[-1] - 1

    def symmetrized(self) -> "FloquetPair":
        C = self.C.real.astype(np.complex128)
        V = 0.5 * (self.V + np.conj(self.V[..., ::-1]))
        return FloquetPair(C, V, self.K)

    def c_at(self, eta: float) -> np.ndarray:
        return fcfloat.coeffs_to_vals(self.C, [eta])[..., 0]

    def v_at(self, eta: float) -> np.ndarray:
        return fcfloat.coeffs_to_vals(np.moveaxis(self.V, 2, -1), [eta])[..., 0]


def floquet_float_stage(branch: FloatBranch, fm, tol=1e-12):
    """Node-wise normal forms, interpolated and symmetrized along eta."""
    N, K = branch.N, branch.K
    etas = fcfloat.cheb_nodes(N)
    Cs, Vs, resids = [], [], []
    for eta in etas:
        toep, ctx, tau = _node_jac_toeplitz(fm, float(eta), branch, K)
        jc2 = fcfloat.fourier_coeffs(tau * ctx.jac, 2 * K)
        C0, V0 = _monodromy_normal_form(jc2, K)
        x, rn = _g_newton(_pack_ups(C0, V0), toep, K, tol)
        C, V = _unpack_ups(x, K)
        Cs.append(C)
        Vs.append(V)
        resids.append(rn)
    C_cheb = np.moveaxis(fcfloat.vals_to_coeffs(np.moveaxis(np.asarray(Cs), 0, -1)), -1, 2)
    V_cheb = np.moveaxis(fcfloat.vals_to_coeffs(np.moveaxis(np.asarray(Vs), 0, -1)), -1, 2)
    pair = FloquetPair(C_cheb, V_cheb, K).symmetrized()
    return pair, {"residuals": resids}


def float_exponents(pair: FloquetPair, etas) -> np.ndarray:
    """Eigenvalues of the interpolated C(eta); the one nearest 0 goes last."""
    out = np.empty((len(etas), 3), dtype=np.complex128)
    for i, eta in enumerate(etas):
        mu = np.linalg.eigvals(pair.c_at(float(eta)))
        j = int(np.argmin(np.abs(mu)))
        order = [m for m in range(3) if m != j] + [j]
        out[i] = mu[order]
    return out


def choose_omega(pair: FloquetPair, h1p: float, h2m: float,
                 margin: float = 0.2, samples: int = 257):
    """Rectangle around the two nontrivial float exponents over [h1+, h2-]."""
    etas = np.linspace(h1p, h2m, samples)
    mus = float_exponents(pair, etas)[:, :2]
    re_lo, re_hi = float(mus.real.min()), float(mus.real.max())
    im_max = float(np.abs(mus.imag).max())
    spread_re = max(re_hi - re_lo, 1e-3)
    right = min(re_hi + margin * spread_re, 0.5 * re_hi)
    left = re_lo - margin * spread_re
    top = im_max + margin * max(2.0 * im_max, 1e-2)
    return (left, right, -top, top)


# ---------------------------------------------------------------------------
# operator pack for the normal form


def build_B(pair: FloquetPair, branch: FloatBranch, fm, cond_limit=1e14):
    """Node inverses of the truncated derivative of G, interpolated in eta."""
    N, K = pair.N, pair.K
    etas = fcfloat.cheb_nodes(N)
    invs, conds = [], []
    for eta in etas:
        toep, _, _ = _node_jac_toeplitz(fm, float(eta), branch, K)
        Cn = pair.c_at(float(eta))
        Vn = pair.v_at(float(eta))
        J = _g_node_jacobian(_pack_ups(Cn, Vn), toep, K)
        try:
            inv = np.linalg.inv(J)
        except np.linalg.LinAlgError as exc:
            raise SingularNodeMatrix(f"normal-form node at eta={eta}") from exc
        cond = float(np.abs(np.linalg.cond(J, 1)))
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularNodeMatrix(f"normal-form node condition {cond:.2e}")
        invs.append(inv)
        conds.append(cond)
    B_cheb = fcfloat.vals_to_coeffs(np.moveaxis(np.asarray(invs), 0, -1))
    return B_cheb, conds


# ---------------------------------------------------------------------------
# rigorous residual and bounds


class FloquetContext:
    """Rigorous data shared by the normal-form bounds.

    ``jac_ball[i][j]`` encloses the true (tau d_{u_j} f_i) along the proven
    branch: the interpolant enclosure plus slack r * L_ij from the ball
    gradients of the second-derivative table at radius r.
    """

    def __init__(self, chi_bar: BranchPoint, pack, pc, recips, r: float,
                 pair: FloquetPair, B_cheb, jac=None):
        self.chi = chi_bar
        self.pack = pack
        self.pc = pc
        self.nu = chi_bar.nu
        self.K = pack.K
        self.N = pack.N
        self.pair = pair
        self.B_cheb = B_cheb
        self.r = r
        table = model.second_derivative_norms(pc, r, chi_bar, recips)
        tau = BallSeries.exact(as_fc(chi_bar.tau, self.nu))
        raw = jac if jac is not None else model.jacobian_u(
            pc, chi_bar.zeta1, chi_bar.zeta2, chi_bar.u, recips)
        self.jac_ball = [[tau.mul(raw[i][j]).inflate(
            (Interval(r) * table.jac_grad_bound(i + 1, j + 1)).hi)
            for j in range(3)] for i in range(3)]
        self.normB = operator_norm_A(B_cheb, self.nu, self.K)
        self.C_series = [[ChebSeq.from_floats(pair.C[i, j].real, self.nu)
                          for j in range(3)] for i in range(3)]
        self.V_series = [[FourierChebSeq.from_floats(pair.V[i, j], self.K, self.nu)
                          for j in range(3)] for i in range(3)]

    def c_row_norm_max(self) -> Interval:
        out = Interval(0.0)
        for m in range(3):
            s = Interval(0.0)
            for j in range(3):
                s = s + Interval(0.0, norm_P(self.C_series[m][j]).hi)
            out = interval_max(out, s)
        return out

    def omega1_col_max(self) -> Interval:
        out = Interval(0.0)
        for j in range(3):
            s = Interval(0.0)
            for i in range(3):
                s = s + Interval(0.0, norm_W(FourierChebSeq.from_floats(
                    self.pack.w1[i, j], self.K, self.nu)).hi)
            out = interval_max(out, s)
        return out


def eval_G(fctx: FloquetContext) -> tuple:
    """Residual enclosure of the normal-form map at the interpolant."""
    nu = fctx.nu
    g1 = []
    g2 = []
    for i in range(3):
        for j in range(3):
            vij = fctx.V_series[i][j]
            ell = ChebSeq.zero(nu, min(vij.deg, fctx.N))
            for k in range(-min(vij.K, fctx.K), min(vij.K, fctx.K) + 1):
                ell = ell + vij.mode(k)
            if i == j:
                ell = ell - ChebSeq.one(nu)
            g1.append(ell)
            term = BallSeries.exact(dt(vij))
            for m in range(3):
                term = term + BallSeries.exact(
                    fc_mul(fctx.V_series[i][m], as_fc(fctx.C_series[m][j], nu)))
                term = term - fctx.jac_ball[i][m].mul(
                    BallSeries.exact(fctx.V_series[m][j]))
            g2.append(term)
    return g1, g2


def g_norm_upper(g1, g2) -> Interval:
    total = Interval(0.0)
    for x in g1:
        total = total + Interval(0.0, norm_P(x).hi)
    for x in g2:
        total = total + Interval(0.0, x.norm_upper())
    return total


def nk_bounds_G(fctx: FloquetContext, col_batch: int = 96) -> tuple[NKBounds, dict]:
    """Contraction bounds for the normal-form map.

    The map is quadratic, so the ball radius is unrestricted and the
    second-derivative bound is the closed form 2 ||B||.
    """
    g1, g2 = eval_G(fctx)
    gnorm = g_norm_upper(g1, g2)
    Y = fctx.normB * gnorm
    fin = _zg_finite(fctx, col_batch)
    tail = (fctx.omega1_col_max() + fctx.c_row_norm_max()) / Interval(fctx.K + 1)
    defect = _jac_defect_G(fctx)
    Z1 = interval_max(fin, tail) + fctx.normB * defect
    Z2 = Interval(2.0) * fctx.normB
    nk = verify_contraction(Interval(0.0, Y.hi), Interval(0.0, Z1.hi),
                            Interval(0.0, Z2.hi), math.inf, nu=fctx.nu)
    info = {"finite": fin, "tail": tail, "defect": defect, "g_norm": gnorm}
    return nk, info


def _jac_defect_G(fctx: FloquetContext) -> Interval:
    out = Interval(0.0)
    for j in range(3):
        s = Interval(0.0)
        for i in range(3):
            diff = fctx.jac_ball[i][j].series - FourierChebSeq.from_floats(
                fctx.pack.w1[i, j], fctx.K, fctx.nu)
            s = s + Interval(0.0, norm_W(diff).hi) + Interval(fctx.jac_ball[i][j].slack)
        out = interval_max(out, s)
    return out


def _zg_finite(fctx: FloquetContext, col_batch: int) -> Interval:
    """Norm of B What_1 Pi_{2K} - Pi_{2K} over its probe columns."""
    nu, K, N = fctx.nu, fctx.K, fctx.N
    in_slots = _Slots(9, 9, K)         # B_finite domain
    w_slots = _Slots(9, 9, 3 * K)      # image of What_1
    cols = _Slots(9, 9, 2 * K)
    m_len = 2 * N + 1
    b2m, b2r = _pack_two_sided(fctx.B_cheb)

    v_two = np.empty((3, 3, 2 * K + 1, m_len), dtype=np.complex128)
    c_two = np.empty((3, 3, m_len), dtype=np.complex128)
    w1_two = np.empty((3, 3, 2 * K + 1, m_len), dtype=np.complex128)
    for i in range(3):
        for j in range(3):
            v_two[i, j] = _two_sided_cheb(np.moveaxis(fctx.pair.V[i, j], 0, -1))
            c_two[i, j] = _two_sided_cheb(fctx.pair.C[i, j].real)
            w1_two[i, j] = _two_sided_cheb(np.moveaxis(fctx.pack.w1[i, j], 0, -1))

    sel = _selection_g(w_slots, in_slots)
    best = 0.0
    for start in range(0, cols.total, col_batch):
        stop = min(start + col_batch, cols.total)
        nb = stop - start
        wm = np.zeros((w_slots.total, m_len, nb), dtype=np.complex128)
        for c in range(start, stop):
            _fill_what1_column(fctx, wm, w_slots, cols, c, c - start,
                               v_two, c_two, w1_two)
        wr = ivec.nu(8.0 * (2.0 ** -53) * np.abs(wm))
        outm, outr = ivec.conv_shift_product(b2m, b2r, wm[sel], wr[sel])
        tail_m, tail_r = _tail_scale_g(wm, wr, w_slots, K)
        p_center_fin = (outm.shape[1] - 1) // 2
        p_center_tail = (tail_m.shape[1] - 1) // 2
        for c in range(start, stop):
            comp, k = cols.mode_of(c)
            if comp is None:
                outm[c, p_center_fin, c - start] -= 1.0
                outr[c, p_center_fin, c - start] = ivec.nu(
                    outr[c, p_center_fin, c - start] + 1e-15)
            elif abs(k) <= K:
                row = in_slots.u(comp, k)
                outm[row, p_center_fin, c - start] -= 1.0
                outr[row, p_center_fin, c - start] = ivec.nu(
                    outr[row, p_center_fin, c - start] + 1e-15)
            else:
                row = w_slots.u(comp, k)
                tail_m[row, p_center_tail, c - start] -= 1.0
                tail_r[row, p_center_tail, c - start] = ivec.nu(
                    tail_r[row, p_center_tail, c - start] + 1e-15)
        norms = _col_norms(outm, outr, nu) + _col_norms(tail_m, tail_r, nu)
        best = max(best, float(np.max(ivec.nu(norms))))
    return Interval(0.0, best)


def _selection_g(w_slots: _Slots, in_slots: _Slots) -> np.ndarray:
    idx = list(range(in_slots.n_scalar))
    for comp in range(in_slots.n_comp):
        for k in range(-in_slots.band, in_slots.band + 1):
            idx.append(w_slots.u(comp, k))
    return np.asarray(idx)


def _tail_scale_g(wm, wr, w_slots: _Slots, K: int):
    """Multiply rows with |k| > K by 1/(-i k) (the tail inverse of d_t)."""
    out_m = np.zeros_like(wm)
    out_r = np.zeros_like(wr)
    for comp in range(w_slots.n_comp):
        for k in range(-w_slots.band, w_slots.band + 1):
            if abs(k) <= K:
                continue
            row = w_slots.u(comp, k)
            out_m[row] = wm[row] * (1j / k)
            err = np.abs(wm[row]) * (4.0 * 2.0 ** -53 / abs(k))
            out_r[row] = ivec.nu(wr[row] / abs(k) + err)
    return out_m, out_r


def _fill_what1_column(fctx: FloquetContext, wm, w_slots: _Slots, cols: _Slots,
                       c: int, c_local: int, v_two, c_two, w1_two):
    """One column of the approximate derivative of G on the probe basis."""
    K = fctx.K
    m_len = wm.shape[1]
    center = (m_len - 1) // 2
    comp, k = cols.mode_of(c)
    if comp is None:
        m, j = divmod(c, 3)                  # direction C_{mj}
        for i in range(3):
            for kk in range(-K, K + 1):
                wm[w_slots.u(3 * i + j, kk), :, c_local] += v_two[i, m, kk + K]
        return
    i, mcomp = divmod(comp, 3)               # direction V_{im}, mode k
    if abs(k) <= K:
        wm[3 * i + mcomp, center, c_local] += 1.0
    wm[w_slots.u(comp, k), center, c_local] += -1j * k
    for j in range(3):
        wm[w_slots.u(3 * i + j, k), :, c_local] += c_two[mcomp, j]
    for i2 in range(3):
        for kk in range(-K, K + 1):
            tgt = k + kk
            if abs(tgt) > w_slots.band:
                continue
            wm[w_slots.u(3 * i2 + mcomp, tgt), :, c_local] -= w1_two[i2, i, kk + K]


# ---------------------------------------------------------------------------
# spectral localization


def c_enclosure_at(fctx: FloquetContext, eta: Interval, r_G: float):
    """3x3 complex-interval enclosure of the true C(eta)."""
    out = []
    for i in range(3):
        row = []
        for j in range(3):
            v = eval_cheb(fctx.C_series[i][j], eta)
            pad = Interval(-r_G, r_G)
            row.append(RectComplex(v.re + pad, v.im + pad))
        out.append(row)
    return out


def gershgorin(C_enc, Xi: np.ndarray):
    """Discs of Xi^{-1} C Xi computed with a certified approximate inverse."""
    P = np.linalg.inv(Xi)
    Pi = [[RectComplex.point(P[i, j]) for j in range(3)] for i in range(3)]
    Xii = [[RectComplex.point(Xi[i, j]) for j in range(3)] for i in range(3)]
    D = _mat_mul(Pi, Xii)
    for i in range(3):
        D[i][i] = D[i][i] - RectComplex.point(1.0)
    dnorm = _inf_norm(D)
    if not dnorm.hi < 1.0:
        raise XiNotInvertible(f"||P Xi - I|| = {dnorm.hi} >= 1")
    M = _mat_mul(_mat_mul(Pi, C_enc), Xii)
    infl = (dnorm / (Interval(1.0) - dnorm) * _inf_norm(M)).hi
    pad = Interval(-infl, infl)
    M = [[RectComplex(M[i][j].re + pad, M[i][j].im + pad) for j in range(3)]
         for i in range(3)]
    discs = []
    for i in range(3):
        radius = 0.0
        for j in range(3):
            if j != i:
                radius = float(ivec.nu(np.float64(radius + M[i][j].abs_upper())))
        discs.append((M[i][i], radius))
    return discs


def disc_contains_zero(disc) -> bool:
    center, radius = disc
    return center.abs_lower() <= radius


def _mat_mul(A, B):
    out = []
    for i in range(3):
        row = []
        for j in range(3):
            acc = RectComplex.point(0.0)
            for m in range(3):
                acc = acc + A[i][m] * B[m][j]
            row.append(acc)
        out.append(row)
    return out


def _inf_norm(A) -> Interval:
    best = Interval(0.0)
    for i in range(3):
        s = Interval(0.0)
        for j in range(3):
            s = s + Interval(0.0, A[i][j].abs_upper())
        best = interval_max(best, s)
    return best


def _disc_in_rect(disc, rect) -> bool:
    center, radius = disc
    re_lo, re_hi, im_lo, im_hi = rect
    return (center.re.lo - radius > re_lo and center.re.hi + radius < re_hi and
            center.im.lo - radius > im_lo and center.im.hi + radius < im_hi)


def _disc_outside_rect(disc, rect) -> bool:
    center, radius = disc
    re_lo, re_hi, im_lo, im_hi = rect
    if center.re.hi + radius < re_lo or center.re.lo - radius > re_hi:
        return True
    if center.im.hi + radius < im_lo or center.im.lo - radius > im_hi:
        return True
    return False


def _rect_boundary_segments(rect, max_len: float = 0.05):
    re_lo, re_hi, im_lo, im_hi = rect
    segments = []

    def split(lo, hi):
        n = max(1, int(math.ceil((hi - lo) / max_len)))
        return [(lo + (hi - lo) * i / n, lo + (hi - lo) * (i + 1) / n)
                for i in range(n)]

    for a, b in split(re_lo, re_hi):
        segments.append(RectComplex(Interval(a, b), Interval(im_lo)))
        segments.append(RectComplex(Interval(a, b), Interval(im_hi)))
    for a, b in split(im_lo, im_hi):
        segments.append(RectComplex(Interval(re_lo), Interval(a, b)))
        segments.append(RectComplex(Interval(re_hi), Interval(a, b)))
    return segments


def resolvent_bound(fctx: FloquetContext, r_G: float, eta_lo: float, eta_hi: float,
                    rect, initial_panels: int = 64, min_width: float = 2.0 ** -16):
    """Certify that no eigenvalue of C(eta) meets the box boundary over the
    eta-range; returns (ok, failing panel or None)."""
    segments = _rect_boundary_segments(rect)
    edges = np.linspace(eta_lo, eta_hi, initial_panels + 1)
    stack = [(float(edges[i]), float(edges[i + 1])) for i in range(initial_panels)]
    while stack:
        a, b = stack.pop()
        C_enc = c_enclosure_at(fctx, Interval(a, b), r_G)
        if _panel_ok(C_enc, segments):
            continue
        if b - a <= min_width:
            return False, (a, b)
        m = 0.5 * (a + b)
        stack.append((a, m))
        stack.append((m, b))
    return True, None


def _panel_ok(C_enc, segments) -> bool:
    for z in segments:
        M = [[(z if i == j else RectComplex.point(0.0)) - C_enc[i][j]
              for j in range(3)] for i in range(3)]
        mid = np.array([[M[i][j].mid for j in range(3)] for i in range(3)])
        try:
            Q = np.linalg.inv(mid)
        except np.linalg.LinAlgError:
            return False
        Qi = [[RectComplex.point(Q[i][j]) for j in range(3)] for i in range(3)]
        D = _mat_mul(Qi, M)
        for i in range(3):
            D[i][i] = D[i][i] - RectComplex.point(1.0)
        best = 0.0
        for j in range(3):
            s = Interval(0.0)
            for i in range(3):
                s = s + Interval(0.0, D[i][j].abs_upper())
            best = max(best, s.hi)
        if not best < 1.0:
            return False
    return True


class SpectralVerdict:
    """Outcome of the three-step spectral confinement."""

    def __init__(self, stable, omega, trivial_disc, discs, near_regions, details):
        self.stable = stable
        self.omega = omega
        self.trivial_disc = trivial_disc
        self.discs = discs
        self.near_regions = near_regions
        self.details = details


def stability_verdict(fctx: FloquetContext, nk_G: NKBounds, h_values: tuple,
                      omega=None) -> SpectralVerdict:
    """Normal-form contraction, then confinement of the two nontrivial
    exponents strictly left of the axis on the interior range, then
    confinement of the persistent exponent near each crossing."""
    h1m, h1p, h2m, h2p = h_values
    r_G = nk_G.r_min
    details = {}
    if not nk_G.verified:
        raise StabilityUnverified("step1: normal-form contraction not verified")
    if omega is None:
        omega = choose_omega(fctx.pair, h1p, h2m)
    if not omega[1] < 0.0:
        raise StabilityUnverified("step2: box not in the open left half-plane")

    C0 = c_enclosure_at(fctx, Interval(0.0), r_G)
    Xi = _eigenbasis(fctx.pair.c_at(0.0))
    discs = gershgorin(C0, Xi)
    inside = [d for d in discs if _disc_in_rect(d, omega)]
    outside = [d for d in discs if _disc_outside_rect(d, omega)]
    if len(inside) != 2 or len(outside) != 1:
        raise StabilityUnverified("step2: disc separation at the center sample")
    if not disc_contains_zero(outside[0]):
        raise StabilityUnverified("step2: separated disc does not hold the trivial exponent")
    ok, panel = resolvent_bound(fctx, r_G, h1p, h2m, omega)
    if not ok:
        raise StabilityUnverified(f"step2: resolvent fails on eta panel {panel}")
    details["interior"] = (h1p, h2m)

    near = []
    for (lo, hi, name) in ((h1m, h1p, "lower"), (h2m, h2p, "upper")):
        box = _near_boundary_box(fctx, lo, hi)
        sample = 0.5 * (lo + hi)
        discs_s = gershgorin(c_enclosure_at(fctx, Interval(sample), r_G),
                             _eigenbasis(fctx.pair.c_at(sample)))
        n_in = sum(_disc_in_rect(d, box) for d in discs_s)
        n_out = sum(_disc_outside_rect(d, box) for d in discs_s)
        if n_in != 1 or n_out != 2:
            raise StabilityUnverified(f"step3 ({name}): disc separation at sample")
        ok, panel = resolvent_bound(fctx, r_G, lo, hi, box)
        if not ok:
            raise StabilityUnverified(f"step3 ({name}): resolvent fails on {panel}")
        near.append((name, box))
    return SpectralVerdict(True, omega, outside[0], discs, near, details)


def _eigenbasis(C: np.ndarray) -> np.ndarray:
    _, vecs = np.linalg.eig(C)
    return vecs


def _near_boundary_box(fctx: FloquetContext, lo: float, hi: float,
                       margin: float = 0.35):
    """Compact left-half-plane box around the persistent float exponent."""
    etas = np.linspace(lo, hi, 65)
    mus = float_exponents(fctx.pair, etas)
    target = mus[:, :2].real.min(axis=1)
    re_lo, re_hi = float(target.min()), float(target.max())
    im_max = float(np.abs(mus[:, :2].imag).max())
    spread = max(re_hi - re_lo, 0.05 * abs(re_lo))
    right = re_hi + margin * spread
    if right >= 0.0:
        right = 0.5 * re_hi
    return (re_lo - margin * spread, right,
            -(im_max + margin * spread + 0.01), im_max + margin * spread + 0.01)


def exponent_margin(pair: FloquetPair, eta: float) -> float:
    """Float distance of the nontrivial exponents from the imaginary axis."""
    mus = float_exponents(pair, [eta])[0]
    return float(-np.max(mus[:2].real))
