"""Floating-point stage: seed the branch, solve at collocation nodes, and
assemble the approximate operators used by the rigorous bounds.

Nothing in this module is validated; its outputs are exact dyadic data
(floats) that the contraction stage treats as a candidate to be certified.
"""

from __future__ import annotations

import numpy as np

from . import fcfloat
from .errors import NewtonDiverged, NoViableNu, SingularNodeMatrix

GRID_M = 256


class FloatModel:
    """Pointwise float evaluation of the model parameters along eta."""

    def __init__(self, params):
        self.params = params
        self.a = (params.a1.mid, params.a2.mid)
        self.lam_scale = (params.lam_scale(1).mid, params.lam_scale(2).mid)
        self.delta = (params.delta(1).mid, params.delta(2).mid)
        self.k1 = params.kappa1.mid
        self.k2 = params.kappa2.mid

    def kappa(self, eta: float) -> float:
        return 2.0 * self.k1 * self.k2 / (self.k1 + self.k2 + (self.k1 - self.k2) * eta)

    def alpha(self, j: int, eta: float) -> float:
        return self.a[j - 1] / self.kappa(eta)

    def lam(self, j: int, eta: float) -> float:
        return self.lam_scale[j - 1] / self.kappa(eta)


def pack_x(tau, z1, z2, u_modes) -> np.ndarray:
    return np.concatenate(([tau, z1, z2], np.asarray(u_modes).reshape(-1)))


def unpack_x(x: np.ndarray, K: int):
    u = x[3:].reshape(3, 2 * K + 1)
    return x[0], x[1], x[2], u


class _NodeContext:
    """Grid values of the field and all multiplier functions at one node."""

    def __init__(self, fm: FloatModel, eta: float, tau, z1, z2, u_modes, M=GRID_M):
        self.M = M
        vals = fcfloat.fourier_vals(u_modes, M)
        u1, u2, u3 = vals
        al = (fm.alpha(1, eta), fm.alpha(2, eta))
        la = (fm.lam(1, eta), fm.lam(2, eta))
        d = fm.delta
        q1 = 1.0 / (u3 + al[0])
        q2 = 1.0 / (u3 + al[1])
        f1 = d[0] * (u3 - la[0]) * q1 * u1
        f2 = d[1] * (u3 - la[1]) * q2 * u2
        f3 = (1.0 - u3 - z1 * u1 * q1 - z2 * u2 * q2) * u3
        self.f = np.array([f1, f2, f3])
        J = np.zeros((3, 3, M), dtype=np.complex128)
        J[0, 0] = d[0] * (u3 - la[0]) * q1
        J[0, 2] = d[0] * (la[0] + al[0]) * q1 * q1 * u1
        J[1, 1] = d[1] * (u3 - la[1]) * q2
        J[1, 2] = d[1] * (la[1] + al[1]) * q2 * q2 * u2
        J[2, 0] = -z1 * u3 * q1
        J[2, 1] = -z2 * u3 * q2
        J[2, 2] = 1.0 - 2.0 * u3 - z1 * u1 * al[0] * q1 * q1 - z2 * u2 * al[1] * q2 * q2
        self.jac = J
        dz = np.zeros((2, 3, M), dtype=np.complex128)
        dz[0, 2] = -u1 * u3 * q1
        dz[1, 2] = -u2 * u3 * q2
        self.dzeta = dz

    def f_coeffs(self, K: int) -> np.ndarray:
        return fcfloat.fourier_coeffs(self.f, K)

    def jac_coeffs(self, K: int) -> np.ndarray:
        return fcfloat.fourier_coeffs(self.jac, K)

    def dzeta_coeffs(self, K: int) -> np.ndarray:
        return fcfloat.fourier_coeffs(self.dzeta, K)

    def toeplitz(self, grid_fn: np.ndarray, K: int) -> np.ndarray:
        """Toeplitz compression of the multiplication operator by grid_fn."""
        c = np.fft.ifft(grid_fn)
        ks = np.arange(-K, K + 1)
        return c[(ks[:, None] - ks[None, :]) % self.M]


def node_residual(fm, eta, x, gvals, K, M=GRID_M):
    tau, z1, z2, u = unpack_x(x, K)
    ctx = _NodeContext(fm, eta, tau, z1, z2, u, M)
    fc = ctx.f_coeffs(K)
    ks = np.arange(-K, K + 1)
    ode = (-1j * ks) * u - tau * fc
    rho1 = 2.0 * np.pi * np.sum(u * np.conj(gvals))
    rho2 = np.sum(u[0]) - 1.0
    rho3 = np.sum(u[1]) - 1.0
    return np.concatenate(([rho1, rho2, rho3], ode.reshape(-1))), ctx


def node_jacobian(fm, eta, x, gvals, K, ctx=None, M=GRID_M):
    tau, z1, z2, u = unpack_x(x, K)
    if ctx is None:
        ctx = _NodeContext(fm, eta, tau, z1, z2, u, M)
    nk = 2 * K + 1
    S = 3 + 3 * nk
    A = np.zeros((S, S), dtype=np.complex128)
    ks = np.arange(-K, K + 1)
    # constraint rows
    for j in range(3):
        A[0, 3 + j * nk:3 + (j + 1) * nk] = 2.0 * np.pi * np.conj(gvals[j])
    A[1, 3:3 + nk] = 1.0
    A[2, 3 + nk:3 + 2 * nk] = 1.0
    # state rows
    fc = ctx.f_coeffs(K)
    dzc = ctx.dzeta_coeffs(K)
    for j in range(3):
        rows = slice(3 + j * nk, 3 + (j + 1) * nk)
        A[rows, 0] = -fc[j]
        A[rows, 1] = -tau * dzc[0, j]
        A[rows, 2] = -tau * dzc[1, j]
        for m in range(3):
            cols = slice(3 + m * nk, 3 + (m + 1) * nk)
            block = -tau * ctx.toeplitz(ctx.jac[j, m], K)
            if m == j:
                block = block + np.diag(-1j * ks)
            A[rows, cols] = block
    return A


def newton_at_node(fm, eta, x0, gvals, K, tol=1e-12, max_iter=50):
    """Newton iteration on the node truncation; returns (x, diagnostics)."""
    x = np.asarray(x0, dtype=np.complex128).copy()
    hist = []
    best = np.inf
    for it in range(max_iter):
        res, ctx = node_residual(fm, eta, x, gvals, K)
        rn = float(np.max(np.abs(res)))
        hist.append(rn)
        if rn < tol:
            return x, {"eta": float(eta), "residual": rn, "iterations": it, "history": hist}
        if not np.isfinite(rn) or rn > 1e4 * max(best, 1.0):
            raise NewtonDiverged(f"residual blow-up at eta={eta}: {rn}")
        best = min(best, rn)
        J = node_jacobian(fm, eta, x, gvals, K, ctx)
        try:
            dx = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged(f"singular Newton matrix at eta={eta}") from exc
        x = x + dx
    raise NewtonDiverged(f"no convergence at eta={eta}: residual {hist[-1]:.3e}")


_newton_loop = newton_at_node


def dt_coeffs(u_modes: np.ndarray) -> np.ndarray:
    """Mode-wise time derivative of centered Fourier data (last axis)."""
    K = (u_modes.shape[-1] - 1) // 2
    ks = np.arange(-K, K + 1)
    return u_modes * (-1j * ks)


# ---------------------------------------------------------------------------
# seeding by time integration


def seed_orbit(fm: FloatModel, K: int, eta: float = 0.0, t_end: float = 6000.0):
    """Locate the attracting cycle at fixed eta and return a node seed."""
    from scipy.integrate import solve_ivp

    al = (fm.alpha(1, eta), fm.alpha(2, eta))
    la = (fm.lam(1, eta), fm.lam(2, eta))
    d = fm.delta

    def rhs(t, x):
        x1, x2, s = x
        q1 = 1.0 / (s + al[0])
        q2 = 1.0 / (s + al[1])
        return [d[0] * (s - la[0]) * q1 * x1,
                d[1] * (s - la[1]) * q2 * x2,
                (1.0 - s - x1 * q1 - x2 * q2) * s]

    sol = solve_ivp(rhs, [0.0, t_end], [0.05, 0.05, 0.5], rtol=1e-12, atol=1e-14,
                    dense_output=True, max_step=1.0)
    if not sol.success:
        raise NewtonDiverged("seed integration failed")

    t_probe = np.linspace(0.8 * t_end, t_end, 20001)
    s_vals = sol.sol(t_probe)[2]
    s_mid = 0.5 * (s_vals.max() + s_vals.min())
    crossings = []
    for i in range(len(t_probe) - 1):
        if s_vals[i] < s_mid <= s_vals[i + 1]:
            lo, hi = t_probe[i], t_probe[i + 1]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if sol.sol(mid)[2] < s_mid:
                    lo = mid
                else:
                    hi = mid
            crossings.append(0.5 * (lo + hi))
    if len(crossings) < 4:
        raise NewtonDiverged("seed integration found no periodic crossings")
    periods = np.diff(crossings)
    period = float(np.mean(periods[-4:]))
    t0 = crossings[-2]
    ts = t0 + period * np.arange(GRID_M) / GRID_M
    orbit = sol.sol(ts)
    z1, z2 = float(orbit[0, 0].real), float(orbit[1, 0].real)
    u_grid = np.array([orbit[0] / z1, orbit[1] / z2, orbit[2]], dtype=np.complex128)
    u_modes = fcfloat.fourier_coeffs(u_grid, K)
    tau = period / (2.0 * np.pi)
    x0 = pack_x(tau, z1, z2, u_modes)
    gvals = dt_coeffs(u_modes)
    return x0, gvals


# ---------------------------------------------------------------------------
# branch continuation and interpolation


class FloatBranch:
    """Interpolated branch data in stored-coefficient convention."""

    def __init__(self, tau, zeta1, zeta2, u, K):
        self.tau = tau          # (N+1,) complex until symmetrized
        self.zeta1 = zeta1
        self.zeta2 = zeta2
        self.u = u              # (3, N+1, 2K+1) complex
        self.K = K

    @property
    def N(self) -> int:
        return self.tau.shape[0] - 1

    def at_eta(self, eta: float):
        tau = fcfloat.coeffs_to_vals(self.tau, [eta])[..., 0]
        z1 = fcfloat.coeffs_to_vals(self.zeta1, [eta])[..., 0]
        z2 = fcfloat.coeffs_to_vals(self.zeta2, [eta])[..., 0]
        u = fcfloat.coeffs_to_vals(np.moveaxis(self.u, 1, -1), [eta])[..., 0]
        return tau, z1, z2, u

    def node_vector(self, eta: float) -> np.ndarray:
        tau, z1, z2, u = self.at_eta(eta)
        return pack_x(tau, z1, z2, u)

    def velocity_coeffs(self) -> np.ndarray:
        """Coefficients of d_t u, the canonical phase reference."""
        return dt_coeffs(self.u)


def interpolate_branch(node_xs, K: int) -> FloatBranch:
    """Chebyshev interpolation of node solutions (nodes ascending in eta)."""
    xs = np.asarray(node_xs)
    taus = fcfloat.vals_to_coeffs(xs[:, 0])
    z1s = fcfloat.vals_to_coeffs(xs[:, 1])
    z2s = fcfloat.vals_to_coeffs(xs[:, 2])
    nk = (xs.shape[1] - 3) // 3
    u_nodes = xs[:, 3:].reshape(xs.shape[0], 3, nk)
    u = fcfloat.vals_to_coeffs(np.moveaxis(u_nodes, 0, -1))
    return FloatBranch(taus, z1s, z2s, np.moveaxis(u, -1, 1), K)


def symmetrize(branch: FloatBranch) -> FloatBranch:
    """Enforce the conjugacy symmetry exactly at the bit level."""
    tau = branch.tau.real.astype(np.complex128)
    z1 = branch.zeta1.real.astype(np.complex128)
    z2 = branch.zeta2.real.astype(np.complex128)
    u = 0.5 * (branch.u + np.conj(branch.u[:, :, ::-1]))
    return FloatBranch(tau, z1, z2, u, branch.K)


def is_sigma_symmetric(branch: FloatBranch) -> bool:
    if np.any(branch.tau.imag != 0.0) or np.any(branch.zeta1.imag != 0.0) \
            or np.any(branch.zeta2.imag != 0.0):
        return False
    return bool(np.array_equal(branch.u, np.conj(branch.u[:, :, ::-1])))


def solve_branch(fm: FloatModel, N: int, K: int, tol: float = 1e-12,
                 max_substep_depth: int = 7):
    """Two-sweep continuation over the collocation nodes.

    Sweep one continues outward from the center node with a locally
    transported phase reference; the branch is then interpolated,
    symmetrized, and re-solved against the fixed global reference so the
    final nodes are zeros of the actual map being certified.
    """
    etas = fcfloat.cheb_nodes(N)
    center = int(np.argmin(np.abs(etas)))
    x_seed, g_seed = seed_orbit(fm, K, eta=float(etas[center]))

    states: dict[int, np.ndarray] = {}
    diags = []

    def advance(x_from, g_from, eta_from, eta_to, depth=0):
        try:
            x, d = _newton_loop(fm, eta_to, x_from, g_from, K, tol)
            return x, d
        except NewtonDiverged:
            if depth >= max_substep_depth:
                raise
            eta_mid = 0.5 * (eta_from + eta_to)
            x_mid, _ = advance(x_from, g_from, eta_from, eta_mid, depth + 1)
            g_mid = dt_coeffs(unpack_x(x_mid, K)[3])
            return advance(x_mid, g_mid, eta_mid, eta_to, depth + 1)

    x_c, d = _newton_loop(fm, float(etas[center]), x_seed, g_seed, K, tol)
    states[center] = x_c
    diags.append(d)
    for direction in (1, -1):
        prev = center
        x_prev = x_c
        idx = center + direction
        while 0 <= idx <= N:
            g_prev = dt_coeffs(unpack_x(x_prev, K)[3])
            x_new, d = advance(x_prev, g_prev, float(etas[prev]), float(etas[idx]))
            states[idx] = x_new
            diags.append(d)
            x_prev = x_new
            prev = idx
            idx += direction

    branch0 = symmetrize(interpolate_branch([states[i] for i in range(N + 1)], K))
    gcoeffs = branch0.velocity_coeffs()

    final_states = []
    final_diags = []
    for i in range(N + 1):
        gvals = fcfloat.coeffs_to_vals(np.moveaxis(gcoeffs, 1, -1), [etas[i]])[..., 0]
        x, d = _newton_loop(fm, float(etas[i]), states[i], gvals, K, tol)
        final_states.append(x)
        final_diags.append(d)

    branch = symmetrize(interpolate_branch(final_states, K))

    # interpolation must reproduce the node data
    recon_err = 0.0
    for i in range(N + 1):
        recon_err = max(recon_err, float(np.max(np.abs(
            branch.node_vector(float(etas[i])) - final_states[i]))))

    info = {
        "sweep1": diags,
        "sweep2": final_diags,
        "reconstruction_error": recon_err,
        "zeta2_at_minus1": float(fcfloat.coeffs_to_vals(branch.zeta2.real, [-1.0])[0]),
        "zeta1_at_plus1": float(fcfloat.coeffs_to_vals(branch.zeta1.real, [1.0])[0]),
    }
    return branch, info


# ---------------------------------------------------------------------------
# operator pack


class OperatorPack:
    """Approximate operators: node inverses interpolated in eta, the banded
    derivative approximations, reciprocals, and the stability-stage data."""

    def __init__(self, A_cheb, conds, w0, w1, w2, w3, w4, recip, K, N):
        self.A_cheb = A_cheb      # (S, S, N+1) complex
        self.conds = conds
        self.w0 = w0              # (3, N+1, 2K+1)
        self.w1 = w1              # (3, 3, N+1, 2K+1)
        self.w2 = w2
        self.w3 = w3
        self.w4 = w4
        self.recip = recip        # (2, 2N+1, 4K+1)
        self.K = K
        self.N = N
        # filled by the stability float stage
        self.C_bar = None         # (3, 3, N+1)
        self.V_bar = None         # (3, 3, N+1, 2K+1)
        self.B_cheb = None        # (SG, SG, N+1)
        self.B_conds = None
        self.Xi = None            # (3, 3) complex
        self.Omega = None         # (re_lo, re_hi, im_lo, im_hi)


def build_operator_pack(branch: FloatBranch, fm: FloatModel, cond_limit=1e14) -> OperatorPack:
    """Invert the node Jacobians and interpolate everything along eta."""
    N, K = branch.N, branch.K
    etas = fcfloat.cheb_nodes(N)
    gcoeffs = branch.velocity_coeffs()
    nk = 2 * K + 1
    inv_nodes = []
    conds = []
    w0_n, w1_n, w2_n, w3_n, w4_n = [], [], [], [], []
    for eta in etas:
        x = branch.node_vector(float(eta))
        tau, z1, z2, u = unpack_x(x, K)
        gvals = fcfloat.coeffs_to_vals(np.moveaxis(gcoeffs, 1, -1), [eta])[..., 0]
        ctx = _NodeContext(fm, float(eta), tau, z1, z2, u)
        J = node_jacobian(fm, float(eta), x, gvals, K, ctx)
        try:
            inv = np.linalg.inv(J)
        except np.linalg.LinAlgError as exc:
            raise SingularNodeMatrix(f"node at eta={eta} not invertible") from exc
        cond = float(np.abs(np.linalg.cond(J, 1)))
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularNodeMatrix(f"node at eta={eta} has condition {cond:.2e}")
        inv_nodes.append(inv)
        conds.append(cond)
        fc = ctx.f_coeffs(K)
        w0_n.append(tau * fc)
        w2_n.append(fc)
        w1_n.append(tau * ctx.jac_coeffs(K))
        dz = ctx.dzeta_coeffs(K)
        w3_n.append(tau * dz[0])
        w4_n.append(tau * dz[1])

    A_cheb = fcfloat.vals_to_coeffs(np.moveaxis(np.asarray(inv_nodes), 0, -1))
    w0 = np.moveaxis(fcfloat.vals_to_coeffs(np.moveaxis(np.asarray(w0_n), 0, -1)), -1, 1)
    w2 = np.moveaxis(fcfloat.vals_to_coeffs(np.moveaxis(np.asarray(w2_n), 0, -1)), -1, 1)
    w3 = np.moveaxis(fcfloat.vals_to_coeffs(np.moveaxis(np.asarray(w3_n), 0, -1)), -1, 1)
    w4 = np.moveaxis(fcfloat.vals_to_coeffs(np.moveaxis(np.asarray(w4_n), 0, -1)), -1, 1)
    w1 = np.moveaxis(fcfloat.vals_to_coeffs(np.moveaxis(np.asarray(w1_n), 0, -1)), -1, 2)

    recip = _float_reciprocals(branch, fm)
    return OperatorPack(A_cheb, conds, w0, w1, w2, w3, w4, recip, K, N)


def _float_reciprocals(branch: FloatBranch, fm: FloatModel) -> np.ndarray:
    """Reciprocals of u3 + alpha_j on the doubled grid, degrees (2N, 2K)."""
    N, K = branch.N, branch.K
    deg, Kr = 2 * N, 2 * K
    etas = fcfloat.cheb_nodes(deg)
    u3_modes = fcfloat.coeffs_to_vals(np.moveaxis(branch.u[2], 0, -1), etas)  # (2K+1, deg+1)
    out = np.zeros((2, deg + 1, 2 * Kr + 1), dtype=np.complex128)
    for j in (1, 2):
        vals = fcfloat.fourier_vals(np.moveaxis(u3_modes, 0, -1), GRID_M)     # (deg+1, M)
        al = np.array([fm.alpha(j, e) for e in etas])
        inv_vals = 1.0 / (vals + al[:, None])
        inv_modes = fcfloat.fourier_coeffs(inv_vals, Kr)                      # (deg+1, 2Kr+1)
        coeffs = fcfloat.vals_to_coeffs(np.moveaxis(inv_modes, 0, -1))        # (2Kr+1, deg+1)
        out[j - 1] = np.moveaxis(coeffs, -1, 0)
    return out


# ---------------------------------------------------------------------------
# weight selection


def norm_p_f(coeffs: np.ndarray, nu: float) -> float:
    w = nu ** np.arange(coeffs.shape[-1])
    w[1:] *= 2.0
    return float(np.sum(np.abs(coeffs) * w, axis=-1).max()) if coeffs.ndim > 1 \
        else float(np.sum(np.abs(coeffs) * w))


def norm_w_f(coeffs: np.ndarray, nu: float) -> float:
    """Float weighted norm of stored (N+1, 2K+1) data (or batched leading axes)."""
    w = nu ** np.arange(coeffs.shape[-2])
    w[1:] *= 2.0
    return float(np.sum(np.abs(coeffs) * w[:, None], axis=(-2, -1)).max()) \
        if coeffs.ndim > 2 else float(np.sum(np.abs(coeffs) * w[:, None]))


def _conv_fc_f(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Float folded Fourier-Chebyshev product of stored coefficient arrays."""
    na, nb = a.shape[0] - 1, b.shape[0] - 1
    idx_a = np.abs(np.arange(-na, na + 1))
    idx_b = np.abs(np.arange(-nb, nb + 1))
    from scipy.signal import fftconvolve
    full = fftconvolve(a[idx_a, :], b[idx_b, :], axes=(0, 1))
    return full[na + nb:, :]


def _float_ball_bounds(branch: FloatBranch, pack: OperatorPack, fm: FloatModel,
                       nu: float, R: float):
    """Float estimates of the uniform reciprocal bounds over the R-ball."""
    from .interval import Interval
    N, K = branch.N, branch.K
    inv2k = 2.0 * fm.k1 * fm.k2
    c0, c1 = (fm.k1 + fm.k2) / inv2k, (fm.k1 - fm.k2) / inv2k
    out = []
    for j in (1, 2):
        den = branch.u[2].copy()
        den[0, K] += fm.a[j - 1] * c0
        den[1, K] += fm.a[j - 1] * c1 * 0.5
        inv = pack.recip[j - 1]
        prod = _conv_fc_f(den, inv)
        prod[0, prod.shape[1] // 2] -= 1.0
        d = norm_w_f(prod, nu)
        bn = norm_w_f(inv, nu)
        denom = 1.0 - d - bn * R
        if denom <= 0.0:
            raise ValueError("float ball bound infeasible")
        out.append(Interval(0.0, bn / denom * (1.0 + 1e-12)))
    return tuple(out)


def preview_bounds(branch: FloatBranch, pack: OperatorPack, fm: FloatModel,
                   nu: float, R: float) -> dict:
    """Fast float forecast of the contraction inputs for one weight nu.

    The dominant nu-dependence (weighted norms of the fixed series, the
    banded tail term) is exact; the banded-approximation defects are probed
    off the collocation nodes; the second-derivative table reuses the
    rigorous formulas with float-estimated reciprocal ball bounds.
    """
    from .model import build_param_curves, second_derivative_norms
    from .zero_problem import BranchPoint

    N, K = branch.N, branch.K
    tail = max(np.sum([norm_w_f(pack.w1[i, j], nu) for i in range(3)]) for j in range(3))
    tail_term = tail / (K + 1)

    normA_fin = _pack_norm_f(pack.A_cheb, K, nu)
    normA = max(normA_fin, 1.0 / (K + 1))

    # defect of the banded approximations, probed on the doubled node set
    probe = fcfloat.cheb_nodes(2 * N)
    defect_w1 = np.zeros((3, 3, probe.size))
    defect_w0 = np.zeros((3, probe.size))
    for i_eta, eta in enumerate(probe):
        tau, z1, z2, u = branch.at_eta(float(eta))
        ctx = _NodeContext(fm, float(eta), tau, z1, z2, u)
        w1_eval = fcfloat.coeffs_to_vals(np.moveaxis(pack.w1, 2, -1), [eta])[..., 0]
        diff = tau * ctx.jac_coeffs(K) - w1_eval
        defect_w1[:, :, i_eta] = np.sum(np.abs(diff), axis=-1)
        w0_eval = fcfloat.coeffs_to_vals(np.moveaxis(pack.w0, 1, -1), [eta])[..., 0]
        fdiff = tau * ctx.f_coeffs(K) - w0_eval
        defect_w0[:, i_eta] = np.sum(np.abs(fdiff), axis=-1)
    dw1 = fcfloat.vals_to_coeffs(defect_w1)
    dw0 = fcfloat.vals_to_coeffs(defect_w0)
    omega1_defect = float(max(np.sum([norm_p_f(dw1[i, j], nu) for i in range(3)])
                              for j in range(3)))
    w0_defect = float(np.sum([norm_p_f(dw0[j], nu) for j in range(3)]))

    z1_pre = tail_term + normA * omega1_defect
    y_pre = normA * w0_defect

    chi = BranchPoint.from_floats(branch.tau, branch.zeta1, branch.zeta2, branch.u, K, nu)
    pc = build_param_curves(fm.params, nu)
    try:
        cj = _float_ball_bounds(branch, pack, fm, nu, R)
        table = second_derivative_norms(pc, R, chi, None, cj=cj)
        z2_pre = normA * table.d2f_bound().hi
    except Exception:
        return {"nu": nu, "feasible": False, "Y": y_pre, "Z1": np.inf, "Z2": np.inf,
                "margin": -np.inf}
    feasible = z1_pre < 1.0 and 2.0 * y_pre * z2_pre <= (1.0 - z1_pre) ** 2
    margin = (1.0 - z1_pre) ** 2 - 2.0 * y_pre * z2_pre if z1_pre < 1.0 else -np.inf
    return {"nu": nu, "feasible": bool(feasible), "Y": y_pre, "Z1": z1_pre,
            "Z2": z2_pre, "margin": float(margin)}


def _pack_norm_f(A_cheb: np.ndarray, K: int, nu: float) -> float:
    """Float operator norm of the interpolated finite part (column sums)."""
    w = nu ** np.arange(A_cheb.shape[-1])
    w[1:] *= 2.0
    ent = np.sum(np.abs(A_cheb) * w, axis=-1)
    return float(np.max(np.sum(ent, axis=0)))


def select_nu(branch, pack, fm, candidates, R: float) -> tuple[float, list]:
    """Pick the weight with the best float contraction margin."""
    results = []
    for nu in candidates:
        results.append(preview_bounds(branch, pack, fm, float(nu), R))
    feasible = [r for r in results if r["feasible"]]
    if not feasible:
        raise NoViableNu(f"no candidate in {list(candidates)} passes the preview")
    best = max(feasible, key=lambda r: (r["margin"], r["nu"]))
    return best["nu"], results
