"""IPFP (Sinkhorn) on normalized log-potentials.

One step maps the pair ``(phi_n, psi_n)`` to ``(phi_{n+1}, psi_{n+1})``::

    L(x)       = log sum_y exp(-c(x, y) + psi_n(y)) pi1(y)
    phi_{n+1}  = -L + sum_x L(x) pi0(x)
    psi_{n+1}  = -log sum_x exp(-c(x, y) + phi_{n+1}(x)) pi0(x)

so ``phi`` is mean-zero under ``pi0`` and the even coupling is
``P^{2n} = exp(phi_n + psi_n - c) pi0 (x) pi1``. The centering constants are
accumulated in ``PotentialPair.log_a`` so that the odd couplings, which mix
indices n+1 and n, can be rebuilt exactly.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from ._validation import frozen
from .cost_kernel import seq_logsumexp
from .metric_measure import lipschitz_on_space

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10

TRAJECTORY_COLUMNS = ("n", "marginal_err", "dH_f_step", "dH_g_step",
                      "phi_sup", "psi_sup", "phi_lip", "psi_lip")


def _seq_sum(a):
    a = np.asarray(a, dtype=np.float64).ravel()
    return float(np.cumsum(a)[-1]) if a.size else 0.0


def _osc(a):
    return float(np.max(a) - np.min(a))


@dataclass(frozen=True, eq=False)
class SchrodingerProblem:
    """Marginals ``pi0``, ``pi1`` and a cost on their spaces.

    Zero-weight atoms stay in the spaces (potentials are extended to them by
    the integral formulas) but take no part in any sum.
    """

    pi0: object
    pi1: object
    cost: object
    kernel: object = field(init=False, repr=False)

    def __post_init__(self):
        if not self.pi0.space.same_as(self.cost.space_x):
            raise ValueError("pi0 lives on a different space than the cost's X")
        if not self.pi1.space.same_as(self.cost.space_y):
            raise ValueError("pi1 lives on a different space than the cost's Y")
        for name, mu in (("pi0", self.pi0), ("pi1", self.pi1)):
            if not mu.is_strictly_positive():
                zeros = np.flatnonzero(mu.weights == 0).tolist()
                logger.warning("%s has zero-weight atoms %s; they are excluded from the support",
                               name, zeros)
        object.__setattr__(self, "kernel", self.cost.kernel())

    @property
    def shape(self):
        return self.cost.shape

    def with_marginals(self, pi0, pi1):
        return SchrodingerProblem(pi0, pi1, self.cost)


@dataclass(frozen=True, eq=False)
class PotentialPair:
    """Normalized log-potentials ``(phi_n, psi_n)``.

    ``log_a`` is the running sum of centering constants: the raw potentials
    are ``phi_n - log_a`` and ``psi_n + log_a``.
    """

    phi: np.ndarray
    psi: np.ndarray
    n: int = 0
    log_a: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phi", frozen(self.phi))
        object.__setattr__(self, "psi", frozen(self.psi))

    @classmethod
    def initial(cls, problem):
        m, k = problem.shape
        return cls(np.zeros(m), np.zeros(k), 0, 0.0)

    @property
    def f(self):
        return np.exp(self.phi)

    @property
    def g(self):
        return np.exp(self.psi)


@dataclass(frozen=True, eq=False)
class Coupling:
    """Joint weights on the X x Y grid for the iterate ``P^index``.

    ``total_mass`` is 1 up to rounding for ``index >= 1``; ``P^0`` is the
    reference measure and generally is not a probability.
    """

    table: np.ndarray
    index: int
    space_x: object = field(repr=False)
    space_y: object = field(repr=False)
    total_mass: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "table", frozen(self.table))

    @property
    def parity(self):
        return "even" if self.index % 2 == 0 else "odd"

    def marginal(self, axis):
        # axis 0 -> marginal on X (row sums), axis 1 -> marginal on Y
        t = self.table if axis == 0 else self.table.T
        return np.cumsum(t, axis=1)[:, -1]


def ipfp_step(problem, pair):
    """Advance ``pair`` (index n) by one IPFP sweep to index n + 1."""
    neg_c = problem.kernel.log_kernel
    L = seq_logsumexp(neg_c + pair.psi[None, :], axis=1, b=problem.pi1.weights[None, :])
    shift = _seq_sum(L * problem.pi0.weights)
    phi = shift - L
    psi = -seq_logsumexp(neg_c + phi[:, None], axis=0, b=problem.pi0.weights[:, None])
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(psi)) and np.isfinite(shift)):
        raise FloatingPointError(f"non-finite potential at step {pair.n + 1}; check the cost table")
    return PotentialPair(phi, psi, pair.n + 1, pair.log_a + shift)


def _coupling(problem, log_density, index):
    # weights multiply in linear space so a unit density gives pi0 (x) pi1 exactly
    density = np.exp(log_density + problem.kernel.log_kernel)
    table = density * problem.pi0.weights[:, None] * problem.pi1.weights[None, :]
    return Coupling(table, index, problem.cost.space_x, problem.cost.space_y, _seq_sum(table))


def coupling_even(problem, pair):
    """``P^{2n}`` with density ``exp(phi_n + psi_n) K`` against ``pi0 (x) pi1``."""
    return _coupling(problem, pair.phi[:, None] + pair.psi[None, :], 2 * pair.n)


def coupling_odd(problem, pair_next, pair):
    """``P^{2n+1}`` from ``phi_{n+1}`` (in ``pair_next``) and ``psi_n`` (in ``pair``)."""
    if pair_next.n != pair.n + 1:
        raise ValueError(f"expected consecutive pairs, got n={pair.n} and n={pair_next.n}")
    shift = pair_next.log_a - pair.log_a
    # raw potentials: phi~_{n+1} = phi_{n+1} - log_a_{n+1}, psi~_n = psi_n + log_a_n
    log_density = (pair_next.phi - shift)[:, None] + pair.psi[None, :]
    return _coupling(problem, log_density, 2 * pair.n + 1)


def marginal_error(coupling, target, axis):
    """L1 distance between the coupling's marginal on ``axis`` and ``target``."""
    got = coupling.marginal(axis)
    if got.shape[0] != target.n_points:
        raise ValueError(f"marginal has {got.shape[0]} atoms, target has {target.n_points}")
    return _seq_sum(np.abs(got - target.weights))


@dataclass(frozen=True)
class DiagnosticRow:
    n: int
    marginal_err: float
    dH_f_step: float
    dH_g_step: float
    phi_sup: float
    psi_sup: float
    phi_lip: float
    psi_lip: float

    def values(self):
        return tuple(getattr(self, c) for c in TRAJECTORY_COLUMNS)


@dataclass(frozen=True, eq=False)
class IPFPResult:
    """Trajectory ``pairs[0..n_iter]`` plus one diagnostic row per sweep n >= 1.

    ``dH_f_step`` on row n is the Hilbert distance between ``f_n`` and
    ``f_{n-1}``; ``marginal_err`` is the L1 error of the X-marginal of
    ``P^{2n}``, the one the last half-step did not fix.
    """

    problem: SchrodingerProblem = field(repr=False)
    pairs: tuple = field(repr=False)
    diagnostics: tuple = field(repr=False)
    converged: bool = False
    tol: float = DEFAULT_TOL

    @property
    def n_iter(self):
        return len(self.pairs) - 1

    @property
    def final_pair(self):
        return self.pairs[-1]

    @property
    def coupling(self):
        return coupling_even(self.problem, self.pairs[-1])

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for row in self.diagnostics:
            w.writerow([row.n] + [repr(float(v)) for v in row.values()[1:]])


def run_ipfp(problem, max_iters, tol=DEFAULT_TOL):
    """Iterate until ``max_iters`` sweeps or X-marginal L1 error below ``tol``.

    ``tol=0`` always runs the full ``max_iters`` sweeps. Non-convergence is
    reported through ``IPFPResult.converged``, never raised.
    """
    max_iters = int(max_iters)
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    sx, sy = problem.cost.space_x, problem.cost.space_y
    pair = PotentialPair.initial(problem)
    pairs = [pair]
    rows = []
    converged = False
    for _ in range(max_iters):
        nxt = ipfp_step(problem, pair)
        err = marginal_error(coupling_even(problem, nxt), problem.pi0, axis=0)
        rows.append(DiagnosticRow(
            n=nxt.n,
            marginal_err=err,
            dH_f_step=_osc(nxt.phi - pair.phi),
            dH_g_step=_osc(nxt.psi - pair.psi),
            phi_sup=float(np.abs(nxt.phi).max()),
            psi_sup=float(np.abs(nxt.psi).max()),
            phi_lip=lipschitz_on_space(nxt.phi, sx),
            psi_lip=lipschitz_on_space(nxt.psi, sy),
        ))
        pairs.append(nxt)
        pair = nxt
        if err < tol:
            converged = True
            break
    return IPFPResult(problem, tuple(pairs), tuple(rows), converged, tol)
