"""scikit-learn style wrappers around the functional solver and harness.

The inputs are :class:`SchrodingerProblem` objects rather than arrays, so
only the parameter handling (``get_params`` / ``set_params`` / ``clone``) and
the ``fit`` / trailing-underscore conventions carry over.
"""

import numbers
import warnings

from sklearn.base import BaseEstimator
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

from .ipfp_core import DEFAULT_TOL, SchrodingerProblem, run_ipfp
from .stability import bridge_stability, run_stability_experiment


def _check_int(value, name, low=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < low:
        raise ValueError(f"{name} must be an integer >= {low}, got {value!r}")


def _check_tol(value, name="tol"):
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not value >= 0:
        raise ValueError(f"{name} must be a real >= 0, got {value!r}")


def _check_problem(problem, name="problem"):
    if not isinstance(problem, SchrodingerProblem):
        raise TypeError(f"{name} must be a SchrodingerProblem, got {type(problem).__name__}")


class IPFPSolver(BaseEstimator):
    """Run IPFP until the X-marginal L1 error drops below ``tol``.

    Parameters
    ----------
    max_iters : int, default=1000
    tol : float, default=1e-10
        ``0`` runs all ``max_iters`` sweeps.

    Attributes
    ----------
    result_ : IPFPResult
    potentials_ : PotentialPair
        Final normalized log-potentials.
    coupling_ : Coupling
        Final even coupling.
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, max_iters=1000, tol=DEFAULT_TOL):
        self.max_iters = max_iters
        self.tol = tol

    def fit(self, problem, y=None):
        _check_int(self.max_iters, "max_iters")
        _check_tol(self.tol)
        _check_problem(problem)
        self.result_ = run_ipfp(problem, self.max_iters, self.tol)
        self.potentials_ = self.result_.final_pair
        self.coupling_ = self.result_.coupling
        self.n_iter_ = self.result_.n_iter
        self.converged_ = self.result_.converged
        if not self.converged_ and self.tol > 0:
            warnings.warn(f"IPFP stopped at the cap of {self.max_iters} sweeps before tol={self.tol}",
                          ConvergenceWarning, stacklevel=2)
        return self


class StabilityExperiment(BaseEstimator):
    """Paired runs of two problems with every stability bound checked.

    Parameters
    ----------
    iters : int, default=50
        Sweeps per run; rows n = 1..iters.
    bridge_tol : float or None, default=None
        When set, also compare the converged bridges (see
        :func:`bridge_stability`).
    bridge_max_iters : int, default=100000

    Attributes
    ----------
    report_ : StabilityReport
    bridge_ : BridgeRow or None
    ok_ : bool
        No hard violation in the report, and the bridge check holds if run.
    """

    def __init__(self, iters=50, bridge_tol=None, bridge_max_iters=100_000):
        self.iters = iters
        self.bridge_tol = bridge_tol
        self.bridge_max_iters = bridge_max_iters

    def fit(self, problem, perturbed):
        _check_int(self.iters, "iters")
        _check_problem(problem)
        _check_problem(perturbed, "perturbed")
        self.report_ = run_stability_experiment(problem, perturbed, self.iters)
        self.bridge_ = None
        if self.bridge_tol is not None:
            _check_tol(self.bridge_tol, "bridge_tol")
            _check_int(self.bridge_max_iters, "bridge_max_iters")
            self.bridge_ = bridge_stability(problem, perturbed, self.bridge_tol,
                                            self.bridge_max_iters)
        bridge_ok = self.bridge_ is None or self.bridge_.holds or self.report_.advisory
        self.ok_ = self.report_.ok and bridge_ok
        return self

    @property
    def violations_(self):
        check_is_fitted(self, "report_")
        return self.report_.violations
