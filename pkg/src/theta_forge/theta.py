"""Truncated theta series with characteristics, their derivatives, and the
squared classical multiplier.

The series convention is exp(t) = e^{2 pi i t} throughout:

    theta_m(tau, z) = sum_n exp( (1/2) (n+m'/2) tau (n+m'/2) + (n+m'/2) (z+m''/2) )

summed over an axis-aligned box of shifted lattice points.  The box radius
is chosen from a rigorous Gaussian tail bound driven by the smallest
eigenvalue of Im(tau); derivatives are always termwise (each lattice point
contributes polynomial weights), never finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._kernels import theta_sum
from .errors import ConvergenceError, DegenerateBasePointError, DomainError
from .symplectic import (
    Characteristic,
    SiegelPoint,
    SymplecticElement,
    act_on_tau,
    even_characteristics,
    membership,
    parity,
    phi_factor,
)

_MAX_RADIUS = 24
_ONE_DIM_SPAN = 64


@dataclass(frozen=True)
class TruncationPolicy:
    """Controls the lattice box used for every series evaluation.

    ``radius`` is a floor; the evaluator raises it until the summed tail
    bound outside the box clears ``target_tol``.  With ``adaptive`` on, the
    evaluation is repeated with the radius increased by 2 and the change is
    required to stay below ``target_tol / 10``.
    """

    radius: int = 1
    target_tol: float = 1e-12
    adaptive: bool = True

    def __post_init__(self):
        if self.radius < 1:
            raise DomainError("policy radius must be >= 1")
        if not self.target_tol > 0:
            raise DomainError("target_tol must be positive")


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class ThetaValue:
    value: complex
    gradient_z: np.ndarray | None
    tau_derivative: np.ndarray | None
    est_tail: float


@lru_cache(maxsize=512)
def _lattice(g: int, radius: int, m_prime: tuple[int, ...]) -> np.ndarray:
    """Shifted lattice points n + m'/2 with every |coordinate| <= radius,
    rows in lexicographic order of n."""
    axes = []
    for u in m_prime:
        if u == 0:
            ns = np.arange(-radius, radius + 1, dtype=float)
        else:
            ns = np.arange(-radius, radius, dtype=float) + 0.5
        axes.append(ns)
    grids = np.meshgrid(*axes, indexing="ij")
    P = np.stack([gr.reshape(-1) for gr in grids], axis=-1)
    P.setflags(write=False)
    return P


def _one_dim_sums(lam: float, b: float, half_offset: bool, radius: int, weighted: bool):
    """Full and tail sums of the per-coordinate envelope.

    The envelope dominates |term| contributions per coordinate; with
    ``weighted`` it carries the factor (2 + 2 pi x^2), which bounds every
    termwise derivative weight used here (2 pi |x| and pi |x_a x_b| alike).
    """
    u = 0.5 if half_offset else 0.0
    total = 0.0
    tail = 0.0
    for j in range(-_ONE_DIM_SPAN, _ONE_DIM_SPAN + 1):
        x = j + u
        w = (2.0 + 2.0 * np.pi * x * x) if weighted else 1.0
        term = w * np.exp(-np.pi * lam * x * x + 2.0 * np.pi * b * abs(x))
        total += term
        if abs(x) > radius:
            tail += term
    # mass beyond the summation span must be immaterial at any certified tolerance
    edge = (2.0 + 2.0 * np.pi * _ONE_DIM_SPAN**2) * np.exp(
        -np.pi * lam * _ONE_DIM_SPAN**2 + 2.0 * np.pi * b * _ONE_DIM_SPAN
    )
    if edge > 1e-30:
        raise ConvergenceError("tail bound unreliable: envelope too flat")
    return total, tail


def _tail_bound(lam, b, m_prime, radius, weighted):
    per_coord = [
        _one_dim_sums(lam, b, u == 1, radius, weighted) for u in m_prime
    ]
    bound = 0.0
    for i in range(len(per_coord)):
        prod = per_coord[i][1]
        for j in range(len(per_coord)):
            if j != i:
                prod *= per_coord[j][0]
        bound += prod
    return bound


def _choose_radius(lam, b, m_prime, policy: TruncationPolicy, weighted):
    goal = policy.target_tol / 20.0 if policy.adaptive else policy.target_tol
    radius = max(policy.radius, 1)
    while radius <= _MAX_RADIUS:
        bound = _tail_bound(lam, b, m_prime, radius, weighted)
        if bound < goal:
            return radius, bound
        radius += 1
    raise ConvergenceError(
        f"no radius <= {_MAX_RADIUS} reaches target_tol={policy.target_tol:g} "
        f"(lambda_min={lam:.3g})"
    )


@lru_cache(maxsize=8192)
def _eval_cached(m_key, tau_bytes, z_bytes, g, policy: TruncationPolicy, want_grad, want_dtau):
    m_prime, m_double = m_key
    tau = np.frombuffer(tau_bytes, dtype=complex).reshape(g, g)
    z = np.frombuffer(z_bytes, dtype=complex)
    lam = float(np.linalg.eigvalsh(tau.imag)[0])
    if lam <= 0:
        raise DomainError("imaginary part of tau is not positive definite")
    b = float(np.linalg.norm(z.imag))
    weighted = want_grad or want_dtau
    y = z + np.asarray(m_double, dtype=float) / 2.0

    radius, bound = _choose_radius(lam, b, m_prime, policy, weighted)
    val, grad, dtau = theta_sum(
        _lattice(g, radius, m_prime), tau, y, weighted, want_dtau
    )
    if policy.adaptive:
        val2, grad2, dtau2 = theta_sum(
            _lattice(g, radius + 2, m_prime), tau, y, weighted, want_dtau
        )
        change = abs(val2 - val)
        if weighted:
            change = max(change, float(np.max(np.abs(grad2 - grad))))
        if want_dtau:
            change = max(change, float(np.max(np.abs(dtau2 - dtau))))
        if change > policy.target_tol / 10.0:
            raise ConvergenceError(
                f"adaptive refinement moved the value by {change:g} "
                f"(> {policy.target_tol / 10.0:g}) at radius {radius}"
            )
        val, grad, dtau = val2, grad2, dtau2
        bound = _tail_bound(lam, b, m_prime, radius + 2, weighted)
    if want_dtau:
        # mirror the upper triangle: symmetric bit-for-bit by construction
        dtau = np.triu(dtau) + np.triu(dtau, 1).T
    grad.setflags(write=False)
    dtau.setflags(write=False)
    return val, grad, dtau, float(bound)


def _coerce_tau(tau) -> np.ndarray:
    if isinstance(tau, SiegelPoint):
        return tau.tau
    return SiegelPoint(np.asarray(tau, dtype=complex)).tau


def _evaluate(m, tau, z, policy, want_grad, want_dtau):
    tau_arr = np.ascontiguousarray(_coerce_tau(tau))
    g = tau_arr.shape[0]
    if m.g != g:
        raise DomainError(f"characteristic genus {m.g} != tau genus {g}")
    if z is None:
        z_arr = np.zeros(g, dtype=complex)
    else:
        z_arr = np.ascontiguousarray(np.asarray(z, dtype=complex).reshape(g))
    return _eval_cached(
        (m.m_prime, m.m_double_prime),
        tau_arr.tobytes(),
        z_arr.tobytes(),
        g,
        policy or DEFAULT_POLICY,
        bool(want_grad),
        bool(want_dtau),
    )


def theta_eval(
    m: Characteristic,
    tau,
    z=None,
    policy: TruncationPolicy | None = None,
    *,
    want_gradient: bool = False,
    want_tau_derivative: bool = False,
) -> ThetaValue:
    """Evaluate the theta series, optionally with termwise derivatives.

    The gradient slot holds the z-gradient; the tau slot holds the full
    matrix of weighted tau-derivatives (the operator with the halved
    off-diagonal entries), whose termwise weight is pi*i * p_a p_b.
    """
    val, grad, dtau, tail = _evaluate(m, tau, z, policy, want_gradient, want_tau_derivative)
    return ThetaValue(
        value=val,
        gradient_z=grad if want_gradient else None,
        tau_derivative=dtau if want_tau_derivative else None,
        est_tail=tail,
    )


def theta_gradient(n: Characteristic, tau, policy: TruncationPolicy | None = None) -> np.ndarray:
    """z-gradient of the theta function at z = 0 for an odd characteristic."""
    if parity(n) != 1:
        raise DomainError("gradient at z=0 vanishes identically for even characteristics")
    _, grad, _, _ = _evaluate(n, tau, None, policy, True, False)
    return grad


def theta_tau_derivative(
    m: Characteristic, tau, z=None, policy: TruncationPolicy | None = None
) -> np.ndarray:
    """The weighted tau-derivative matrix applied to the theta series.

    Entry (a, b) applies d/d tau_{ab}, halved off the diagonal, so the
    matrix is the natural symmetric gradient with respect to a symmetric
    argument.
    """
    _, _, dtau, _ = _evaluate(m, tau, z, policy, False, True)
    return dtau


def second_order_theta(
    eps,
    tau,
    z=None,
    policy: TruncationPolicy | None = None,
    *,
    want_gradient: bool = False,
    want_tau_derivative: bool = False,
) -> ThetaValue:
    """Second-order theta: the (eps; 0) series evaluated at (2 tau, 2 z).

    Derivative slots are reported with respect to the outer (tau, z)
    variables, so both pick up the chain-rule factor 2.
    """
    eps = tuple(int(x) for x in eps)
    if any(x not in (0, 1) for x in eps):
        raise DomainError("second-order label entries must be 0 or 1")
    tau_arr = _coerce_tau(tau)
    g = tau_arr.shape[0]
    if len(eps) != g:
        raise DomainError(f"label length {len(eps)} != genus {g}")
    m = Characteristic(eps, (0,) * g)
    z_arr = np.zeros(g, dtype=complex) if z is None else np.asarray(z, dtype=complex)
    inner = theta_eval(
        m,
        SiegelPoint(2 * tau_arr),
        2 * z_arr,
        policy,
        want_gradient=want_gradient,
        want_tau_derivative=want_tau_derivative,
    )
    return ThetaValue(
        value=inner.value,
        gradient_z=None if inner.gradient_z is None else 2 * inner.gradient_z,
        tau_derivative=None if inner.tau_derivative is None else 2 * inner.tau_derivative,
        est_tail=inner.est_tail,
    )


def _det_cd(gamma: SymplecticElement, tau_arr: np.ndarray) -> complex:
    den = gamma.C.astype(float) @ tau_arr + gamma.D.astype(float)
    return complex(np.linalg.det(den))


def kappa_squared(
    gamma: SymplecticElement, tau, policy: TruncationPolicy | None = None
) -> complex:
    """The squared theta multiplier of a level-2 group element.

    Measured from the even-characteristic transformation law in squared
    form, so no square-root branch of det(C tau + D) is ever chosen.  The
    measurement is repeated over three even characteristics and two base
    points and must agree to 1e-8.
    """
    if not membership(gamma, "Gamma(2)"):
        raise DomainError("kappa_squared requires an element of Gamma(2)")
    tau_arr = _coerce_tau(tau)
    g = gamma.g
    points = [SiegelPoint(tau_arr), SiegelPoint(tau_arr + 0.3j * np.eye(g))]
    samples = []
    for point in points:
        image = act_on_tau(gamma, point)
        det_cd = _det_cd(gamma, point.tau)
        used = 0
        for m in even_characteristics(g):
            base = theta_eval(m, point, None, policy).value
            if abs(base) < 1e-6:
                continue
            moved = theta_eval(m, image, None, policy).value
            phi2 = phi_factor(m, gamma) ** 2
            samples.append(moved**2 / (phi2 * det_cd * base**2))
            used += 1
            if used == 3:
                break
        if used == 0:
            raise DegenerateBasePointError(
                "all even theta constants vanish at the probe base point"
            )
    mean = sum(samples) / len(samples)
    spread = max(abs(s - mean) for s in samples)
    if spread > 1e-8 * max(1.0, abs(mean)):
        raise ConvergenceError(
            f"kappa^2 probes disagree by {spread:g}; transformation law violated"
        )
    return mean


def min_im_eigenvalue(tau) -> float:
    """Smallest eigenvalue of Im(tau); governs the reachable tolerance."""
    return float(np.linalg.eigvalsh(_coerce_tau(tau).imag)[0])


def clear_caches():
    """Drop memoized lattice boxes and series values (mainly for tests)."""
    _lattice.cache_clear()
    _eval_cached.cache_clear()
