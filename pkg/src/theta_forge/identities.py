"""Named end-to-end identity checks, each reducing to a residual record.

Every check evaluates two independent computational paths and reports the
maximum relative deviation.  Constants that the constructions leave
implicit (the one-dimensional derivative-formula normalization, the
expansion constant of the gradient/second-order identity) are fitted from
the data and compared to their derived closed forms afterwards, never
assumed up front.

Normalization bridge used throughout: the Wronskian-type A-forms here are
built from the halved tau-derivative matrix; the classical statements of
the gradient identities use z-Hessian-normalized forms instead, which by
the heat equation (with the doubled argument of the second-order series)
are exactly 8*pi*i times ours.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .forms import (
    A_form,
    MultiplierSpec,
    ThetaProduct,
    W_of_N,
    audit_transformation,
    partial_bracket,
    pairing_bracket,
    pairing_brace,
    second_order_product,
    theta_constant_product,
)
from .multilinear import (
    box_many,
    box_power,
    cofactor_tensor,
    compound,
    from_matrix,
    star_product,
    submatrix_det,
    wedge_outer,
    _det_exact,
)
from .indexkit import IndexSet, enumerate_subsets, sign_sum
from .symplectic import (
    Characteristic,
    SiegelPoint,
    act_on_tau,
    all_characteristics,
    even_characteristics,
    generate_subgroup_element,
    odd_characteristics,
    sample_siegel_point,
)
from .theta import (
    TruncationPolicy,
    kappa_squared,
    min_im_eigenvalue,
    second_order_theta,
    theta_eval,
    theta_gradient,
    theta_tau_derivative,
)

# z-Hessian normalization of the A-forms over the halved-tau-derivative one
HESSIAN_BRIDGE = 8j * np.pi

SCHEMA_VERSION = "theta-forge/report/1"


@dataclass(frozen=True)
class IdentityReport:
    identity_name: str
    genus: int
    params: dict
    residual: float
    tolerance: float
    passed: bool
    runtime_ms: float
    seed: int

    def to_dict(self, embed_timings: bool = False) -> dict:
        return {
            "identity_name": self.identity_name,
            "genus": self.genus,
            "params": self.params,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "runtime_ms": self.runtime_ms if embed_timings else 0.0,
            "seed": self.seed,
        }


def _report(name, genus, params, residual, tolerance, seed, started) -> IdentityReport:
    residual = float(residual)
    return IdentityReport(
        identity_name=name,
        genus=genus,
        params=params,
        residual=residual,
        tolerance=float(tolerance),
        passed=bool(residual < tolerance),
        runtime_ms=(time.perf_counter() - started) * 1e3,
        seed=int(seed),
    )


def _rel(lhs: np.ndarray, rhs: np.ndarray) -> float:
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))), 1e-30)
    return float(np.max(np.abs(lhs - rhs)) / scale)


def _cplx(value: complex) -> list[float]:
    return [float(np.real(value)), float(np.imag(value))]


def _bits_label(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def _second_order_A(eps, delta, tau, policy) -> np.ndarray:
    f = second_order_product(len(eps), tuple(eps))
    h = second_order_product(len(delta), tuple(delta))
    return A_form(f, h, tau, policy).matrix.entries


# ---------------------------------------------------------------------------
# gradient / second-order identities


def check_gsm_forward(
    n: Characteristic,
    tau: SiegelPoint,
    policy: TruncationPolicy | None = None,
    tolerance: float = 1e-8,
    seed: int = 0,
) -> IdentityReport:
    """Gradient outer product against the alternating A-form sum."""
    started = time.perf_counter()
    if not n.is_odd:
        raise DomainError("forward check needs an odd characteristic")
    g = n.g
    v = theta_gradient(n, tau, policy)
    lhs = np.outer(v, v)
    eps, delta = n.m_prime, n.m_double_prime
    rhs = np.zeros((g, g), dtype=complex)
    for alpha in itertools.product((0, 1), repeat=g):
        sgn = -1 if sum(a * d for a, d in zip(alpha, delta)) % 2 else 1
        shifted = tuple((e + a) % 2 for e, a in zip(eps, alpha))
        rhs = rhs + sgn * _second_order_A(shifted, alpha, tau, policy)
    rhs = (HESSIAN_BRIDGE / 4.0) * rhs
    return _report(
        "gsm_forward",
        g,
        {"n": n.label()},
        _rel(lhs, rhs),
        tolerance,
        seed,
        started,
    )


def check_gsm_backward(
    eps,
    delta,
    tau: SiegelPoint,
    policy: TruncationPolicy | None = None,
    tolerance: float = 1e-8,
    seed: int = 0,
) -> IdentityReport:
    """A-form against the signed sum of gradient outer products."""
    started = time.perf_counter()
    eps = tuple(int(x) for x in eps)
    delta = tuple(int(x) for x in delta)
    g = len(eps)
    lhs = _second_order_A(eps, delta, tau, policy)
    epd = tuple((a + b) % 2 for a, b in zip(eps, delta))
    acc = np.zeros((g, g), dtype=complex)
    for alpha in itertools.product((0, 1), repeat=g):
        n_alpha = Characteristic(epd, alpha)
        if not n_alpha.is_odd:
            continue
        sgn = -1 if sum(a * d for a, d in zip(alpha, delta)) % 2 else 1
        v = theta_gradient(n_alpha, tau, policy)
        acc = acc + sgn * np.outer(v, v)
    rhs = acc * (2.0 ** (-(g - 2)) / HESSIAN_BRIDGE)
    return _report(
        "gsm_backward",
        g,
        {"eps": _bits_label(eps), "delta": _bits_label(delta)},
        _rel(lhs, rhs),
        tolerance,
        seed,
        started,
    )


def check_jacobi(
    genus: int,
    taus,
    policy: TruncationPolicy | None = None,
    tolerance: float = 1e-8,
    seed: int = 0,
) -> IdentityReport:
    """Derivative-formula checks: fitted constants must be base-point free.

    genus 1 fits the single proportionality constant between the odd
    gradient and the product of the three even constants; genus 2 fits,
    for each pair of odd characteristics, the ratio of the gradient
    Jacobian to the complementary quartic product of constants.
    """
    started = time.perf_counter()
    taus = list(taus)
    if genus == 1:
        n = Characteristic((1,), (1,))
        evens = [Characteristic((0,), (0,)), Characteristic((1,), (0,)), Characteristic((0,), (1,))]
        cs = []
        for t in taus:
            v = theta_gradient(n, t, policy)[0]
            prod = 1.0 + 0j
            for m in evens:
                prod *= theta_eval(m, t, None, policy).value
            cs.append(v / prod)
        mean = sum(cs) / len(cs)
        residual = max(abs(c - mean) for c in cs) / max(1.0, abs(mean))
        # frozen after fitting: the gradient is -pi times the triple product
        # of even constants in this series convention
        params = {
            "fitted_constant": _cplx(mean),
            "expected_constant": _cplx(-np.pi),
            "constant_error": float(abs(mean + np.pi) / np.pi),
            "base_points": len(taus),
        }
        return _report("jacobi", 1, params, residual, tolerance, seed, started)
    if genus == 2:
        odds = list(odd_characteristics(2))
        worst = 0.0
        mags = []
        for n1, n2 in itertools.combinations(odds, 2):
            others = [n for n in odds if n not in (n1, n2)]
            quartic = [n1 + n2 + n for n in others]
            ratios = []
            for t in taus:
                V = np.array([theta_gradient(n1, t, policy), theta_gradient(n2, t, policy)])
                num = complex(np.linalg.det(V))
                den = 1.0 + 0j
                for m in quartic:
                    den *= theta_eval(m, t, None, policy).value
                ratios.append(num / den)
            mean = sum(ratios) / len(ratios)
            worst = max(worst, max(abs(r - mean) for r in ratios) / max(1.0, abs(mean)))
            mags.append(abs(mean))
        params = {
            "pairs": len(list(itertools.combinations(odds, 2))),
            "mean_ratio_magnitude": float(np.mean(mags)),
            "base_points": len(taus),
        }
        return _report("jacobi", 2, params, worst, tolerance, seed, started)
    raise DomainError("jacobi check defined for genus 1 and 2 only")


def _main_theorem_sides(g, k, pairs, tau, policy):
    mats = [
        from_matrix(_second_order_A(e, d, tau, policy)) for (e, d) in pairs
    ]
    lhs = star_product(*mats).entries
    rhs = None
    slot_options = []
    for (e, d) in pairs:
        epd = tuple((a + b) % 2 for a, b in zip(e, d))
        opts = []
        for alpha in itertools.product((0, 1), repeat=g):
            n_alpha = Characteristic(epd, alpha)
            if n_alpha.is_odd:
                sgn = -1 if sum(a * b for a, b in zip(alpha, d)) % 2 else 1
                opts.append((sgn, n_alpha))
        slot_options.append(opts)
    for combo in itertools.product(*slot_options):
        chars = [c for _, c in combo]
        if len(set(chars)) < len(chars):
            continue  # repeated gradient: the wedge vanishes identically
        sgn = 1
        for s, _ in combo:
            sgn *= s
        term = W_of_N(chars, tau, policy).matrix.entries
        rhs = sgn * term if rhs is None else rhs + sgn * term
    if rhs is None:
        rhs = np.zeros_like(lhs)
    return lhs, rhs


def check_main_theorem(
    g: int,
    k: int,
    pairs,
    taus,
    policy: TruncationPolicy | None = None,
    tolerance: float = 1e-7,
    seed: int = 0,
) -> IdentityReport:
    """Fit the constant linking the A-form star product to the W-form sum.

    The constant must be independent of the matrix entry and the base
    point; the derived closed form is (-i pi / 2^(g+1))^k / k!.
    """
    started = time.perf_counter()
    if not 1 <= k < g:
        raise DomainError(f"need 1 <= k < g, got k={k}, g={g}")
    pairs = [
        (tuple(int(x) for x in e), tuple(int(x) for x in d)) for (e, d) in pairs
    ]
    if len(pairs) != k:
        raise DomainError(f"need exactly k={k} label pairs")
    taus = list(taus)
    ratios = []
    sides = []
    for t in taus:
        lhs, rhs = _main_theorem_sides(g, k, pairs, t, policy)
        sides.append((lhs, rhs))
        cutoff = 1e-6 * float(np.max(np.abs(rhs)))
        mask = np.abs(rhs) > max(cutoff, 1e-30)
        ratios.extend((lhs[mask] / rhs[mask]).tolist())
    if not ratios:
        raise DomainError("degenerate label pairs: both sides vanish identically")
    c = complex(np.mean(ratios))
    spread = max(abs(r - c) for r in ratios) / max(1.0, abs(c))
    residual = spread
    for lhs, rhs in sides:
        scale = max(float(np.max(np.abs(lhs))), 1e-30)
        residual = max(residual, float(np.max(np.abs(lhs - c * rhs)) / scale))
    expected = (-1j * np.pi / 2 ** (g + 1)) ** k / math.factorial(k)
    params = {
        "k": k,
        "pairs": [[_bits_label(e), _bits_label(d)] for (e, d) in pairs],
        "fitted_constant": _cplx(c),
        "expected_constant": _cplx(expected),
        "constant_error": float(abs(c - expected) / abs(expected)),
        "base_points": len(taus),
    }
    return _report("main_theorem", g, params, residual, tolerance, seed, started)


def check_omega_consistency(
    g: int,
    F: ThetaProduct,
    H: ThetaProduct,
    tau: SiegelPoint,
    policy: TruncationPolicy | None = None,
    tolerance: float = 1e-8,
    seed: int = 0,
) -> IdentityReport:
    """Top-order pairing of (g-1)-th powers against the scaled cofactor matrix."""
    started = time.perf_counter()
    if g < 2:
        raise DomainError("needs genus >= 2")
    lhs = pairing_bracket(F.power(g - 1), H.power(g - 1), g - 1, tau, policy)
    A = A_form(F, H, tau, policy).matrix.entries
    rhs = cofactor_tensor(A, 1).scale(float(math.factorial(g - 1)))
    return _report(
        "omega_consistency",
        g,
        {"F": F.label(), "H": H.label()},
        _rel(lhs.entries, rhs.entries),
        tolerance,
        seed,
        started,
    )


# ---------------------------------------------------------------------------
# exact rational layer


def _rand_exact_matrix(rng, g, lo=-5, hi=6) -> np.ndarray:
    M = np.empty((g, g), dtype=object)
    ints = rng.integers(lo, hi, (g, g))
    for i in range(g):
        for j in range(g):
            M[i, j] = Fraction(int(ints[i, j]))
    return M


def _rand_exact_vector(rng, g, lo=-5, hi=6) -> np.ndarray:
    v = np.empty(g, dtype=object)
    for i in range(g):
        v[i] = Fraction(int(rng.integers(lo, hi)))
    return v


def check_exact_layer(
    instances: int = 60, seed: int = 0, genus_range=(2, 3, 4)
) -> list[IdentityReport]:
    """Exact Fraction arithmetic checks of the multilinear layer.

    Each identity is evaluated with zero tolerance: any mismatch flips the
    residual to 1.0.  Reported tolerance is epsilon-level because the
    pass predicate is a strict inequality.
    """
    rng = np.random.default_rng([seed, 97])
    started = time.perf_counter()
    fails = {name: 0 for name in (
        "exact_laplace_expansion",
        "exact_compound_power",
        "exact_sigma_determinant",
        "exact_adjoint_identity",
        "exact_rank_one_wedge",
        "exact_binomial_power",
    )}
    for _ in range(instances):
        g = int(rng.choice(genus_range))
        M = _rand_exact_matrix(rng, g)

        # generalized Laplace expansion along random column set, then row set
        k = int(rng.integers(1, g))
        det_full = _det_exact(M)
        for transpose in (False, True):
            src = M.T.copy() if transpose else M
            J = IndexSet(tuple(sorted(rng.choice(g, k, replace=False) + 1)), g)
            total = Fraction(0)
            for I in enumerate_subsets(g, k):
                total += (
                    sign_sum(I, J)
                    * submatrix_det(src, I, J)
                    * submatrix_det(src, I.complement(), J.complement())
                )
            if total != det_full:
                fails["exact_laplace_expansion"] += 1

        # repeated box power against the compound
        k2 = int(rng.integers(2, g + 1))
        if (box_power(from_matrix(M), k2).entries != compound(M, k2).entries).any():
            fails["exact_compound_power"] += 1

        # mixed-column determinant expansion of the box product
        kk = int(rng.integers(2, min(3, g) + 1))
        mats = [_rand_exact_matrix(rng, g) for _ in range(kk)]
        prod = box_many([from_matrix(A) for A in mats])
        I = tuple(sorted(rng.choice(g, kk, replace=False) + 1))
        J = tuple(sorted(rng.choice(g, kk, replace=False) + 1))
        acc = Fraction(0)
        for sigma in itertools.permutations(range(kk)):
            sgn = _perm_sign_tuple(sigma)
            cols = np.empty((kk, kk), dtype=object)
            for pos in range(kk):
                col = mats[pos][:, J[sigma[pos]] - 1]
                for r in range(kk):
                    cols[r, pos] = col[I[r] - 1]
            acc += sgn * _det_exact(cols)
        acc /= math.factorial(kk)
        if prod.entry(IndexSet(I, g), IndexSet(J, g)) != acc:
            fails["exact_sigma_determinant"] += 1

        # adjoint identity
        adj = cofactor_tensor(M, 1).entries.T
        prod_adj = M @ adj
        expect = np.zeros((g, g), dtype=object)
        for i in range(g):
            expect[i, i] = det_full
        if (prod_adj != expect).any():
            fails["exact_adjoint_identity"] += 1

        # rank-one star against the wedge outer product
        kw = int(rng.integers(1, g + 1))
        vecs = np.empty((kw, g), dtype=object)
        for r in range(kw):
            vecs[r] = _rand_exact_vector(rng, g)
        outers = [from_matrix(np.outer(vecs[r], vecs[r])) for r in range(kw)]
        lhs = star_product(*outers).entries * Fraction(math.factorial(kw))
        rhs = wedge_outer(vecs).entries
        if (lhs != rhs).any():
            fails["exact_rank_one_wedge"] += 1

        # binomial expansion of box powers
        B = _rand_exact_matrix(rng, g)
        kb = int(rng.integers(2, min(3, g) + 1))
        lhs_b = box_power(from_matrix(M + B), kb)
        rhs_b = None
        for j in range(kb + 1):
            term = box_many(
                [box_power(from_matrix(M), j), box_power(from_matrix(B), kb - j)]
            ).scale(Fraction(math.comb(kb, j)))
            rhs_b = term if rhs_b is None else rhs_b + term
        if (lhs_b.entries != rhs_b.entries).any():
            fails["exact_binomial_power"] += 1

    reports = []
    for name, bad in fails.items():
        reports.append(
            _report(
                name,
                0,
                {"instances": instances, "failures": bad},
                0.0 if bad == 0 else 1.0,
                1e-15,
                seed,
                started,
            )
        )
    return reports


def _perm_sign_tuple(perm) -> int:
    inv = sum(
        1
        for a in range(len(perm))
        for b in range(a + 1, len(perm))
        if perm[a] > perm[b]
    )
    return -1 if inv % 2 else 1


# ---------------------------------------------------------------------------
# analytic families


def _heat_residual(m, tau, z, policy, step=1e-4):
    """Richardson-refined z-Hessian against the termwise tau-derivative.

    Normalized by the natural second-derivative scale (2 pi)^2 |theta| as
    well as the matrices themselves: the finite-difference floor is
    proportional to |theta| / step^2, so a near-critical Hessian must not
    masquerade as an identity violation.
    """
    g = m.g
    dmat = theta_tau_derivative(m, tau, z, policy)
    want = 4j * np.pi * dmat

    def hessian(h):
        H = np.zeros((g, g), dtype=complex)
        f0 = theta_eval(m, tau, z, policy).value
        for j in range(g):
            ej = np.zeros(g)
            ej[j] = h
            H[j, j] = (
                theta_eval(m, tau, z + ej, policy).value
                - 2 * f0
                + theta_eval(m, tau, z - ej, policy).value
            ) / h**2
            for kk in range(j + 1, g):
                ek = np.zeros(g)
                ek[kk] = h
                val = (
                    theta_eval(m, tau, z + ej + ek, policy).value
                    - theta_eval(m, tau, z + ej - ek, policy).value
                    - theta_eval(m, tau, z - ej + ek, policy).value
                    + theta_eval(m, tau, z - ej - ek, policy).value
                ) / (4 * h**2)
                H[j, kk] = H[kk, j] = val
        return H

    refined = (4.0 * hessian(step) - hessian(2 * step)) / 3.0
    f0 = abs(theta_eval(m, tau, z, policy).value)
    scale = max(
        float(np.max(np.abs(refined))),
        float(np.max(np.abs(want))),
        (2 * np.pi) ** 2 * f0,
        1e-30,
    )
    return float(np.max(np.abs(refined - want)) / scale)


def _family_heat(genus, rng, policy, samples=20, tolerance=1e-7, seed=0):
    started = time.perf_counter()
    chars = all_chars = list(itertools.product((0, 1), repeat=genus))
    worst = 0.0
    for _ in range(samples):
        mp = all_chars[int(rng.integers(len(all_chars)))]
        mpp = all_chars[int(rng.integers(len(all_chars)))]
        m = Characteristic(mp, mpp)
        t = sample_siegel_point(genus, rng)
        z = rng.uniform(-0.3, 0.3, genus) + 1j * rng.uniform(-0.15, 0.15, genus)
        worst = max(worst, _heat_residual(m, t, z, policy))
    return [
        _report(
            "heat_equation",
            genus,
            {"samples": samples},
            worst,
            tolerance,
            seed,
            started,
        )
    ]


def _family_riemann(genus, rng, policy, base_points=3, tolerance=1e-9, seed=0):
    started = time.perf_counter()
    bits = list(itertools.product((0, 1), repeat=genus))
    worst_fwd = 0.0
    worst_inv = 0.0
    for _ in range(base_points):
        t = sample_siegel_point(genus, rng)
        theta_sq = {}
        for e in bits:
            for d in bits:
                theta_sq[(e, d)] = theta_eval(Characteristic(e, d), t, None, policy).value ** 2
        second = {e: second_order_theta(e, t, None, policy).value for e in bits}
        for sig in bits:
            for e in bits:
                lhs = second[sig] * second[tuple((s + x) % 2 for s, x in zip(sig, e))]
                rhs = 0.0 + 0j
                for d in bits:
                    sgn = -1 if sum(s * y for s, y in zip(sig, d)) % 2 else 1
                    rhs += sgn * theta_sq[(e, d)]
                rhs /= 2**genus
                worst_fwd = max(worst_fwd, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
        for e in bits:
            for d in bits:
                lhs = theta_sq[(e, d)]
                rhs = 0.0 + 0j
                for sig in bits:
                    sgn = -1 if sum(s * y for s, y in zip(sig, d)) % 2 else 1
                    rhs += sgn * second[sig] * second[tuple((s + x) % 2 for s, x in zip(sig, e))]
                worst_inv = max(worst_inv, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
    return [
        _report("riemann_addition", genus, {"direction": "product_to_squares",
                "base_points": base_points}, worst_fwd, tolerance, seed, started),
        _report("riemann_addition_inverse", genus, {"direction": "squares_to_products",
                "base_points": base_points}, worst_inv, tolerance, seed, started),
    ]


def _family_theta_basics(genus, rng, policy, tolerance=1e-10, seed=0):
    started = time.perf_counter()
    t = sample_siegel_point(genus, rng)
    z = rng.uniform(-0.4, 0.4, genus) + 1j * rng.uniform(-0.2, 0.2, genus)
    worst = 0.0
    for m in all_characteristics(genus):
        a = theta_eval(m, t, z, policy).value
        b = theta_eval(m, t, -z, policy).value
        sgn = -1 if m.is_odd else 1
        worst = max(worst, abs(a - sgn * b) / max(1.0, abs(a)))
        if m.is_odd:
            worst = max(worst, abs(theta_eval(m, t, None, policy).value))
        shift = rng.integers(-2, 3, 2 * genus)
        mp = tuple(int(x) for x in np.array(m.m_prime) + 2 * shift[:genus])
        mpp = tuple(int(x) for x in np.array(m.m_double_prime) + 2 * shift[genus:])
        sgn2 = -1 if sum(a1 * b1 for a1, b1 in zip(m.m_prime, shift[genus:])) % 2 else 1
        val_shift = _theta_unnormalized(mp, mpp, t, z, policy)
        worst = max(worst, abs(val_shift - sgn2 * a) / max(1.0, abs(a)))
    return [
        _report("theta_parity_periodicity", genus, {}, worst, tolerance, seed, started)
    ]


def _theta_unnormalized(mp, mpp, tau, z, policy):
    """Series with an unnormalized integer characteristic (test helper)."""
    from .theta import _lattice, DEFAULT_POLICY
    from ._kernels import theta_sum

    policy = policy or DEFAULT_POLICY
    g = len(mp)
    tau_arr = tau.tau if isinstance(tau, SiegelPoint) else np.asarray(tau)
    z_arr = np.zeros(g, dtype=complex) if z is None else np.asarray(z, dtype=complex)
    base = np.asarray(mp, dtype=float) / 2.0
    radius = 12
    frac = tuple(int(x) % 2 for x in mp)
    P = _lattice(g, radius, frac) + (base - np.asarray(frac, dtype=float) / 2.0)
    y = z_arr + np.asarray(mpp, dtype=float) / 2.0
    val, _, _ = theta_sum(P, tau_arr, y, False, False)
    return val


def _family_rank_vanishing(genus, rng, policy, tolerance=1e-8, seed=0, step=1e-3):
    """Order-2 minors of the derivative operator vanish on a single factor.

    The structural path must return the exact zero matrix; the numerical
    path assembles the same minors from Richardson finite differences of
    the termwise first-derivative matrices.
    """
    started = time.perf_counter()
    t = sample_siegel_point(genus, rng)
    worst = 0.0
    sym_pairs = [(c, d) for c in range(genus) for d in range(c, genus)]
    for m in even_characteristics(genus):
        f = theta_constant_product(genus, m)
        structural = partial_bracket(f, 2, t, policy)
        if structural.max_abs() != 0.0:
            worst = max(worst, 1.0)
            continue

        def dmat_at(point):
            return theta_tau_derivative(m, point, None, policy)

        second = {}
        for (c, d) in sym_pairs:
            E = np.zeros((genus, genus))
            E[c, d] = E[d, c] = 1.0
            weight = 1.0 if c == d else 0.5

            def fd(h):
                plus = dmat_at(SiegelPoint(t.tau + h * E))
                minus = dmat_at(SiegelPoint(t.tau - h * E))
                return (plus - minus) / (2 * h)

            deriv = (4.0 * fd(step) - fd(2 * step)) / 3.0
            second[(c, d)] = weight * deriv
            second[(d, c)] = second[(c, d)]
        scale = max(
            float(np.max(np.abs(v))) for v in second.values()
        )
        for I in itertools.combinations(range(genus), 2):
            for J in itertools.combinations(range(genus), 2):
                i1, i2 = I
                j1, j2 = J
                minor = (
                    second[(i1, j1)][i2, j2] - second[(i1, j2)][i2, j1]
                )
                worst = max(worst, abs(minor) / max(1.0, scale**2))
    return [
        _report("rank_vanishing", genus, {"order": 2}, worst, tolerance, seed, started)
    ]


def _family_pairing_permutation(genus, rng, policy, base_points=5, tolerance=1e-8, seed=0):
    started = time.perf_counter()
    ks = [k for (gg, k) in ((2, 1), (3, 1), (3, 2), (4, 2)) if gg == genus]
    reports = []
    evens = list(even_characteristics(genus))
    for k in ks:
        worst = 0.0
        for bp in range(base_points):
            t = sample_siegel_point(genus, rng)
            idx = rng.choice(len(evens), 2 * k, replace=False)
            fs = [theta_constant_product(genus, evens[i]) for i in idx[:k]]
            hs = [theta_constant_product(genus, evens[i]) for i in idx[k:]]
            fprod, hprod = fs[0], hs[0]
            for x in fs[1:]:
                fprod = fprod * x
            for x in hs[1:]:
                hprod = hprod * x
            lhs = pairing_bracket(fprod, hprod, k, t, policy)
            rhs = None
            for sigma in itertools.permutations(range(k)):
                mats = [A_form(fs[i], hs[sigma[i]], t, policy).matrix for i in range(k)]
                term = star_product(*mats)
                rhs = term if rhs is None else rhs + term
            worst = max(worst, _rel(lhs.entries, rhs.entries))
        reports.append(
            _report(
                "pairing_permutation_expansion",
                genus,
                {"k": k, "base_points": base_points},
                worst,
                tolerance,
                seed,
                started,
            )
        )
    return reports


def _family_pairing_power(genus, rng, policy, base_points=5, tolerance=1e-8, seed=0):
    started = time.perf_counter()
    ks = [k for (gg, k) in ((2, 1), (3, 1), (3, 2), (4, 2)) if gg == genus]
    reports = []
    evens = list(even_characteristics(genus))
    for k in ks:
        worst = 0.0
        for bp in range(base_points):
            t = sample_siegel_point(genus, rng)
            i, j = rng.choice(len(evens), 2, replace=False)
            F = theta_constant_product(genus, evens[i])
            H = theta_constant_product(genus, evens[j])
            lhs = pairing_bracket(F.power(k), H.power(k), k, t, policy)
            A = A_form(F, H, t, policy).matrix.entries
            rhs = cofactor_tensor(A, genus - k).scale(float(math.factorial(k)))
            worst = max(worst, _rel(lhs.entries, rhs.entries))
        reports.append(
            _report(
                "pairing_power_cofactor",
                genus,
                {"k": k, "base_points": base_points},
                worst,
                tolerance,
                seed,
                started,
            )
        )
    if genus >= 2:
        worst = 0.0
        for bp in range(3):
            t = sample_siegel_point(genus, rng)
            i, j = rng.choice(len(evens), 2, replace=False)
            F = theta_constant_product(genus, evens[i])
            H = theta_constant_product(genus, evens[j])
            rep = check_omega_consistency(genus, F, H, t, policy, tolerance, seed)
            worst = max(worst, rep.residual)
        reports.append(
            _report(
                "omega_consistency",
                genus,
                {"base_points": 3},
                worst,
                tolerance,
                seed,
                started,
            )
        )
    return reports


def _family_det_remark(genus, rng, policy, tolerance=1e-8, seed=0):
    started = time.perf_counter()
    t = sample_siegel_point(genus, rng)
    evens = list(even_characteristics(genus))
    F = theta_constant_product(genus, evens[0])
    H = theta_constant_product(genus, evens[1])
    A = A_form(F, H, t, policy).matrix.entries
    lhs = complex(np.linalg.det(A))
    total = pairing_brace(F.power(genus), H.power(genus), genus, t, policy).scalar()
    rhs = total / math.factorial(genus)
    residual = abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))
    return [
        _report("det_pairing_scalar", genus, {}, residual, tolerance, seed, started)
    ]


def _family_gsm(genus, rng, policy, tolerance=1e-8, seed=0):
    reports = []
    t = sample_siegel_point(genus, rng)
    odds = list(odd_characteristics(genus))
    bits = list(itertools.product((0, 1), repeat=genus))
    if genus <= 2:
        for n in odds:
            reports.append(check_gsm_forward(n, t, policy, tolerance, seed))
        for eps in bits:
            for delta in bits:
                reports.append(check_gsm_backward(eps, delta, t, policy, tolerance, seed))
    else:
        for i in rng.choice(len(odds), 3, replace=False):
            reports.append(check_gsm_forward(odds[i], t, policy, tolerance, seed))
        for _ in range(3):
            eps = bits[int(rng.integers(len(bits)))]
            delta = bits[int(rng.integers(len(bits)))]
            reports.append(check_gsm_backward(eps, delta, t, policy, tolerance, seed))
    return reports


def _family_jacobi(genus, rng, policy, tolerance=1e-8, seed=0):
    taus = [sample_siegel_point(genus, rng) for _ in range(5)]
    return [check_jacobi(genus, taus, policy, tolerance, seed)]


def _sample_theorem_pairs(rng, g, k):
    bits = list(itertools.product((0, 1), repeat=g))
    while True:
        pairs = []
        used_epd = set()
        for _ in range(k):
            e = bits[int(rng.integers(len(bits)))]
            d = bits[int(rng.integers(len(bits)))]
            pairs.append((e, d))
            used_epd.add(tuple((a + b) % 2 for a, b in zip(e, d)))
        if all(e != d for e, d in pairs) and len(used_epd) == k:
            return pairs


def _family_main_theorem(genus, rng, policy, tolerance=1e-7, seed=0, choices=5):
    reports = []
    ks = [k for (gg, k) in ((2, 1), (3, 1), (3, 2)) if gg == genus]
    for k in ks:
        taus = [sample_siegel_point(genus, rng) for _ in range(3)]
        constants = []
        started = time.perf_counter()
        for _ in range(choices):
            pairs = _sample_theorem_pairs(rng, genus, k)
            rep = check_main_theorem(genus, k, pairs, taus, policy, tolerance, seed)
            reports.append(rep)
            constants.append(complex(*rep.params["fitted_constant"]))
        mean = sum(constants) / len(constants)
        spread = max(abs(c - mean) for c in constants) / max(1.0, abs(mean))
        reports.append(
            _report(
                "main_theorem_constant",
                genus,
                {"k": k, "choices": choices, "constant": _cplx(mean)},
                spread,
                tolerance,
                seed,
                started,
            )
        )
    return reports


def conditioned_words(group, g, base_points, count, seed, length=4, min_lambda=0.05):
    """Deterministic group words whose action keeps all probe points usable."""
    out = []
    attempt = 0
    probes = list(base_points)
    probes += [SiegelPoint(p.tau + 0.3j * np.eye(g)) for p in probes]
    while len(out) < count and attempt < 200 * count:
        gamma = generate_subgroup_element(group, g, seed + attempt, length)
        attempt += 1
        ok = True
        for p in probes:
            try:
                if min_im_eigenvalue(act_on_tau(gamma, p).tau) < min_lambda:
                    ok = False
                    break
            except Exception:
                ok = False
                break
        if ok:
            out.append(gamma)
    if len(out) < count:
        raise DomainError(
            f"could not sample {count} usable words of {group} at genus {g}"
        )
    return out


def _family_audit_astar(genus, rng, policy, words=10, tolerance=1e-7, seed=0):
    started = time.perf_counter()
    t = sample_siegel_point(genus, rng)
    k = 2
    pairs = [
        ((0,) * genus, (1,) + (0,) * (genus - 1)),
        ((0,) * genus, (0,) * (genus - 1) + (1,)),
    ]

    def value_fn(pt):
        mats = [
            from_matrix(_second_order_A(e, d, pt, policy)) for (e, d) in pairs
        ]
        return star_product(*mats)

    reports = []
    sampled = conditioned_words("Gamma(2,4)", genus, [t], words, seed + 7000)
    for i, gamma in enumerate(sampled):
        rep = audit_transformation(
            value_fn, gamma, k, MultiplierSpec(kappa_power=2 * k), t, policy
        )
        reports.append(
            _report(
                "audit_astar",
                genus,
                {"word": i, "k": k, "group": "Gamma(2,4)",
                 "multiplier": _cplx(rep.multiplier)},
                rep.residual,
                tolerance,
                seed,
                started,
            )
        )
    # fourth power of the multiplier is 1 on the level-(2,4) group
    started2 = time.perf_counter()
    worst = max(
        abs(kappa_squared(gamma, t, policy) ** 2 - 1.0) for gamma in sampled
    )
    reports.append(
        _report(
            "kappa_fourth_power",
            genus,
            {"words": words},
            worst,
            1e-9,
            seed,
            started2,
        )
    )
    return reports


def _family_audit_w(genus, rng, policy, words=10, tolerance=1e-7, seed=0):
    started = time.perf_counter()
    t = sample_siegel_point(genus, rng)
    k = 2
    ns = list(odd_characteristics(genus)[:k])

    def value_fn(pt):
        return W_of_N(ns, pt, policy).matrix

    reports = []
    for i, gamma in enumerate(
        conditioned_words("Gamma(2)", genus, [t], words, seed + 9000)
    ):
        rep = audit_transformation(
            value_fn,
            gamma,
            k,
            MultiplierSpec(kappa_power=2 * k, phi_chars=tuple(ns)),
            t,
            policy,
        )
        reports.append(
            _report(
                "audit_gradient_wedge",
                genus,
                {"word": i, "k": k, "group": "Gamma(2)",
                 "multiplier": _cplx(rep.multiplier)},
                rep.residual,
                tolerance,
                seed,
                started,
            )
        )
    return reports


# ---------------------------------------------------------------------------
# suite driver

_FAMILIES = (
    ("exact_layer", None, (2, 3, 4)),
    ("theta_basics", _family_theta_basics, (1, 2, 3)),
    ("heat", _family_heat, (1, 2, 3)),
    ("riemann", _family_riemann, (1, 2, 3)),
    ("rank_vanishing", _family_rank_vanishing, (2, 3)),
    ("pairing_permutation", _family_pairing_permutation, (2, 3, 4)),
    ("pairing_power", _family_pairing_power, (2, 3, 4)),
    ("det_remark", _family_det_remark, (1, 2, 3)),
    ("gsm", _family_gsm, (1, 2, 3)),
    ("jacobi", _family_jacobi, (1, 2)),
    ("main_theorem", _family_main_theorem, (2, 3)),
    ("audit_astar", _family_audit_astar, (2, 3)),
    ("audit_w", _family_audit_w, (2, 3)),
)


def _params_key(report: IdentityReport) -> str:
    return json.dumps(report.params, sort_keys=True, default=str)


def run_suite(
    genus_list,
    seed: int = 0,
    policy: TruncationPolicy | None = None,
    name_filter=None,
    max_workers: int = 1,
    tolerance: float | None = None,
) -> list[IdentityReport]:
    """Run every applicable identity family for the requested genera.

    Failures are reported, never raised.  The report list is sorted by
    (identity_name, genus, params) so aggregation is order-deterministic
    regardless of worker scheduling.  ``tolerance`` overrides each
    family's default pass threshold when given.
    """
    import fnmatch

    genus_list = list(genus_list)
    for g in genus_list:
        if not 1 <= g <= 4:
            raise DomainError(f"genus {g} outside 1..4")

    tasks = []
    for fam_index, (fam_name, fn, applicable) in enumerate(_FAMILIES):
        wanted = sorted(set(g for g in genus_list if g in applicable))
        if not wanted:
            continue
        if fam_name == "exact_layer":
            # the exact layer mixes its genera internally; run it once
            tasks.append((fam_name, fam_index, wanted[-1], tuple(wanted)))
        else:
            for g in wanted:
                tasks.append((fam_name, fam_index, g, fn))

    extra = {} if tolerance is None else {"tolerance": float(tolerance)}

    def run_task(task):
        fam_name, fam_index, g, fn = task
        rng = np.random.default_rng([seed, fam_index, g])
        try:
            if fam_name == "exact_layer":
                return check_exact_layer(instances=60, seed=seed, genus_range=fn)
            return fn(g, rng, policy, seed=seed, **extra)
        except Exception as exc:  # report, never raise
            return [
                _report(
                    f"{fam_name}_error",
                    g,
                    {"error": f"{type(exc).__name__}: {exc}"},
                    9e99,
                    0.0,
                    seed,
                    time.perf_counter(),
                )
            ]

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run_task, tasks))
    else:
        results = [run_task(t) for t in tasks]

    reports = [rep for chunk in results for rep in chunk]
    if name_filter:
        reports = [
            r for r in reports if fnmatch.fnmatch(r.identity_name, name_filter)
        ]
    reports.sort(key=lambda r: (r.identity_name, r.genus, _params_key(r)))
    return reports


def reports_to_json(
    reports, config: dict | None = None, embed_timings: bool = False
) -> str:
    """Serialize reports with the stable schema; timings are zeroed unless
    embedding is requested, keeping equal runs byte-identical."""
    payload = {
        "schema": SCHEMA_VERSION,
        "config": config or {},
        "all_passed": all(r.passed for r in reports),
        "reports": [r.to_dict(embed_timings) for r in reports],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
