"""
Numeric Feigin-Odesskii brackets from truncated theta series.

theta(xi) = sum_k (-1)^k exp(2 pi i (k xi + k(k-1)/2 tau)),
theta_a(xi) = prod_j theta(xi + j/n + a tau/n) * exp(2 pi i (a xi + a(a-n)/(2n) tau + a/(2n))),
with a reduced mod n.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from fo import fo_q1, fo_toric, mod_inverse
from utils import ValidationError, get_logger, get_settings, get_worker_count

logger = get_logger(__name__)

TWO_PI_I = 2j * np.pi
MAX_TRUNCATION = 200


@dataclass(frozen=True)
class ThetaParams:
    tau: complex
    n: int
    truncation: int

    @property
    def eps(self):
        """exp(2 pi i tau / n)."""
        return np.exp(TWO_PI_I * self.tau / self.n)


def _tail_bound(tau, n, K):
    return np.exp(-np.pi * tau.imag * K * (K - 1) / n)


def theta_params(n, tau, truncation=None, tol=None):
    """
    Validate tau and pick the series truncation.

    Args:
        n (int): bracket size
        tau (complex): modular parameter, Im(tau) > 0
        truncation (int): explicit K; checked against the tail bound
        tol (float): relative tail bound, defaults to SMOOTHABLE_THETA_TOL

    Returns:
        ThetaParams: the parameters with K set
    """
    tau = complex(tau)
    if tau.imag <= 0:
        raise ValidationError(f"tau {tau} not in upper half-plane")
    if n < 2:
        raise ValidationError(f"n must be at least 2, got {n}")
    if tol is None:
        tol = get_settings().theta_tol
    if truncation is None:
        K = 2
        while _tail_bound(tau, n, K) >= tol:
            K += 1
            if K > MAX_TRUNCATION:
                raise ValidationError(f"theta series needs more than {MAX_TRUNCATION} terms at tau={tau}")
        truncation = K
    elif _tail_bound(tau, n, truncation) >= tol:
        raise ValidationError(
            f"truncation K={truncation} too small: tail bound {_tail_bound(tau, n, truncation):.3e} >= {tol:.1e}"
        )
    return ThetaParams(tau, n, truncation)


def theta(xi, params):
    """
    theta and its derivative at the points `xi`.

    Returns:
        tuple: (values, derivatives) as complex arrays shaped like `xi`
    """
    xi = np.asarray(xi, dtype=complex)
    ks = np.arange(-params.truncation, params.truncation + 2)
    signs = np.where(ks % 2 == 0, 1.0, -1.0)
    phase = TWO_PI_I * (np.multiply.outer(xi, ks) + ks * (ks - 1) / 2 * params.tau)
    terms = signs * np.exp(phase)
    return terms.sum(axis=-1), (TWO_PI_I * ks * terms).sum(axis=-1)


def theta_alpha(alpha, params):
    """
    theta_alpha(0) and theta_alpha'(0).

    theta_0(0) is exactly zero since theta(0) = 0.
    """
    n = params.n
    a = alpha % n
    shifts = np.arange(n) / n + a * params.tau / n
    values, derivs = theta(shifts, params)
    if a == 0:
        return 0j, derivs[0] * np.prod(values[1:])
    prefactor = np.exp(TWO_PI_I * (a * (a - n) / (2 * n) * params.tau + a / (2 * n)))
    value = np.prod(values) * prefactor
    log_derivative = np.sum(derivs / values) + TWO_PI_I * a
    return value, value * log_derivative


def fo_bracket_numeric(n, k, params):
    """
    Coefficients of {y_i, y_j} for i < j.

    The sum over r runs over the residues 1..n-1 other than j-i.

    Returns:
        dict: (i, j) -> {(a, b): complex} with (a, b) the sorted monomial y_a y_b
    """
    if params.n != n:
        raise ValidationError(f"theta parameters are for n={params.n}, not n={n}")
    fo_toric(n, k)
    values = {a: theta_alpha(a, params) for a in range(n)}
    theta0_prime = values[0][1]
    log_derivs = {a: values[a][1] / values[a][0] for a in range(1, n)}

    bracket = {}
    for i in range(n):
        for j in range(i + 1, n):
            d = (j - i) % n
            terms = {}
            diagonal = log_derivs[d] + log_derivs[(k * d) % n] - TWO_PI_I * n
            terms[(i, j)] = diagonal
            for r in range(1, n):
                if r == d:
                    continue
                numerator = values[(d + r * (k - 1)) % n][0] * theta0_prime
                denominator = values[(k * r) % n][0] * values[(d - r) % n][0]
                key = tuple(sorted(((j - r) % n, (i + r) % n)))
                terms[key] = terms.get(key, 0j) + numerator / denominator
            bracket[(i, j)] = terms
    return bracket


def c_constant(params):
    """C(n) as theta_0'(0)."""
    return theta_alpha(0, params)[1]


def c_constant_cyclotomic(n):
    """-2 pi i * prod_{j=1}^{n-1} (1 - exp(2 pi i j / n)), which equals -2 pi i n."""
    roots = np.exp(TWO_PI_I * np.arange(1, n) / n)
    return -TWO_PI_I * np.prod(1 - roots)


def _toric_terms(n, k):
    m = fo_toric(n, k).m
    return {(i, j): {(i, j): TWO_PI_I * float(m[i][j])} for i in range(n) for j in range(i + 1, n)}


def _add_q1(bracket, n, k, scale):
    for term in fo_q1(n, k):
        a, b = term.bivector
        sign = 1
        if a > b:
            a, b = b, a
            sign = -1
        key = tuple(sorted(term.monomial))
        entry = bracket.setdefault((a, b), {})
        entry[key] = entry.get(key, 0j) + sign * scale


def _max_difference(left, right):
    worst = 0.0
    for pair in set(left) | set(right):
        l_terms = left.get(pair, {})
        r_terms = right.get(pair, {})
        for key in set(l_terms) | set(r_terms):
            worst = max(worst, abs(l_terms.get(key, 0j) - r_terms.get(key, 0j)))
    return worst


def fo_residuals(n, k, imtau, truncation=None):
    """
    Distances of the numeric bracket from q0 and from q0 + eps C(n) q1.

    Returns:
        dict: imtau, eps_abs, residual0, residual1
    """
    params = theta_params(n, 1j * imtau, truncation)
    eps = params.eps
    bracket = fo_bracket_numeric(n, k, params)
    toric = _toric_terms(n, k)
    residual0 = _max_difference(bracket, toric)
    first_order = {pair: dict(terms) for pair, terms in toric.items()}
    _add_q1(first_order, n, k, eps * c_constant_cyclotomic(n))
    residual1 = _max_difference(bracket, first_order)
    logger.debug("n=%d k=%d imtau=%s residual0=%.3e residual1=%.3e", n, k, imtau, residual0, residual1)
    return {"imtau": float(imtau), "eps_abs": float(abs(eps)), "residual0": residual0, "residual1": residual1}


def fo_sweep(n, k, imtaus):
    """
    Residuals over a list of Im(tau) values, one row each.

    Returns:
        pd.DataFrame: columns imtau, eps_abs, residual0, residual1
    """
    mod_inverse(k, n)
    with ThreadPoolExecutor(max_workers=get_worker_count()) as executor:
        rows = list(executor.map(lambda t: fo_residuals(n, k, t), imtaus))
    return pd.DataFrame(rows, columns=["imtau", "eps_abs", "residual0", "residual1"])


def _halving_step(n):
    return n * np.log(2) / (2 * np.pi)


def halving_imtaus(start, steps, n):
    """Im(tau) values at which |eps| halves from one to the next."""
    return [start + t * _halving_step(n) for t in range(steps)]


def halving_imtaus_within(start, stop, n):
    """
    The halving sequence from `start`, cut off at `stop`.

    Args:
        start (float): first Im(tau)
        stop (float): last admissible Im(tau), inclusive
        n (int): the bracket size

    Returns:
        list: at least two Im(tau) values in [start, stop]
    """
    if start <= 0 or stop <= start:
        raise ValidationError(f"need 0 < start < stop for an Im(tau) window, got {start}:{stop}")
    step = _halving_step(n)
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    if count < 2:
        raise ValidationError(f"Im(tau) window {start}:{stop} is narrower than one halving step ({step:.4f}) for n={n}")
    return halving_imtaus(start, count, n)
