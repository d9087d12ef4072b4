"""Post-hoc certification: inductive items, weak residuals, paraproducts,
and scaling-law regressions for the quantitative lemmas.

Certificates record measured values next to their thresholds; pass flags are
pure functions of the recorded numbers.  Scaling reports fit log-log slopes
by least squares over a power-of-2 lambda grid and compare against predicted
exponents; quantities whose sharp behavior is concentration-dominated (the
negative-Sobolev error parts) are reported as measured together with the
majorant-route companions whose exponents the predictions actually describe.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .littlewood_paley import build_filter, project_shell
from .norms import abs_cos_moment, lp_norm, modulated_lp_norm, sobolev_norm
from .scheme import (IncrementInfo, IterationState, PREF, SchemeParams,
                     _build_increment_info, amplitude, base_case)
from .slabs import (SlabProfile, SlabSpec, build_slab_fourier, high_low_decay,
                    _default_profile)
from .spectral import TorusFunction, derivative, product

TWO_PI = 2.0 * math.pi


# --------------------------------------------------------------- structured u^2

def _blocks(env: TorusFunction, center: int, amp: float) -> TorusFunction:
    if center == 0:
        return amp * env
    half = 0.5 * amp
    return TorusFunction(
        np.concatenate([env.freqs - center, env.freqs + center]),
        np.concatenate([half * env.amps, half * env.amps]),
        storage="sparse")


def pair_product(info_i: IncrementInfo, info_j: IncrementInfo) -> TorusFunction:
    """w_i * w_j exactly, through the modulated envelopes."""
    e = product(info_i.envelope, info_j.envelope)
    amp = info_i.prefactor * info_j.prefactor
    if info_i.sigma == info_j.sigma:
        return 0.5 * amp * e + _blocks(e, 2 * info_i.sigma, 0.5 * amp)
    return (_blocks(e, info_i.sigma + info_j.sigma, 0.5 * amp)
            + _blocks(e, abs(info_i.sigma - info_j.sigma), 0.5 * amp))


def base_part(state: IterationState) -> TorusFunction:
    u0 = state.u
    for info in state.increment_info:
        u0 = u0 - info.w
    return u0


def u_squared(state: IterationState) -> TorusFunction:
    """u_q^2 by binomial expansion over the modulated increments (exact)."""
    u0 = base_part(state)
    out = product(u0, u0)
    for info in state.increment_info:
        cross = product(u0, info.envelope)
        out = out + _blocks(cross, info.sigma, 2.0 * info.prefactor)
    infos = state.increment_info
    for i in range(len(infos)):
        for j in range(i, len(infos)):
            term = pair_product(infos[i], infos[j])
            out = out + (term if i == j else 2.0 * term)
    return out


def residual_norm(state: IterationState, s: int = 3) -> float:
    """|| 3(u^2)' - u''' - E' ||_{H^{-s}} via the structured expansion."""
    usq = u_squared(state)
    R = derivative(3.0 * usq - state.E, 1) - derivative(state.u, 3)
    return sobolev_norm(R, -s)


# ----------------------------------------------------------- increment norms

_BAND_LIMIT = 1 << 22


def increment_lp(info: IncrementInfo, p) -> float:
    """||w||_p: direct quadrature when the band permits, else two-scale.

    The direct path gets a deep doubling budget: |w|^p has a sign-change
    kink at every carrier zero, so trapezoid error is ~h^2 with a large
    constant and needs several doublings to reach 1e-8.
    """
    if info.w.max_freq <= _BAND_LIMIT // 8:
        return lp_norm(info.w, p, max_doublings=9)
    return modulated_lp_norm(info.envelope, info.sigma, p, info.prefactor)


# ----------------------------------------------------------------- certificates

@dataclass
class Certificate:
    q: int
    item_results: list = field(default_factory=list)
    lemma_results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.item_results + self.lemma_results)

    def to_json(self) -> str:
        return json.dumps({"q": self.q, "passed": self.passed,
                           "item_results": self.item_results,
                           "lemma_results": self.lemma_results},
                          indent=2, sort_keys=True)


def _item(name, measured, thresholds, ok, note=None):
    d = {"name": name, "measured": measured, "thresholds": thresholds,
         "pass": bool(ok)}
    if note:
        d["note"] = note
    return d


def certify_stage(state_prev: IterationState | None,
                  state: IterationState, params: SchemeParams) -> Certificate:
    """Evaluate the six inductive items for one accepted stage."""
    s = params.s
    cert = Certificate(q=state.q)
    # (1) exact relaxed-equation identity, mean-zero, E nonvanishing
    res = residual_norm(state, s)
    e_norm = sobolev_norm(state.E, -s)
    mean_u = abs(state.u.mean)
    e_coeff_max = float(np.max(np.abs(state.E.amps))) if state.E.amps.size else 0.0
    cert.item_results.append(_item(
        "item1_residual",
        {"residual_Hms": res, "E_Hms": e_norm, "mean_u": mean_u,
         "E_coeff_max": e_coeff_max},
        {"residual": 1e-8 * max(1.0, e_norm), "mean_u": 1e-12,
         "E_nonvanishing": 1e-12},
        res < 1e-8 * max(1.0, e_norm) and mean_u < 1e-12
        and e_coeff_max > 1e-12))
    # (2) error decay: relative target (certified) and absolute (recorded)
    target = params.target(state.q, state.e0_norm)
    cert.item_results.append(_item(
        "item2_decay",
        {"E_Hms": e_norm, "target_relative": target,
         "target_absolute": 2.0 ** (-state.q)},
        {"pass_rule": "E_Hms < target_relative"},
        e_norm < target or state.q == 0,
        note="absolute paper-style budget recorded, not asserted at desk scale"))
    if not state.increment_info:
        for name in ("item3_besov_lp", "item4_l2_lower",
                     "item5_single_shell", "item6_partial_sums"):
            cert.item_results.append(_item(
                name, {}, {}, True, note="no increment at q=0"))
        return cert
    info = state.increment_info[-1]
    # (3) Besov/L^p size of the increment against a configured budget
    j = info.shell_j
    w_sup = increment_lp(info, math.inf)
    meas3, ok3 = {}, True
    smallest_pref = 0.0
    for alpha, p in params.item3_pairs:
        besov = (2.0 ** (j * alpha)) * w_sup   # single-shell identity
        lpv = increment_lp(info, p)
        val = besov + lpv
        budget = params.item3_prefactor * 2.0 ** (-params.item3_rate * state.q)
        meas3[f"alpha={alpha},p={p}"] = {"besov": besov, "lp": lpv,
                                         "value": val, "budget": budget}
        smallest_pref = max(smallest_pref,
                            val * 2.0 ** (params.item3_rate * state.q))
        ok3 &= val <= budget
    meas3["smallest_passing_prefactor"] = smallest_pref
    cert.item_results.append(_item(
        "item3_besov_lp", meas3,
        {"rate": params.item3_rate, "prefactor": params.item3_prefactor}, ok3))
    # (4) L^2 lower bound
    g_l2 = lp_norm(info.envelope, 2)
    w_l2 = increment_lp(info, 2)
    ok4 = (w_l2 >= params.c_lower * g_l2) and (w_l2 >= params.w_l2_floor)
    cert.item_results.append(_item(
        "item4_l2_lower", {"w_L2": w_l2, "envelope_L2": g_l2},
        {"c_lower": params.c_lower, "floor": params.w_l2_floor}, ok4))
    # (5) single dyadic shell, integer-exact
    xi = np.abs(info.w.freqs)
    in_shell = bool(np.all((xi >= (1 << j)) & (7 * xi <= 12 * (1 << j))))
    cert.item_results.append(_item(
        "item5_single_shell",
        {"j": j, "min_freq": int(xi.min()), "max_freq": int(xi.max())},
        {"shell": f"[2^{j}, (12/7)*2^{j}]"}, in_shell))
    # (6) running diagonal/off-diagonal partial sums
    infos = state.increment_info
    diag = sum(sobolev_norm(pair_product(fi, fi), -s) for fi in infos)
    off = 0.0
    for i in range(len(infos)):
        for jj in range(i + 1, len(infos)):
            off += 2.0 * sobolev_norm(pair_product(infos[i], infos[jj]), -s)
    q = state.q
    b1 = params.item6_C1 - 2.0 ** (-q)
    b2 = params.item6_C2 - 2.0 ** (-q + params.item6_kappa)
    cert.item_results.append(_item(
        "item6_partial_sums", {"off_diagonal_sum": off, "diagonal_sum": diag},
        {"C1_budget": b1, "C2_budget": b2}, off <= b1 and diag <= b2))
    return cert


# ------------------------------------------------------------- weak residual

@dataclass
class WeakResidualEntry:
    k: int
    residual: float
    scale: float
    rhs: float
    rhs_bound: float


def weak_residual(state: IterationState, test_freqs,
                  s: int = 3) -> list[WeakResidualEntry]:
    """|LHS - RHS| of the weak identity against psi = e^{2 pi i k x}.

    LHS = -int u psi''' + 3 int u^2 psi', RHS = -int E psi'; the pairings are
    finite coefficient sums.  Also returns the duality bound
    ||E||_{H^{-s}} ||psi'||_{H^s} dominating |RHS|.
    """
    usq = u_squared(state)
    e_norm = sobolev_norm(state.E, -s)
    out = []
    for k in test_freqs:
        k = int(k)
        mul = TWO_PI * 1j * k
        lhs = -(mul ** 3) * state.u.coeff(-k) + 3.0 * mul * usq.coeff(-k)
        # pairing 3(u^2)' - u''' = E' with psi and integrating by parts gives
        # -int u psi''' + 3 int u^2 psi' = +int E psi'
        rhs = mul * state.E.coeff(-k)
        scale = max(abs(lhs), abs(rhs),
                    abs(mul ** 3 * state.u.coeff(-k)), 1e-300)
        bound = e_norm * (TWO_PI * abs(k)) * (abs(k) ** s) if k else 0.0
        out.append(WeakResidualEntry(k=k, residual=abs(lhs - rhs),
                                     scale=scale, rhs=abs(rhs),
                                     rhs_bound=bound))
    return out


# --------------------------------------------------------------- paraproducts

@dataclass
class ParaproductReport:
    rows: list                      # (j, j', norm)
    partial_sums: list              # double sum restricted to stages <= q'
    total: float


def paraproduct_partial_sums(state: IterationState, s: int = 3
                             ) -> ParaproductReport:
    """||P_{neq 0}(piece_j piece_j')||_{H^{-s}} over active shell pairs.

    Pieces are the base iterate (shell 0) and the increments (one shell
    each); all products go through exact envelope convolutions.
    """
    pieces = [(0, None)] + [(info.shell_j, info)
                            for info in state.increment_info]
    u0 = base_part(state)
    rows = []
    for ia, (ja, infa) in enumerate(pieces):
        for jb, infb in pieces[ia:]:
            if infa is None and infb is None:
                prod = product(u0, u0)
            elif infa is None:
                prod = _blocks(product(u0, infb.envelope), infb.sigma,
                               infb.prefactor)
            else:
                prod = pair_product(infa, infb)
            val = sobolev_norm(prod, -s)   # mean drops out by definition
            mult = 1 if ja == jb else 2
            rows.append((ja, jb, mult * val))
    partials = []
    shells = [j for j, _ in pieces]
    for upto in range(len(pieces)):
        cut = set(shells[:upto + 1])
        partials.append(sum(v for ja, jb, v in rows
                            if ja in cut and jb in cut))
    return ParaproductReport(rows=rows, partial_sums=partials,
                             total=partials[-1] if partials else 0.0)


# ------------------------------------------------------------ scaling reports

@dataclass
class ScalingReport:
    quantity: str
    lambdas: list
    values: list
    slope: float | None
    predicted: float | None
    residual: float | None
    tol: float
    passed: bool
    note: str = ""

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["lambda", "value", "log2_lambda", "log2_value"])
            for lam, v in zip(self.lambdas, self.values):
                lv = math.log2(v) if v > 0 else float("-inf")
                wr.writerow([lam, repr(v), math.log2(lam), repr(lv)])


class InsufficientGrid(Exception):
    pass


def _fit_slope(lams, vals):
    x = np.log2(np.asarray(lams, dtype=float))
    y = np.log2(np.maximum(np.asarray(vals, dtype=float), 1e-300))
    A = np.vstack([x, np.ones_like(x)]).T
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ sol
    return float(sol[0]), float(np.max(np.abs(fit - y)))


_DEFAULT_SWEEP = tuple(2 ** m for m in range(7, 14))
_HIGHLOW_SWEEP = (2 ** 6, 2 ** 8, 2 ** 10)


def scaling_suite(profile: SlabProfile | None = None,
                  params: SchemeParams | None = None,
                  lambdas=None, eps_target: float = 0.5,
                  include_highlow: bool = True) -> list[ScalingReport]:
    """Slope fits for every quantitative scaling lemma at frozen stage-0 data.

    The negative-Sobolev error parts (dispersion/Nash/oscillation) are
    reported with their L^1-route majorant companions: the measured H^{-s}
    norms concentrate at the carrier (slope ~ -3 resp. -9), while the
    predicted exponents describe the majorants.
    """
    profile = profile or _default_profile()
    params = params or SchemeParams()
    lambdas = list(lambdas or _DEFAULT_SWEEP)
    if len(lambdas) < 4:
        raise InsufficientGrid("need >= 4 lambda points for a fit")
    s = params.s
    state0 = base_case(params.A, s=s)
    a0 = amplitude(state0.E, tail_tol=params.amplitude_tail_tol,
                   E_inf=state0.E_inf)
    u0_sup = lp_norm(state0.u, math.inf)
    reports = []

    per_lam = {}
    for lam in lambdas:
        spec = SlabSpec.from_target(lam, eps_target)
        rho = build_slab_fourier(spec, profile, max_freq=32 * lam)
        sigma = params.sigma_of(lam)
        info = _build_increment_info(state0, lam, spec.epsilon, sigma,
                                     profile=profile, a=a0)
        rho_sq = product(rho, rho)
        nz = rho_sq.freqs != 0
        rho_sq_nz = TorusFunction(rho_sq.freqs[nz], rho_sq.amps[nz])
        # rho is exactly 1/mu-periodic (Fourier support on mu*Z), so its
        # L^p norms equal those of the descaled profile, whose band is
        # mu times smaller -- this keeps the quadrature grids tiny.
        rho_d = TorusFunction(rho.freqs // spec.mu, rho.amps)
        rho_l1 = _lp(rho_d, 1)
        # ||w||_1 = pref * (2/pi) * ||a0 rho||_1 up to O(1/sigma); since
        # a0 > 0 with band << mu, int a0|rho| = (int a0)(int |rho|) up to
        # the certified coefficient tail of a0 beyond mu.
        w_l1 = (abs(info.prefactor) * abs_cos_moment(1)
                * float(a0.coeff(0).real) * rho_l1)
        per_lam[lam] = {
            "spec": spec, "rho": rho, "info": info,
            "rho_l1": rho_l1, "rho_l2": lp_norm(rho_d, 2),
            "rho_l4": _lp(rho_d, 4), "rho_linf": lp_norm(rho_d, math.inf),
            "w_l1": w_l1,
            "E_D": sobolev_norm(derivative(info.w, 2), -s),
            "E_N": sobolev_norm(
                _blocks(product(base_part(state0), info.envelope),
                        info.sigma, 6.0 * info.prefactor), -s),
            "rho2_off": sobolev_norm(rho_sq_nz, -s),
            "rho2_off_l2": lp_norm(rho_sq_nz, 2),
        }

    def add(quantity, key_fn, predicted, tol, passed_fn=None, note=""):
        vals = [key_fn(per_lam[lam]) for lam in lambdas]
        slope, resid = _fit_slope(lambdas, vals)
        if passed_fn is not None:
            ok = passed_fn(vals, slope)
        else:
            ok = abs(slope - predicted) <= tol
        reports.append(ScalingReport(quantity, list(lambdas), vals, slope,
                                     predicted, resid, tol, ok, note))

    eps = eps_target
    add("rho_lp_p1", lambda d: d["rho_l1"], (1 - eps) * (0.5 - 1.0), 0.05)
    add("rho_lp_p4", lambda d: d["rho_l4"], (1 - eps) * (0.5 - 0.25), 0.05)
    add("rho_lp_pinf", lambda d: d["rho_linf"], (1 - eps) * 0.5, 0.05)
    add("rho_l2_dev", lambda d: abs(d["rho_l2"] - 1.0), eps - 1.0, 0.1,
        passed_fn=lambda vals, slope: all(
            v <= 10.0 * lam ** (eps - 1.0)
            for v, lam in zip(vals, lambdas)),
        note="values at roundoff floor (exact normalization for mu <= lam/2);"
             " pass rule is the Lemma bound, not the slope")
    add("dispersion_Hs", lambda d: d["E_D"], (eps - 1.0) / 2.0, 0.1,
        note="measured slope is carrier-concentration (~ -3); predicted "
             "exponent describes the L^1-route majorant (companion report)")
    add("nash_Hs", lambda d: d["E_N"], -(1 - eps) / 2.0, 0.1,
        note="measured slope is carrier-concentration (~ -9); predicted "
             "exponent describes the L^1-route majorant (companion report)")
    add("osc_offmean_Hs", lambda d: d["rho2_off"],
        -s * eps + (1 - eps) / 2.0, 0.1,
        note="measured slope is lattice-concentration (~ -s*eps); predicted "
             "exponent describes the ell^2 majorant (companion report)")
    add("dispersion_l1_majorant", lambda d: d["w_l1"], (eps - 1.0) / 2.0, 0.1,
        note="sharp route: ||w||_{L^1}")
    add("nash_l1_majorant", lambda d: d["w_l1"] * u0_sup,
        -(1 - eps) / 2.0, 0.1, note="sharp route: ||w||_{L^1} ||u_0||_inf")
    add("osc_offmean_majorant",
        lambda d: d["spec"].mu ** (-s) * d["rho2_off_l2"],
        -s * eps + (1 - eps) / 2.0, 0.1,
        note="sharp route: mu^{-s} ||P_{neq0}(rho^2)||_{L^2}")
    if include_highlow:
        a_test = TorusFunction.constant(2.0) + TorusFunction.cosine(1)
        vals = [high_low_decay(a_test, SlabSpec.from_target(lam, eps_target),
                               profile) for lam in _HIGHLOW_SWEEP]
        ok = all(vals[i + 1] < vals[i] for i in range(len(vals) - 1)) \
            and vals[-1] < 1e-3
        reports.append(ScalingReport(
            "highlow", list(_HIGHLOW_SWEEP), vals, None, None, None, 0.0, ok,
            note="superpolynomial decay: asserted strictly decreasing and "
                 "below threshold, not slope-fitted"))
    return reports


# ------------------------------------------------------------------ coverage

COVERAGE = {
    "lp_partition": "tests/test_properties.py::test_lp_partition_of_unity",
    "lp_boundedness": "tests/test_properties.py::test_projector_lp_bounded",
    "bernstein_a": "tests/test_properties.py::test_bernstein_a",
    "bernstein_b": "tests/test_properties.py::test_bernstein_b",
    "kato_ponce": "tests/test_properties.py::test_kato_ponce",
    "besov_sobolev_equiv": "tests/test_norms.py::test_besov_sobolev_equivalence",
    "slab_lp_scaling": "scaling_suite: rho_lp_p1/p4/pinf",
    "slab_l2_norm": "scaling_suite: rho_l2_dev",
    "slab_fourier_rep": "tests/test_slabs.py::test_dual_construction_agreement",
    "slab_highlow": "scaling_suite: highlow",
    "increment_lp": "tests/test_scheme.py::test_increment_lp_constant",
    "dispersion_decay": "scaling_suite: dispersion_Hs + dispersion_l1_majorant",
    "nash_decay": "scaling_suite: nash_Hs + nash_l1_majorant",
    "oscillation_offmean":
        "scaling_suite: osc_offmean_Hs + osc_offmean_majorant",
    "rl_lower_bound": "scheme.select_lambda check + certify item4",
    "error_cancellation": "tests/test_scheme.py::test_oscillation_cancellation",
    "weak_form": "verify.weak_residual",
}

_SCALING_IDS = {"slab_lp_scaling", "slab_l2_norm", "slab_highlow",
                "dispersion_decay", "nash_decay", "oscillation_offmean"}


def coverage_check(reports: list[ScalingReport]) -> None:
    """Assert every scaling-law lemma id has its report(s) present."""
    have = {r.quantity for r in reports}
    need = {
        "slab_lp_scaling": {"rho_lp_p1", "rho_lp_p4", "rho_lp_pinf"},
        "slab_l2_norm": {"rho_l2_dev"},
        "slab_highlow": {"highlow"},
        "dispersion_decay": {"dispersion_Hs", "dispersion_l1_majorant"},
        "nash_decay": {"nash_Hs", "nash_l1_majorant"},
        "oscillation_offmean": {"osc_offmean_Hs", "osc_offmean_majorant"},
    }
    for lemma_id in _SCALING_IDS:
        missing = need[lemma_id] - have
        if missing:
            raise AssertionError(
                f"lemma {lemma_id} lacks scaling reports: {missing}")


# ---------------------------------------------------------- seeded lemma suite

_LP_CHOICES = (1.0, 1.5, 2.0, 4.0, math.inf)


def _random_poly(rng, min_mf: int = 8, max_mf: int = 96,
                 decay: float = 1.0) -> TorusFunction:
    """Random real trig polynomial with power-law coefficient decay."""
    mf = int(rng.integers(min_mf, max_mf + 1))
    pos = np.arange(1, mf + 1)
    amps = ((rng.standard_normal(mf) + 1j * rng.standard_normal(mf))
            / (1.0 + pos) ** decay)
    freqs = np.concatenate([-pos[::-1], [0], pos])
    allamps = np.concatenate([np.conj(amps[::-1]),
                              [complex(rng.standard_normal())], amps])
    return TorusFunction(freqs, allamps)


def _nonzero_shell(rng, f: TorusFunction, filt):
    """A random LP shell index j with P_j f != 0 (retry bounded)."""
    jmax = max(int(np.ceil(np.log2(f.max_freq))), 0)
    for _ in range(16):
        j = int(rng.integers(0, jmax + 1))
        pj = project_shell(f, j, filt)
        if pj.amps.size and lp_norm(pj, 2) > 1e-12:
            return j, pj
    return None, None


def _lp(f, p):
    # the suite's random polynomials have small bands, so a deep doubling
    # budget is cheap; kink-error cancellation can hover at the 1e-8
    # stabilization tolerance for a few extra doublings before settling
    return lp_norm(f, p, max_doublings=12)


def run_lemma_suite(seed: int = 0, n_partition: int = 500, n_bounded: int = 100,
                    n_bernstein: int = 50, n_kato: int = 100) -> dict:
    """Empirical-constant checks for the quantitative harmonic-analysis lemmas.

    All randomness flows from a single seeded generator, so the returned
    dict (and its JSON serialization) is byte-reproducible for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    filt = build_filter()
    results = []

    # Partition of unity: sum_j phi(xi/2^j) == 1 for every integer xi >= 1.
    xi = np.concatenate([rng.integers(1, 1_000_000, n_partition),
                         [1, 2, 3, 6, 7, 12, 1 << 10, 1 << 20]])
    total = np.zeros(xi.shape)
    for j in range(22):
        total += filt.shell_weights(xi, j)
    dev = float(np.max(np.abs(total - 1.0)))
    results.append({"lemma": "lp_partition", "constant": dev,
                    "tolerance": 1e-12, "n_cases": int(xi.size),
                    "pass": dev <= 1e-12})

    # Projector L^p boundedness: ||P_j f||_p <= C ||f||_p.
    worst = 0.0
    for _ in range(n_bounded):
        f = _random_poly(rng)
        j, pj = _nonzero_shell(rng, f, filt)
        if j is None:
            continue
        p = _LP_CHOICES[int(rng.integers(0, len(_LP_CHOICES)))]
        denom = _lp(f, p)
        if denom > 0:
            worst = max(worst, _lp(pj, p) / denom)
    results.append({"lemma": "lp_boundedness", "constant": worst,
                    "tolerance": 4.0, "n_cases": n_bounded,
                    "pass": worst <= 4.0})

    # Bernstein (a): ||d^s P_j f||_p <= C (2 pi 2^j)^s ||P_j f||_p.
    # Bernstein (b): ||P_j f||_q <= C 2^{j(1/p - 1/q)} ||P_j f||_p, q >= p.
    worst_a = 0.0
    worst_b = 0.0
    for _ in range(n_bernstein):
        f = _random_poly(rng)
        j, pj = _nonzero_shell(rng, f, filt)
        if j is None:
            continue
        sder = int(rng.integers(1, 4))
        p = _LP_CHOICES[int(rng.integers(0, len(_LP_CHOICES)))]
        base = _lp(pj, p)
        if base > 0:
            ratio = _lp(derivative(pj, sder), p) / base
            worst_a = max(worst_a,
                          ratio / (2.0 * math.pi * 2.0 ** j) ** sder)
        pq = sorted(rng.choice(len(_LP_CHOICES), size=2, replace=False))
        plo, qhi = _LP_CHOICES[pq[0]], _LP_CHOICES[pq[1]]
        inv = (1.0 / plo) - (0.0 if qhi == math.inf else 1.0 / qhi)
        lo = _lp(pj, plo)
        if lo > 0:
            worst_b = max(worst_b, _lp(pj, qhi) / (2.0 ** (j * inv) * lo))
    results.append({"lemma": "bernstein_a", "constant": worst_a,
                    "tolerance": 8.0, "n_cases": n_bernstein,
                    "pass": worst_a <= 8.0})
    results.append({"lemma": "bernstein_b", "constant": worst_b,
                    "tolerance": 4.0, "n_cases": n_bernstein,
                    "pass": worst_b <= 4.0})

    # Kato-Ponce-type product rule at s = 3 in L^2:
    # ||d^3(fg)||_2 <= C (||d^3 f||_2 ||g||_inf + ||f||_inf ||d^3 g||_2).
    worst_k = 0.0
    for _ in range(n_kato):
        f = _random_poly(rng, max_mf=64)
        g = _random_poly(rng, max_mf=64)
        lhs = lp_norm(derivative(product(f, g), 3), 2)
        rhs = (lp_norm(derivative(f, 3), 2) * _lp(g, math.inf)
               + _lp(f, math.inf) * lp_norm(derivative(g, 3), 2))
        if rhs > 0:
            worst_k = max(worst_k, lhs / rhs)
    results.append({"lemma": "kato_ponce", "constant": worst_k,
                    "tolerance": 16.0, "n_cases": n_kato,
                    "pass": worst_k <= 16.0})

    return {"seed": seed, "results": results,
            "passed": all(r["pass"] for r in results)}
