"""Named verification suites and the claims each configuration must cover."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

from .actions import tail_set_estimate
from .bsgroup import AffineElement, BSGroup, Word, britton_soundness, index2_iso_check
from .montecarlo import sigma
from .report import VerificationReport
from .stability import (
    StabilityConfig,
    carry_identity_instance,
    check_commutation,
    check_disjoint_exact,
    check_relations,
    chi_square_pi,
    chi_square_tau,
    estimate_sym_diff_multi,
    estimate_sym_diff_table,
    pi_preimage_measure,
    t_measure_check,
    t_measure_cylinders,
    theta_report,
    v_suite,
)
from .vaes import VaesConfig, chi_square_pi as vaes_chi_square_pi, surjectivity_note, vaes_suite

EXACT_JMAX = 8
P_VALUE = 0.01


def mc_jmax(jmax: int) -> int:
    """Monte Carlo levels run two past the exact ones (8 exact, 10 sampled by default)."""
    return jmax + 2


def _params(cfg: StabilityConfig, **extra) -> dict:
    return {"p": cfg.p, "q": cfg.q, "r": cfg.r, "M": cfg.M, **extra}


# ---------------------------------------------------------------------------
# Baumslag-Solitar suites


def suite_relations(cfg: StabilityConfig, samples: int, seed: int, jmax: int):
    yield check_relations(cfg.p, cfg.q, points=100, digits=64, seed=seed)


def suite_t_measure(cfg: StabilityConfig, samples: int, seed: int, jmax: int):
    exhaustive = cfg.p * cfg.q <= 6
    cases = list(t_measure_cylinders(cfg.p, cfg.q, None if exhaustive else 100, seed))
    bad = []
    for ks, d, ls in cases:
        ok, msg = t_measure_check(cfg.p, cfg.q, ks, d, ls, seed=seed)
        if not ok:
            bad.append(msg)
    yield VerificationReport(
        claim="sec-sol.t-measure",
        mode="exact",
        params=_params(cfg, cylinders=len(cases), exhaustive=exhaustive, seed=seed),
        value=len(bad),
        bound=0,
        passed=not bad,
        detail=f"cylinders={len(cases)} failures={bad[:3]}",
    )


def suite_carry(cfg: StabilityConfig, samples: int, seed: int, jmax: int):
    rng = random.Random(seed)
    bad = []
    n = 1000
    for _ in range(n):
        ok, msg = carry_identity_instance(rng, cfg.p, cfg.q)
        if not ok:
            bad.append(msg)
    yield VerificationReport(
        claim="claim-eq",
        mode="exact",
        params=_params(cfg, instances=n, seed=seed),
        value=len(bad),
        bound=0,
        passed=not bad,
        detail=f"failures={bad[:3]}",
    )


def suite_britton(cfg: StabilityConfig, samples: int, seed: int, jmax: int):
    yield britton_soundness(BSGroup.from_pqr(cfg.p, cfg.q, cfg.r), pairs=1000, seed=seed)
    yield index2_iso_check(cfg.r * cfg.p, cfg.r * cfg.q, n_random=100, seed=seed)


def suite_pi(cfg: StabilityConfig, samples: int, seed: int, jmax: int):
    if cfg.p == 1:
        bad = []
        count = 0
        for d in range(3):
            want = Fraction(1, cfg.q ** ((d + 1) * cfg.M))
            for targets in itertools.product(range(cfg.base**cfg.M), repeat=d + 1):
                count += 1
                got = pi_preimage_measure(cfg, targets)
                if got != want:
                    bad.append((targets, got))
        yield VerificationReport(
            claim="lem-1-pi.i",
            mode="exact",
            params=_params(cfg, dmax=2, targets=count),
            value=len(bad),
            bound=0,
            passed=not bad,
            detail=f"(mu x nu)(pi^-1(T)) = q^-(d+1)M for all {count} targets; failures={bad[:3]}",
        )
    claim = "lem-1-pi.i" if cfg.p == 1 else "lem-2-ai.i"
    for j in (2, 5):
        pv = chi_square_pi(cfg, j, samples, seed)
        yield VerificationReport(
            claim=claim,
            mode="mc",
            params=_params(cfg, j=j, samples=samples, seed=seed, stat="chi-square pi_j"),
            value=pv,
            bound=P_VALUE,
            passed=pv > P_VALUE,
            detail="p-value of pi_j against the uniform law",
        )
        pv = chi_square_tau(cfg, j, samples, seed)
        yield VerificationReport(
            claim="thm-h-stable.tau",
            mode="mc",
            params=_params(cfg, j=j, samples=samples, seed=seed, stat="chi-square tau_j"),
            value=pv,
            bound=P_VALUE,
            passed=pv > P_VALUE,
            detail="p-value of tau_j against the uniform law",
        )


def suite_ac_exact(cfg: StabilityConfig, samples: int, seed: int, jmax: int):
    for j in range(min(jmax, EXACT_JMAX) + 1):
        yield check_disjoint_exact(cfg, j)


def decay_reports(cfg: StabilityConfig, samples: int, seed: int, jtop: int):
    """t-decay against 2^-j plus the CI half-width for j <= jtop; a-decay from j = 2 to jtop."""
    t_claim = "lem-1-pi.ii" if cfg.p == 1 else "lem-2-ai.ii"
    a_claim = "lem-ai" if cfg.p == 1 else "lem-2-ai.ii"
    jobs = [(Word.t(), j) for j in range(jtop + 1)] + [(Word.a(), 2), (Word.a(), jtop)]
    res = estimate_sym_diff_table(cfg, jobs, samples, seed)
    for j, (est, lo, hi, hits) in enumerate(res[: jtop + 1]):
        hw = (hi - lo) / 2
        bound = 2.0**-j + hw
        yield VerificationReport(
            claim=t_claim,
            mode="mc",
            params=_params(cfg, g="t", j=j, samples=samples, seed=seed),
            value=est,
            bound=bound,
            ci_low=lo,
            ci_high=hi,
            passed=est <= bound,
            detail=f"hits={hits}; bound is 2^-j plus the 99% half-width",
        )
    low, high = res[jtop + 1], res[jtop + 2]
    if cfg.p == 1:
        ok = high[0] < low[0] and high[0] < 0.05
        note = "strict decrease required"
    else:
        # for p > 1 the j = 2 value is already below the sampling resolution
        ok = high[0] <= low[0] and high[0] < 0.05
        note = "non-strict: both levels may sit below the sampling resolution"
    yield VerificationReport(
        claim=a_claim,
        mode="mc",
        params=_params(cfg, g="a", j=jtop, samples=samples, seed=seed),
        value=high[0],
        bound=low[0],
        ci_low=high[1],
        ci_high=high[2],
        passed=ok,
        detail=f"j=2 estimate={low[0]} ci=[{low[1]:.4g},{low[2]:.4g}]; {note}",
    )


def suite_decay(cfg: StabilityConfig, samples: int, seed: int, jmax: int):
    yield from decay_reports(cfg, samples, seed, mc_jmax(jmax))


def suite_ac_estimate(cfg: StabilityConfig, samples: int, seed: int, jmax: int):
    """omega(U_j B_j sym-diff B_j) sampled; its interval must contain the exact gap."""
    claim = "thm-p-1.3" if cfg.p == 1 else "thm-p-2.3"
    exact = 2 * Fraction(1, cfg.base**cfg.M)
    n = min(samples, 20_000)
    for j, (est, lo, hi, hits) in estimate_sym_diff_multi(cfg, "U", [2, mc_jmax(jmax)], n, seed).items():
        yield VerificationReport(
            claim=claim,
            mode="mc",
            params=_params(cfg, j=j, samples=n, seed=seed),
            value=est,
            bound=exact,
            ci_low=lo,
            ci_high=hi,
            passed=lo <= float(exact) <= hi,
            detail=f"hits={hits}; exact value of the gap is {exact}",
        )


def suite_commutation(cfg: StabilityConfig, samples: int, seed: int, jmax: int):
    n = min(samples, 10_000)
    for g in ("a", "t"):
        yield check_commutation(cfg, 4, g, n, seed)


def suite_v(cfg: StabilityConfig, samples: int, seed: int, jmax: int):
    for j in range(min(jmax, EXACT_JMAX) + 1):
        yield v_suite(cfg, j, samples=50, seed=seed)


def suite_theta(cfg: StabilityConfig, samples: int, seed: int, jmax: int):
    for s in (AffineElement(cfg.p, cfg.q, Fraction(1)), AffineElement(cfg.p, cfg.q, Fraction(cfg.p, cfg.q))):
        yield theta_report(cfg, s, seeds=100, cap=64)
    n = min(samples, 10_000)
    for k in range(7):
        bound = Fraction(cfg.p, cfg.q) ** (k + 1)
        est, lo, hi = tail_set_estimate(cfg.p, cfg.q, k, n, seed)
        limit = float(bound) + 3 * sigma(float(bound), n)
        yield VerificationReport(
            claim="claim-a-zero",
            mode="mc",
            params=_params(cfg, k=k, samples=n, seed=seed),
            value=est,
            bound=limit,
            ci_low=lo,
            ci_high=hi,
            passed=est <= limit,
            detail=f"nu(A_k) <= {bound}; bound adds 3 sigma",
        )


BS_SUITES = {
    "relations": suite_relations,
    "t-measure": suite_t_measure,
    "carry": suite_carry,
    "britton": suite_britton,
    "pi": suite_pi,
    "ac-exact": suite_ac_exact,
    "decay": suite_decay,
    "ac-estimate": suite_ac_estimate,
    "commutation": suite_commutation,
    "v": suite_v,
    "theta": suite_theta,
}


def bs_claims(cfg: StabilityConfig, suites) -> dict[str, list[str]]:
    """Claims each selected suite must report for this configuration."""
    one = cfg.p == 1
    table = {
        "relations": ["sec-sol.relations"],
        "t-measure": ["sec-sol.t-measure"],
        "carry": ["claim-eq"],
        "britton": ["subsec-co.britton", "thm-stable.phi"],
        "pi": ["lem-1-pi.i" if one else "lem-2-ai.i", "thm-h-stable.tau"],
        "ac-exact": ["lem-1-ac.ii" if one else "lem-2-ac.ii"],
        "decay": ["lem-1-pi.ii", "lem-ai"] if one else ["lem-2-ai.ii"],
        "ac-estimate": ["thm-p-1.3" if one else "thm-p-2.3"],
        "commutation": ["lem-1-ac.i" if one else "lem-2-ac.i"],
        "v": ["thm-h-stable"],
        "theta": [] if one else ["lem-theta", "claim-a-zero"],
    }
    return {name: table[name] for name in suites}


def bs_suite_names(cfg: StabilityConfig) -> list[str]:
    # stabilization and its tail sets only arise for p > 1
    return [name for name in BS_SUITES if not (name == "theta" and cfg.p == 1)]


# ---------------------------------------------------------------------------
# Vaes suites


def suite_vaes_core(cfg: VaesConfig):
    yield from vaes_suite(cfg)


def suite_vaes_pi(cfg: VaesConfig):
    for n in range(min(cfg.nmax, 1) + 1):
        pv = vaes_chi_square_pi(cfg, n, cfg.samples, cfg.seed)
        yield VerificationReport(
            claim="sec-v.pi",
            mode="mc",
            params={"n": n, "p": cfg.primes[n], "samples": cfg.samples, "seed": cfg.seed},
            value=pv,
            bound=P_VALUE,
            passed=pv > P_VALUE,
            detail="p-value of pi_n against the uniform law on H_n",
        )


def suite_vaes_surjectivity(cfg: VaesConfig):
    sizes = surjectivity_note()
    ok = all(a == b for a, b in sizes.values())
    yield VerificationReport(
        claim="rem-v.surjectivity",
        mode="exact",
        params={"primes": sorted(sizes)},
        value={p: a for p, (a, _) in sizes.items()},
        bound={p: b for p, (_, b) in sizes.items()},
        passed=ok,
        detail="elementary matrices generate SL(3, Z/p): the reduction from SL(3, Z) is assumed onto "
        "for every configured prime and checked here for p = 2, 3",
    )


VAES_SUITES = {
    "vaes": suite_vaes_core,
    "vaes-pi": suite_vaes_pi,
    "surjectivity": suite_vaes_surjectivity,
}


def vaes_claims(suites) -> dict[str, list[str]]:
    table = {
        "vaes": ["thm-s-v.1", "thm-s-v.2", "thm-s-v.3"],
        "vaes-pi": ["sec-v.pi"],
        "surjectivity": ["rem-v.surjectivity"],
    }
    return {name: table[name] for name in suites}
