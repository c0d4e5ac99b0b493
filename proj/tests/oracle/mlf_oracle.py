#!/usr/bin/env python3
"""Extended-precision reference values for the two-parameter Mittag-Leffler
function on the negative real axis.

Two independent routes are used and cross-checked where both apply:
  * the power series, summed with mpmath at a working precision chosen so that
    cancellation among the huge alternating terms is absorbed;
  * for large |z|, the residue (exponential) terms plus the algebraic
    asymptotic series, truncated at its smallest term.

Writes tests/data/mlf_oracle.csv with columns alpha,beta,z,value,oracle_digits.
Points whose relative condition number |z E'(z) / E(z)| exceeds COND_MAX are
skipped: near a sign change of E no double-precision evaluator can deliver a
small relative error, so those points do not measure the evaluator.
"""

import csv
import os
import sys

import mpmath as mp

COND_MAX = 1.0e3
GUARD_DIGITS = 40


def series(alpha, beta, z):
    alpha = mp.mpf(alpha)
    beta = mp.mpf(beta)
    z = mp.mpf(z)
    w = abs(z) ** (1 / alpha) if z != 0 else mp.mpf(0)
    dps = int(float(w) / 2.302585 + GUARD_DIGITS)
    with mp.workdps(dps):
        z = mp.mpf(z)
        total = mp.mpf(0)
        term_pow = mp.mpf(1)
        k = 0
        tiny = mp.mpf(10) ** (-(GUARD_DIGITS + 5))
        while True:
            t = term_pow * mp.rgamma(alpha * k + beta)
            total += t
            if k > float(w) / float(alpha) + 10 and abs(t) < tiny * max(abs(total), tiny):
                break
            term_pow *= z
            k += 1
            if k > 200000:
                raise RuntimeError("series did not converge")
        return +total


def asymptotic(alpha, beta, z, dps=60):
    with mp.workdps(dps):
        alpha = mp.mpf(alpha)
        beta = mp.mpf(beta)
        x = -mp.mpf(z)
        zeta = x ** (1 / alpha) * mp.expjpi(1 / alpha)
        res = 0
        if alpha > 1:
            res = (2 / alpha) * mp.re(zeta ** (1 - beta) * mp.exp(zeta))
        elif alpha == 1:
            res = mp.re(mp.mpc(-x) ** (1 - beta) * mp.exp(-x))
        zz = -x
        alg = mp.mpf(0)
        prev_env = None
        for k in range(1, 100000):
            # |1/Gamma(beta - alpha k)| <= Gamma(1 - beta + alpha k) / pi; truncate on that envelope
            env = mp.gamma(1 - beta + alpha * k) / mp.pi * x ** (-k)
            if prev_env is not None and env > prev_env:
                break
            alg -= zz ** (-k) * mp.rgamma(beta - alpha * k)
            prev_env = env
            if env < mp.mpf(10) ** (-(dps - 5)) * (abs(alg) + abs(res)):
                break
        prev = prev_env
        return res + alg, abs(prev) if prev is not None else mp.mpf(0)


def reference(alpha, beta, z):
    w = abs(mp.mpf(z)) ** (1 / mp.mpf(alpha))
    if w <= 400:
        return series(alpha, beta, z), 30
    val, err = asymptotic(alpha, beta, z)
    digits = int(min(30, -mp.log10(err / abs(val)))) if err != 0 else 30
    return val, digits


def condition(alpha, beta, z):
    if z == 0:
        return 0.0
    # derivative via the series relation dE/dz = (E_{a,b-1} - (b-1) E_{a,b}) / (a z)
    e = reference(alpha, beta, z)[0]
    em = reference(alpha, beta - 1, z)[0]
    de = (em - (beta - 1) * e) / (alpha * z)
    return float(abs(z * de / e)) if e != 0 else float("inf")


def self_check():
    # Both routes agree where both are cheap to evaluate.
    worst = 0
    for alpha in (1.1, 1.5, 1.9):
        for beta in (1.0, 2.0, alpha):
            for z in (-300.0, -1.0e3, -5.0e3, -2.0e4):
                w = float(abs(z) ** (1 / alpha))
                if w < 40 or w > 400:
                    continue
                s = series(alpha, beta, z)
                a, err = asymptotic(alpha, beta, z, dps=80)
                # the asymptotic route is only as good as its smallest term
                worst = max(worst, float(abs(s - a) / (10 * err + mp.mpf(10) ** -33 * abs(s))))
    if worst > 1:
        raise RuntimeError(f"oracle routes disagree: {worst}")
    # closed forms
    assert abs(series(1.0, 1.0, -1.0) - mp.e ** -1) < 1e-30
    assert abs(series(2.0, 1.0, float(-mp.pi ** 2)) - mp.cos(mp.sqrt(mp.mpf(float(mp.pi ** 2))))) < 1e-25
    return worst


def main(out_path):
    mp.mp.dps = 50
    worst = self_check()
    rows = []
    alphas = (1.1, 1.5, 1.9)
    zs = [0.0]
    n = 24
    for i in range(n):
        # log-spaced magnitudes in [1e-3, 1e6], exactly representable doubles
        mag = 10.0 ** (-3 + 9 * i / (n - 1))
        zs.append(-float(mag))
    for alpha in alphas:
        for beta in (1.0, 2.0, alpha):
            for z in zs:
                if z != 0 and condition(alpha, beta, z) > COND_MAX:
                    continue
                val, digits = reference(alpha, beta, z)
                rows.append((alpha, beta, z, val, digits))
    # named points used directly by unit tests
    extra = [(1.5, 1.5, -2.0), (1.5, 1.0, float(-mp.pi ** 2)), (1.5, 2.0, float(-mp.pi ** 2)),
             (1.5, 1.5, float(-mp.pi ** 2)), (1.0, 1.0, -1.0)]
    for alpha, beta, z in extra:
        val, digits = reference(alpha, beta, z)
        rows.append((alpha, beta, z, val, digits))
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "beta", "z", "value", "oracle_digits"])
        for alpha, beta, z, val, digits in rows:
            w.writerow([repr(float(alpha)), repr(float(beta)), repr(float(z)),
                        mp.nstr(val, 25, min_fixed=1, max_fixed=0), digits])
    print(f"wrote {len(rows)} rows to {out_path}; route disagreement {worst:.2e}", file=sys.stderr)


if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    default = os.path.join(here, "..", "data", "mlf_oracle.csv")
    main(sys.argv[1] if len(sys.argv) > 1 else default)
