#!/usr/bin/env python3
"""Regenerate the frozen reference constants used in the C++ tests.

Every 17-digit literal in tests/ that is not a closed form evaluated
in-test comes from this script: it recomputes each value with mpmath at
50-digit working precision and prints it rounded to 17 significant
digits (one digit beyond double precision, so the C++ literals are the
correctly rounded doubles).

Run:  python3 tools/reference_values.py
"""

from mpmath import mp, mpf, erfc, exp, log, sqrt

mp.dps = 50


def Phi(u):
    """Standard normal CDF."""
    return erfc(-u / sqrt(2)) / 2


def bs_d1(x, K, rate, sigma, tau):
    return (log(x / K) + (rate + sigma**2 / 2) * tau) / (sigma * sqrt(tau))


def bs_call(x, K, rate, sigma, tau):
    """Black-Scholes call value and space derivative (delta)."""
    d1 = bs_d1(x, K, rate, sigma, tau)
    d2 = d1 - sigma * sqrt(tau)
    v = x * Phi(d1) - K * exp(-rate * tau) * Phi(d2)
    return v, Phi(d1)


def bs_put(x, K, rate, sigma, tau):
    d1 = bs_d1(x, K, rate, sigma, tau)
    d2 = d1 - sigma * sqrt(tau)
    v = K * exp(-rate * tau) * Phi(-d2) - x * Phi(-d1)
    return v, Phi(d1) - 1


def emit(name, value):
    print(f"{name:34s} = {mp.nstr(value, 17)}")


def main():
    print("# standard normal CDF probes")
    for u in ("0.5", "1.0", "1.96", "-2.33", "3.7", "-5.0"):
        emit(f"Phi({u})", Phi(mpf(u)))

    # Straddle under equal lending/borrowing rates: the nonlinear
    # driver linearizes, so v = BS call + BS put at the common rate and
    # z = sigma * x * v_x.
    sigma, r, T, K = mpf("0.2"), mpf("0.01"), mpf(2), mpf(1)
    print("\n# straddle, r = R = 0.01, sigma = 0.2, T = 2, K = 1")
    for tag, t, x in (("t=0,   x=1  ", mpf(0), mpf(1)),
                      ("t=0.75,x=1.3", mpf("0.75"), mpf("1.3"))):
        tau = T - t
        cv, cd = bs_call(x, K, r, sigma, tau)
        pv, pd = bs_put(x, K, r, sigma, tau)
        emit(f"straddle v ({tag})", cv + pv)
        emit(f"straddle z ({tag})", sigma * x * (cd + pd))

    # Call under differential rates 0.04 / 0.06 with mu = R: replication
    # borrows at every state, so the value is the BS call at the
    # borrowing rate R.
    R = mpf("0.06")
    print("\n# call, r = 0.04, R = mu = 0.06, sigma = 0.2, T = 2, K = 1")
    for tag, t, x in (("t=0,  x=1  ", mpf(0), mpf(1)),
                      ("t=1.5,x=0.8", mpf("1.5"), mpf("0.8"))):
        tau = T - t
        cv, cd = bs_call(x, K, R, sigma, tau)
        emit(f"call v ({tag})", cv)
        emit(f"call z ({tag})", sigma * x * cd)

    # Transition-CDF probes for the two analytic kernels.
    print("\n# kernel transition CDFs")
    b, s, dt, x, y = mpf("0.3"), mpf("1.5"), mpf("0.04"), mpf("0.1"), mpf("0.2")
    emit("brownian(0.3,1.5) F(.04,.1,.2)", Phi((y - x - b * dt) / (s * sqrt(dt))))
    mu, s, dt, x, y = mpf("0.06"), mpf("0.2"), mpf("0.01"), mpf(1), mpf("1.02")
    emit("geometric(.06,.2) F(.01,1,1.02)",
         Phi((log(y / x) - (mu - s**2 / 2) * dt) / (s * sqrt(dt))))


if __name__ == "__main__":
    main()
