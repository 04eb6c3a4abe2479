"""Generate q-Racah and classical-parameter arrays, then fit them back."""

import random

from thinmod import families as fam
from thinmod.kernel import Arith

exact = Arith(True)
rng = random.Random(4)

consts, pa = fam.random_q_racah(rng, 4, exact)
print("q-Racah constants drawn:", {k: str(v) for k, v in consts.items()})
print("theta ", [str(x) for x in pa.theta])

fit = fam.fit_q_racah(pa.theta, pa.theta_star, exact, pa.varphi, pa.phi)
print("fitted q, s, s*:", fit.q, fit.s, fit.sstar, " r1, r2:", fit.r1, fit.r2)

mod, ints, rep = fam.family_audit("qracah", fit, pa, exact)
print("closed-form b_i:", [str(x) for x in ints["b"]])
print("audit:", "clean" if rep.passed else rep.failures())

# the same eigenvalues read with 1/q instead of q
inv = fam.fit_q_racah(pa.theta, pa.theta_star, exact, pa.varphi, pa.phi, prefer_large=False)
print("with prefer_large=False: q =", inv.q)

# classical parameters (D, b, alpha, sigma) = (3, 2, 1, 6)
b_seq, c_seq, pa = fam.generate_classical(3, 2, 1, 6, exact)
print("\nclassical b_i", [str(x) for x in b_seq], " c_i", [str(x) for x in c_seq])
fit = fam.fit_classical(pa.theta, pa.theta_star, b_seq, c_seq, exact, pa.varphi, pa.phi)
print("fitted (b, alpha, sigma) =", (str(fit.b), str(fit.alpha), str(fit.sigma)))
print("eta, mu, h =", fit.eta, fit.mu, fit.h, " h* =", fit.hstar, " tau =", fit.tau)
print("audit:", "clean" if fam.family_audit("classical", fit, pa, exact)[2].passed else "FAILED")

# the cube eigenvalues are an arithmetic progression, so no q fits
try:
    fam.fit_q_racah((3, 1, -1, -3), (3, 1, -1, -3), exact)
except fam.NotOfType as exc:
    print("\ncube rejected:", exc)
