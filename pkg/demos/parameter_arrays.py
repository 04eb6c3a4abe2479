"""The formula side: everything about a module from its parameter array alone."""

import random

from thinmod import poly
from thinmod.kernel import Arith
from thinmod.params import (cube_trivial_array, derived_scalars, duality_audit, orthogonality_audit,
                            polynomial_sequences, random_parameter_array, validate_parameter_array)

exact = Arith(True)

pa = cube_trivial_array(exact)
print("valid:", validate_parameter_array(pa, exact))

ds = derived_scalars(pa, exact)
print("b  ", [str(x) for x in ds.b])
print("c  ", [str(x) for x in ds.c])
print("k  ", [str(x) for x in ds.k], " nu =", ds.nu)
print("m  ", [str(x) for x in ds.m])

# every scalar is computed at least two ways; the residuals record the disagreement
print("largest disagreement between forms:", max(ds.residuals.values()))

ps = polynomial_sequences(pa, ds, exact)
for i, u in enumerate(ps.u):
    print(f"u_{i}(theta_j) =", [str(poly.evaluate(u, th)) for th in pa.theta])

# a broken array is caught before any formula runs
bad = pa.with_changes(phi=(6, 8, 7))
print("\nbroken array:", validate_parameter_array(bad, exact))

# random arrays make a cheap corpus for the identities
rng = random.Random(1)
clean = 0
for _ in range(20):
    pa = random_parameter_array(rng, rng.randint(1, 5), exact)
    ds = derived_scalars(pa, exact)
    ps = polynomial_sequences(pa, ds, exact)
    dual = duality_audit(pa, ds, ps, exact)
    orth, _, _ = orthogonality_audit(pa, ds, ps, exact)
    clean += dual.passed and orth.passed
print(f"\n{clean}/20 random arrays pass the duality and orthogonality audits")
