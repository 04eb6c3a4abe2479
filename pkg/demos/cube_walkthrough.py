"""Walk through the matrix side on the 3-cube: spectrum, ordering, modules, scalars."""

from thinmod import graphs
from thinmod.invariants import analyze_module
from thinmod.kernel import Arith
from thinmod.scheme import krein_parameters, primitive_idempotents, q_polynomial_orderings
from thinmod.terwilliger import decompose_standard_module, dual_data

exact = Arith(True)  # Fractions everywhere; Arith(False) switches to float64

g = graphs.hypercube(3)
dd = graphs.distance_data(g)
inn = graphs.verify_distance_regular(dd)
print("intersection array  b =", inn.b[:-1], " c =", inn.c[1:])

# eigenvalues come out descending; the Krein parameters pick the orderings
sd = primitive_idempotents(dd, inn, exact)
kd = krein_parameters(sd)
orders = q_polynomial_orderings(kd, exact, sd.n)
print("eigenvalues", [str(x) for x in sd.theta], " multiplicities", sd.m)
print("Q-polynomial orderings", orders)

sd, kd = sd.reordered(orders[0]), kd.reordered(orders[0])
dual = dual_data(sd, dd, x=0)  # dual idempotents relative to vertex 0

dec = decompose_standard_module(dual, sd, seed=0)
print(f"\n{len(dec.modules)} irreducible modules, dimensions", [W.dim for W in dec.modules])

for W in dec.modules:
    print(f"\nmodule r={W.r} t={W.t} d={W.d}  class {W.class_id}  thin={W.thin}")
    if W.d < 1:
        continue
    an = analyze_module(W, dual, sd)
    pa = an.parameter_array
    sc = an.scalars
    print("  theta      ", [str(x) for x in pa.theta])
    print("  theta*     ", [str(x) for x in pa.theta_star])
    print("  varphi     ", [str(x) for x in pa.varphi])
    print("  phi        ", [str(x) for x in pa.phi])
    print("  a b c      ", [str(x) for x in sc.a], [str(x) for x in sc.b], [str(x) for x in sc.c])
    print("  nu         ", sc.nu)
    print("  audit      ", "clean" if an.passed else an.audit.failures(),
          f"({len(an.audit.residuals)} identities checked)")
