"""Edge and diagonal spring tension for a stretched square cell."""

import math

from softspring import (
    SpringEval,
    compute_J,
    diag_force_scalar,
    diag_rest_length,
    edge_force_scalar,
    preset_skin,
    stretched_diag_length,
)

L = 1.0
Ld = diag_rest_length(L)
print("rest diagonal:", Ld)

for nu in (0.0, 0.3, 0.45):
    mat = preset_skin(nu)
    print(f"\nnu = {nu}")
    print("strain   edge      diagonal   J")
    for eps in (0.0, 0.1, 0.3, 0.6, 0.9):
        d = stretched_diag_length(L, eps * L, nu)
        J = compute_J(Ld, d - Ld, nu)
        fe = edge_force_scalar(SpringEval(L, L * (1 + eps), 1.0), mat)
        fd = diag_force_scalar(SpringEval(Ld, d, 1.0), mat)
        print(f"{eps:5.2f}  {fe:8.4f}  {fd:8.4f}  {J:6.3f}")

# with nu = 0 the diagonal carries no tension and the edge is the plain law
mat = preset_skin(0.0)
print("\nnu=0 diagonal:", diag_force_scalar(SpringEval(Ld, Ld * 1.3, 1.0), mat))
print("nu=0 edge vs Ef:", edge_force_scalar(SpringEval(L, 1.5, 1.0), mat), mat.Ef(0.5))
print("sqrt(2) check:", math.isclose(Ld, math.sqrt(2)))
