"""A single cell solved two ways: static root finding and dynamic relaxation."""

from softspring import TensionProtocol, preset, single_cell_oracle
from softspring.experiment import run_step

for name in ("skin", "adipose"):
    mat = preset(name)
    print(f"\n{name} (nu={mat.nu})")
    print(" sigma    oracle eps   relax eps    gap")
    for frac in (0.1, 0.3, 0.5, 0.7, 0.9):
        sigma = frac * float(mat.Ef(1.0))
        o_long, o_trans = single_cell_oracle(mat, sigma)
        rec = run_step(TensionProtocol(mat, nx=1, ny=1), 0, sigma)
        print(f"{sigma:6.3f}  {o_long:10.6f}  {rec.eps_long:10.6f}  {abs(rec.eps_long - o_long):.1e}")
