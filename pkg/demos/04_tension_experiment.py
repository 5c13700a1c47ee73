"""Uniaxial tension of the 4x4 sample, compared with the input curve.

Each ramp step relaxes the undeformed sample for 15000 iterations, so the
whole ramp takes around half a minute.
"""

from softspring import TensionProtocol, compare_to_model, estimate_poisson, preset, run_tension

mat = preset("skin", 0.3)
run = run_tension(TensionProtocol(mat))

print("step   sigma    eps_long  Ef(eps)   ratio")
for r in run:
    print(f"{r.step:4d}  {r.sigma:7.4f}  {r.eps_long:8.4f}  {mat.Ef(r.eps_long):7.4f}"
          f"  {-r.eps_trans / r.eps_long:6.4f}")

cmp = compare_to_model(run.records, mat, strain_range=(0.05, 1.0))
print("median / max stress error:", cmp.median_stress_error, cmp.max_stress_error)
print("mean Poisson ratio:", estimate_poisson(run.records)[1])

# the plateau material loses stability early; the ramp stops with a report
fat = preset("adipose", 0.3)
fat_run = run_tension(TensionProtocol(fat, max_steps=16))
print("\nadipose records:", len(fat_run), "last strain:", fat_run.records[-1].eps_long)
print("adipose failure:", fat_run.failure)
