"""Stress-strain curves of the two tissue presets, and a custom curve from knots."""

import numpy as np

from softspring import build_from_points, preset_adipose, preset_skin

skin = preset_skin()
fat = preset_adipose()

strains = np.linspace(0.0, 1.0, 11)
print("strain    skin     adipose")
for e, s, a in zip(strains, skin.Ef(strains), fat.Ef(strains)):
    print(f"{e:6.2f}  {s:7.4f}  {a:7.4f}")

# skin keeps its initial modulus up to 0.4, then stiffens
print("skin slope on [0, 0.4]:", (skin.Ef(0.4) - skin.Ef(0.0)) / 0.4)
print("skin slope on [0.75, 1]:", (skin.Ef(1.0) - skin.Ef(0.75)) / 0.25)

# adipose flattens out
print("adipose Ef(0.8), Ef(0.95):", fat.Ef(0.8), fat.Ef(0.95))

# compression mirrors the initial modulus
print("skin Ef(-0.2):", skin.Ef(-0.2))

# any marked points can be joined with lines or cubic pieces
custom = build_from_points([(0.2, 0.2), (0.5, 0.9), (1.0, 1.4)], ["cubic", "linear"], name="custom")
for e in (0.2, 0.35, 0.5, 0.75):
    print(f"custom Ef({e}) = {custom(e):.4f}")
