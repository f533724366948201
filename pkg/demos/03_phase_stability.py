"""Thermal drift of the Bell-state phase in the counter-propagating loop.

Run: python3 demos/03_phase_stability.py
"""
import math

from epskit.materials import get_material
from epskit.stability import Component, ComponentStack, displacer_stacks, per_kelvin

PUMP, SIGNAL, IDLER = 523.6, 790.8, 1550.0
bbo = get_material("alpha-BBO")

cw, ccw = displacer_stacks(bbo, 39.4)
loop = per_kelvin(cw, ccw, PUMP, SIGNAL, IDLER)
for wave, r in loop.per_wave.items():
    print(f"{wave:>6}: {r / math.pi:6.3f} pi rad/K")
print(f"relative phase drift:     {loop.relative / math.pi:.4f} pi rad/K")
print(f"without self-compensation: {loop.no_selfcomp / math.pi:.3f} pi rad/K")

# an extra 2 mm calcite plate in one direction only breaks the symmetry
calcite = get_material("calcite")
extra = dict(ccw)
extra["signal"] = ComponentStack(tuple(ccw["signal"]) + (Component(calcite, 2.0, "o", "calcite plate"),))
lopsided = per_kelvin(cw, extra, PUMP, SIGNAL, IDLER)
print(f"with an unpaired calcite plate: {lopsided.relative / math.pi:.4f} pi rad/K")
