"""Where does a 523.6 nm pump land in a 7.1 um PPLN crystal?

Run: python3 demos/01_phase_matching.py
"""
import numpy as np

from epskit.materials import get_material
from epskit.phasematch import CrystalSpec, PumpSpec, phase_matching_temperature, solve_signal_idler, \
    spectral_temporal_widths

pump = PumpSpec(523.6, bandwidth_nm=0.1)
ppln = get_material("MgO:LiNbO3")
crystal = CrystalSpec(ppln, length_mm=10.0, poling_period_um=7.1, temperature_c=100.0)

sol = solve_signal_idler(pump, crystal)
print(f"at {crystal.temperature_c:g} C: signal {sol.signal_nm:.2f} nm, idler {sol.idler_nm:.2f} nm")

# the oven is the tuning knob; this is how far it has to move for a 790.8 nm signal
t = phase_matching_temperature(790.8, pump, crystal)
print(f"790.8 nm signal needs {t:.2f} C")

# signal wavelength versus oven temperature
for T in np.arange(90.0, 112.5, 2.5):
    s = solve_signal_idler(pump, crystal.at_temperature(T))
    print(f"  {T:6.1f} C  ->  {s.signal_nm:8.3f} / {s.idler_nm:8.2f} nm")

w = spectral_temporal_widths(sol, pump, crystal)
print(f"coherence times: signal {w.tau_signal_ps:.2f} ps, idler {w.tau_idler_ps:.2f} ps")
