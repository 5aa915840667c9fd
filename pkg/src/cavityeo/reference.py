"""Reference design points for the bundled electrode layouts.

These are the target operating figures the bundled G1-G4 layouts are
benchmarked against: coupling rates at omega_a/2pi = 200 THz and
omega_b/2pi = 6 GHz with Q_a = 1e5 and Q_b = 1e3, plus the derived
single-photon cooperativities and the pump powers that reach unit
cooperativity in the single- and dual-optical-mode topologies.
"""

REFERENCE_OMEGA_A_OVER_2PI_HZ = 200.0e12
REFERENCE_OMEGA_B_OVER_2PI_HZ = 6.0e9
REFERENCE_Q_A = 1.0e5
REFERENCE_Q_B = 1.0e3

# per-layout reference rows: coupling rate and derived converter figures
REFERENCE_DESIGN = {
    "G1": {"g0_over_2pi_hz": 0.15e3, "c0": 8e-12,
           "p_single_w": 7500.0, "p_dual_w": 200.0},
    "G2": {"g0_over_2pi_hz": 0.75e3, "c0": 2e-10,
           "p_single_w": 300.0, "p_dual_w": 8.0},
    "G3": {"g0_over_2pi_hz": 12.0e3, "c0": 5e-8,
           "p_single_w": 1.2, "p_dual_w": 0.03},
    "G4": {"g0_over_2pi_hz": 50.0e3, "c0": 9e-7,
           "p_single_w": 0.067, "p_dual_w": 0.0018},
}
