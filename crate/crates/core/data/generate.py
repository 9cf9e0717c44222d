"""Regenerate the bundled reconstruction datasets. Deterministic; stdlib only."""
import math

with open("measured_cv.csv", "w") as f:
    f.write("# label: measured C-V, fabricated quad-beam varactor (reconstruction)\n")
    f.write("# source: endpoint values 1.92 pF at 0 V and 2.29 pF at 8 V; interior points follow a quadratic rise\n")
    f.write("voltage_V,capacitance_F\n")
    for i in range(33):
        v = 0.25 * i
        c = 1.92e-12 + 0.37e-12 * (v / 8.0) ** 2
        f.write(f"{v:.2f},{c:.6e}\n")

state = 12345
def noise():
    global state
    state = (1103515245 * state + 12345) % 2**31
    return state / 2**31 - 0.5

f0, q, static = 441.2e3, 50.0, 2.0
with open("ldv_spectrum_80um.csv", "w") as f:
    f.write("# label: LDV out-of-plane spectrum, 80 um cantilever (reconstruction)\n")
    f.write("# amplitude_unit: pm\n")
    f.write("# source: peak location 441.2 kHz; single-mode response with Q = 50, 1% ripple, 0.05 pm floor\n")
    f.write("frequency_Hz,amplitude\n")
    for k in range(100, 1001):
        fr = k * 1e3
        r = fr / f0
        a = static / math.sqrt((1 - r * r) ** 2 + (r / q) ** 2)
        a = a * (1 + 0.02 * noise()) + 0.05 * (1 + noise())
        f.write(f"{fr:.0f},{a:.6e}\n")
