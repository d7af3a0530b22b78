#!/usr/bin/env python3
"""Offline calibration for the additive power model.

Solves for the component powers and device stage durations so that one
simulated sensing round per configuration reproduces the reference
measurements:

  - average round power 1852.00 / 1830.54 / 1786.86 mW
    (config1 / config2 / proposed)
  - recorder send/no-send average-power delta 127.54 mW
  - round durations 57.77 s (config1) and ~16.42 s (config2)

Fixed by construction: recording takes 10 s with the mic on and the CPU
idle (the stage is I/O-bound), the uplink runs at 20,000 B/s, and framed
message sizes are payload + 9 bytes: 13 B (result), 128,053 B (4-s WAV),
1,553 B (features).

The system is underdetermined by two degrees of freedom, so two anchors
are chosen: p_idle = 1400 mW (typical SBC idle draw) and p_mic = 303 mW.
The mic anchor makes the delta equation consistent with the config2
average by itself: avg2 = (p_idle + p_mic) + delta.

The four remaining unknowns (p_cpu_busy, p_radio_tx, extract_s,
classify_s) then solve exactly. The solution is frozen into
power::calibrate_defaults() and power::StageDurations.

Usage: python3 tools/fit_power_params.py
Requires sympy.
"""

import sympy as sp

# anchors and link constants
P_IDLE = sp.Rational(1400)
P_MIC = sp.Rational(303)
RECORD_S = sp.Rational(10)
BW = sp.Rational(20000)  # bytes per second

TX_RESULT = sp.Rational(13) / BW
TX_WAV = sp.Rational(128053) / BW
TX_FEAT = sp.Rational(1553) / BW

# reference measurements
AVG1 = sp.Rational("1852.00")
AVG2 = sp.Rational("1830.54")
AVG3 = sp.Rational("1786.86")
DELTA = sp.Rational("127.54")
D1 = sp.Rational("57.77")

p_cpu, p_radio, d_extract, d_classify = sp.symbols(
    "p_cpu p_radio d_extract d_classify", positive=True
)

rec_p = P_IDLE + P_MIC            # record: mic on, CPU idle
busy_p = P_IDLE + p_cpu           # device compute
tx_p = P_IDLE + p_cpu + p_radio   # uplink: radio + serialization

d2 = RECORD_S + TX_WAV

eqs = [
    # recorder delta: WAV uplink appended to a plain 10-s recording
    sp.Eq((RECORD_S * rec_p + TX_WAV * tx_p) / d2 - rec_p, DELTA),
    # config1: everything local, result uplink
    sp.Eq(RECORD_S + d_extract + d_classify + TX_RESULT, D1),
    sp.Eq(
        (RECORD_S * rec_p + (d_extract + d_classify) * busy_p + TX_RESULT * tx_p)
        / D1,
        AVG1,
    ),
    # proposed: extraction local, features uplink
    sp.Eq(
        (RECORD_S * rec_p + d_extract * busy_p + TX_FEAT * tx_p)
        / (RECORD_S + d_extract + TX_FEAT),
        AVG3,
    ),
]

(sol,) = sp.solve(eqs, [p_cpu, p_radio, d_extract, d_classify], dict=True)

avg2 = (RECORD_S * rec_p + TX_WAV * tx_p.subs(sol)) / d2

print("p_idle_mw      = %.6f" % float(P_IDLE))
print("p_mic_mw       = %.6f" % float(P_MIC))
print("p_cpu_busy_mw  = %.6f" % float(sol[p_cpu]))
print("p_radio_tx_mw  = %.6f" % float(sol[p_radio]))
print("extract_s      = %.6f" % float(sol[d_extract]))
print("classify_s     = %.6f" % float(sol[d_classify]))
print("check avg2     = %.6f (target %.2f)" % (float(avg2), float(AVG2)))
print("check dur2     = %.6f (target ~16.42)" % float(d2))

assert abs(float(avg2) - float(AVG2)) < 1e-6
assert all(float(sol[s]) > 0 for s in (p_cpu, p_radio, d_extract, d_classify))
