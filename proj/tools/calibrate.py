#!/usr/bin/env python3
"""Re-derives the calibrated defaults of the timing, power, leakage and
antialias models from their target operating points.

    python3 tools/calibrate.py [--check path/to/ipsim]

With --check, the derived values are compared against `ipsim report` run on
configs/operating_point.json.
"""

import argparse
import json
import math
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

ROOT = Path(__file__).resolve().parent.parent

# Operating point.
SENSOR_W, SENSOR_H = 1920, 1080
PATCH = 32
M = 400
C = 2
ACTIVE = 0.25
TARGET_HZ = 90.0
POWER_HZ = 30.0
POWER_CAP_MW = 60.0

# Chosen defaults (see README).
T_DAC, T_PWM = 1.0e-6, 0.7e-6
E_ADC, E_DAC = 5e-9, 1e-12
C_UNIT, V_DRIVE = 30e-15, 1.0
P_OPAMP, P_MISC = 0.5e-6, 5e-3


def timing():
    steps = M * math.ceil(PATCH / C)
    budget = 1.0 / (TARGET_HZ * steps)
    compute = steps * (T_DAC + T_PWM)
    print("timing")
    print(f"  weight steps per frame      {steps}")
    print(f"  max t_dac + t_pwm for 90 Hz {budget * 1e6:.4f} us")
    print(f"  chosen t_dac + t_pwm        {(T_DAC + T_PWM) * 1e6:.4f} us")
    print(f"  compute time                {compute * 1e3:.4f} ms -> {1 / compute:.2f} Hz, "
          f"{SENSOR_W * SENSOR_H / compute / 1e6:.1f} Mpix/s")
    small = 192 * math.ceil(8 / C) * (T_DAC + T_PWM)
    print(f"  8x8, M=192                  {1 / small:.1f} Hz")
    return {"compute_time_s": compute, "frame_rate_hz": 1 / compute}


def power():
    patches = (SENSOR_W // PATCH) * (SENSOR_H // PATCH)
    conv = patches * ACTIVE * M * POWER_HZ
    adc = conv * E_ADC
    dac = M * PATCH * SENSOR_W * POWER_HZ * E_DAC
    analog = patches * PATCH * PATCH * ACTIVE * M * 0.5 * C_UNIT * V_DRIVE**2 * POWER_HZ
    opamp = patches * P_OPAMP
    total = adc + dac + analog + opamp + P_MISC
    others = total - adc
    print("power @ 30 Hz")
    print(f"  conversions/s               {conv:.4g}")
    for name, v in (("adc", adc), ("dac", dac), ("analog", analog), ("opamp", opamp), ("misc", P_MISC)):
        print(f"  {name:<27} {v * 1e3:.4f} mW")
    print(f"  total                       {total * 1e3:.4f} mW ({total * 1e3 / (SENSOR_W * SENSOR_H / 1e6):.2f} mW/Mpix)")
    # Bounds on E_adc with the other components fixed.
    e_max = (POWER_CAP_MW * 1e-3 - others) / conv
    e_min = max(dac, analog, opamp, P_MISC) / conv
    print(f"  E_adc window                ({e_min * 1e9:.3f}, {e_max * 1e9:.3f}) nJ for ADC-largest and <= 60 mW")
    print(f"  E_dac = 1 nJ would give     {M * PATCH * SENSOR_W * POWER_HZ * 1e-9 * 1e3:.1f} mW of DAC power")
    return {"total": total * 1e3, "adc": adc * 1e3}


def leakage():
    tau = -10e-6 / math.log(0.9)
    print("leakage")
    print(f"  tau for 10% droop in 10 us  {tau * 1e6:.6f} us")
    print(f"  0.5 V after 10 us           {0.5 * math.exp(-10e-6 / tau):.9f} V "
          f"(tau rounded to 94.9 us: {0.5 * math.exp(-10e-6 / 94.9e-6):.9f} V)")


def taps(sigma):
    r = math.ceil(4 * sigma)
    k = np.arange(-r, r + 1)
    t = np.exp(-0.5 * k**2 / sigma**2)
    return k, t / t.sum()


def response(sigma, f):
    k, t = taps(sigma)
    return float(np.sum(t * np.cos(2 * np.pi * f * k)))


def antialias():
    print("antialias sigma (sampled, +-4 sigma, unit-sum kernel; |H(fc)| = 1/sqrt 2)")
    for cutoff in (0.25, 0.5, 1.0):
        fc = cutoff / 2
        closed = math.sqrt(math.log(2)) / (2 * math.pi * fc)
        sigma = brentq(lambda s: response(s, fc) - 2**-0.5, 0.2, 20.0, xtol=1e-15)
        print(f"  cutoff {cutoff:<4} sigma {sigma:.16g}  (continuous closed form {closed:.4f}, "
              f"which gives |H| {response(closed, fc):.4f})")


def check(ipsim, derived):
    with tempfile.TemporaryDirectory() as d:
        out = Path(d) / "r.json"
        subprocess.run([ipsim, "report", "--config", str(ROOT / "configs" / "operating_point.json"),
                        "--out", str(out)], check=True, capture_output=True)
        rep = json.loads(out.read_text())
    pairs = [
        ("compute_time_s", rep["compute_time_s"], derived["compute_time_s"]),
        ("frame_rate_hz", rep["frame_rate_hz"], derived["frame_rate_hz"]),
        ("power total mW", rep["power_mw"]["total"], derived["total"]),
        ("power adc mW", rep["power_mw"]["adc"], derived["adc"]),
    ]
    ok = True
    print("check against ipsim report")
    for name, got, want in pairs:
        good = math.isclose(got, want, rel_tol=1e-12)
        ok &= good
        print(f"  {name:<27} {got:.10g} vs {want:.10g} {'ok' if good else 'MISMATCH'}")
    return ok


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--check", metavar="IPSIM", help="compare with `ipsim report`")
    args = ap.parse_args()
    derived = timing()
    derived.update(power())
    leakage()
    antialias()
    if args.check and not check(args.check, derived):
        sys.exit(1)


if __name__ == "__main__":
    main()
