"""Time each hot kernel under the numba and numpy implementations.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--frames 10000]

Numba compile time is paid in a warm-up call and reported separately.
"""

import argparse
import time

import numpy as np

from ringlink import kernels
from ringlink.decoder import _templates
from ringlink.power import BatteryModel, DutyCycle, PowerProfile, duty_load_series
from ringlink.readout import equalization_db
from ringlink.scenario import Scenario


def _cases(n_frames: int):
    sc = Scenario(seed=0)
    system = sc.system()
    freqs = system.sweep.frequencies
    dense = np.linspace(27e6, 28.5e6, 200_001)
    r, w, b = system.ring, system.wrist, system.bridge
    bridge_args = (r.inductance, r.resistance, r.capacitance, w.inductance, w.resistance, w.capacitance,
                   system.link.mutual_inductance, b.reference_offset(w), b.gain, b.v_in, b.floor_v)
    rng = np.random.default_rng(0)
    clean = kernels.bridge_response_db(freqs, *bridge_args)
    frames = np.ascontiguousarray(clean + 3.6 * rng.standard_normal((n_frames, freqs.size)))
    eq = equalization_db(system)
    tc, half, prom = _templates(freqs.tobytes(), 214.2e3)
    battery = BatteryModel(capacity_mah=27.0)
    load = duty_load_series(PowerProfile(), DutyCycle(4.0), dt_h=1.0 / 3600.0)
    target = battery.usable_mah * battery.cutoff_dod
    return {
        "bridge_response_db (200k bins)": ("bridge_response_db", (dense, *bridge_args)),
        f"matched_peaks ({n_frames} frames)": ("matched_peaks", (frames, eq, tc, half, prom)),
        f"argmax_peaks ({n_frames} frames)": ("argmax_peaks", (frames, eq)),
        "discharge_hours (1 s steps)": ("discharge_hours", (load, 1.0 / 3600.0, battery.full_voltage, target)),
    }


def _best(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--frames", type=int, default=10_000)
    args = ap.parse_args(argv)
    print(f"{'kernel':36s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s} {'compile s':>10s}")
    for label, (name, call) in _cases(args.frames).items():
        np_fn = kernels.IMPLEMENTATIONS["numpy"][name]
        nb_fn = kernels.IMPLEMENTATIONS["numba"][name]
        t = time.perf_counter()
        nb_fn(*call)
        compile_s = time.perf_counter() - t
        t_np = _best(np_fn, call, args.repeat)
        t_nb = _best(nb_fn, call, args.repeat)
        print(f"{label:36s} {t_np * 1e3:10.2f} {t_nb * 1e3:10.2f} {t_np / t_nb:8.1f} {compile_s:10.2f}")


if __name__ == "__main__":
    main()
