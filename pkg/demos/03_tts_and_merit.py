"""
Success rate, TTS and the normalized figures of merit
=====================================================

A small benchmark grid at both modes, followed by the time-to-solution
summary and the chip-level figures of merit computed from a measured TTS.
"""

from landscape_ising.experiment import RunConfig, run_bench, sr_grid, tts_tables
from landscape_ising.metrics import MeritInputs, figures_of_merit, normalized_spin_area

cfg = RunConfig(sizes=(32, 64), densities=(0.5,), instances_per_cell=5, runs_per_instance=200)
rows = run_bench(cfg)

for g in sr_grid(rows):
    print(f"n={g['n']:2d} density={g['density']} {g['mode']:9s} mean SR {g['mean_p_suc']:.3f}")

cdf, summary = tts_tables(rows)
for s in summary:
    print(f"n={s['n']:2d} {s['mode']:9s} TTS mean {s['mean_tts_seconds']} s, median {s['median_tts_seconds']} s, "
          f"unsolved {s['unsolved']}")

# a 0.72 ms TTS on a 64-spin, 31-level, all-to-all directed array at 31.6 mW
chip = MeritInputs(power=31.6e-3, anneal_time=3e-6, coeff_levels=31, n_spins=64,
                   interactions_per_spin=63, directionality=2)
fom = figures_of_merit(chip, 0.72e-3)
print(f"ETS {fom['ets'] * 1e6:.2f} uJ, normalized ETS {fom['normalized_ets'] * 1e9:.2f} nJ")
print(f"normalized spin area {normalized_spin_area(0.943e-6, 64, 31, 2, 63) * 1e12:.1f} um^2")
