"""
The full experiment pipeline
============================

One config dict drives everything: calibration, flows, the estimate
harness, the distance battery, and artifact emission. This is the
library-level equivalent of `torusflow run --config experiment.json`.
Artifacts land in runs/demo next to this script.
"""

import json
from pathlib import Path

from torusflow import config_from_dict, exit_code_of, run_experiment

config = config_from_dict(
    {
        "geometry": {"n": 1, "N": 32},
        "scenario": {"indices": [1, 4, 16], "seed": 90, "p": "inf"},
        "distance": {"queries": 5, "flat_queries": 50},
        "seed": 5,
    }
)
print(f"config hash {config.config_hash[:16]}..., trace key {config.trace_key[:16]}...")

out = Path(__file__).resolve().parent / "runs" / "demo"
manifest = run_experiment(config, out)

print(f"\nscenarios:")
for row in manifest.scenarios:
    print(f"  i={row['index']}: {row['status']}, amplitude {row['amplitude']:.6f}, "
          f"floor {row['curvature_floor']:.6f}")

print(f"\nall checks pass: {manifest.all_checks_pass}")
print(f"exit code would be: {exit_code_of(manifest)}")
print(f"timings: " + ", ".join(f"{k} {v:.2f}s" for k, v in manifest.timings.items()))

print(f"\nartifacts under {out}:")
for p in manifest.outputs:
    print(f"  {Path(p).relative_to(out)}")

summary = json.loads((out / "family_summary.json").read_text())
print(f"\nfitted constants: " + ", ".join(
    f"{k}={v:.4f}" for k, v in summary["constants"].items()))

# a second invocation reuses the persisted flows (same trace key)
manifest2 = run_experiment(config, out)
print(f"\nre-run flows timing: {manifest2.timings['flows']:.3f}s (traces reused)")
