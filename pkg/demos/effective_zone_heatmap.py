"""
Where can an honest prover actually get admitted?
=================================================

Builds the admission-probability heatmap of the default four-witness
zone, overlays the theoretical (noise-free) effective witness zone, and
renders both to PNG when matplotlib is available.  The CSV written next
to this script is the same format the command-line ``heatmap`` command
emits.
"""

import numpy as np

from witnesszone import GridSpec, Vector3, ZoneConfig, heatmap
from witnesszone.simulation import admission_probability_analytic

zone = ZoneConfig("Z-01")

# A coarse grid keeps this demo quick; drop step to 0.5 for the full map.
grid = GridSpec(step=1.0)
result = heatmap(zone, grid, mode="analytic")

with open("effective_zone.csv", "w", encoding="utf-8") as fh:
    fh.write(result.to_csv())
print(f"wrote effective_zone.csv with {len(result.rows)} cells")

# Three reference points: well inside, at the effective boundary, and the
# distance-fraud position outside it.
for label, point in (
    ("baseline (5,5)", Vector3(5, 5)),
    ("edge (9.28,0)", Vector3(9.28, 0)),
    ("fraud (13,13)", Vector3(13, 13)),
):
    p = admission_probability_analytic(zone, point)
    print(f"  {label:<16} admission probability {p:.4f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the figure")
    raise SystemExit(0)

xs = sorted({x for x, _, _, _ in result.rows})
ys = sorted({y for _, y, _, _ in result.rows})
probs = np.zeros((len(ys), len(xs)))
overlay = np.zeros_like(probs)
for x, y, p, o in result.rows:
    probs[ys.index(y), xs.index(x)] = p
    overlay[ys.index(y), xs.index(x)] = o

fig, ax = plt.subplots(figsize=(6, 5))
im = ax.imshow(
    probs,
    origin="lower",
    extent=(min(xs), max(xs), min(ys), max(ys)),
    cmap="viridis",
    vmin=0.0,
    vmax=1.0,
)
ax.contour(xs, ys, overlay, levels=[0.5], colors="white", linewidths=1.5)
wx = [w.x for w in zone.witness_positions]
wy = [w.y for w in zone.witness_positions]
ax.scatter(wx, wy, marker="^", c="red", label="witnesses")
ax.scatter([5, 9.28, 13], [5, 0, 13], marker="x", c="orange", label="scenario provers")
ax.set_xlabel("x [m]")
ax.set_ylabel("y [m]")
ax.set_title("Admission probability and the noise-free effective zone")
ax.legend(loc="lower left")
fig.colorbar(im, ax=ax, label="P(admitted)")
fig.tight_layout()
fig.savefig("effective_zone.png", dpi=130)
print("wrote effective_zone.png")
