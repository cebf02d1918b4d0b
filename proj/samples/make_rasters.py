"""Writes the smooth rasters used by the sample configurations."""
import json
import math
from pathlib import Path

HERE = Path(__file__).parent / "data"


def write(name, n, f, extent=1.0):
    d = extent / n
    with open(HERE / name, "w") as out:
        out.write(json.dumps({"origin": [0.0, 0.0], "dx": d, "dy": d, "n_x": n, "n_y": n}) + "\n")
        for iy in range(n):
            y = (iy + 0.5) * d
            out.write(",".join(repr(round(f((ix + 0.5) * d, y), 12)) for ix in range(n)) + "\n")


write("phi0.csv", 40, lambda x, y: 300.0 * (1.0 + 0.5 * math.sin(2 * math.pi * x) * math.cos(math.pi * y)))
write("z.csv", 40, lambda x, y: 0.4 * math.sin(6 * x) * math.cos(4 * y))
write("regions.csv", 40, lambda x, y: float(int(x * 2) + 2 * int(y * 2)))
