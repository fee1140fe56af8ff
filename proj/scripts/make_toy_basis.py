#!/usr/bin/env python3
"""Prints the toy basis JSON (python3 scripts/make_toy_basis.py > data/toy_basis_v1.json).

Peak positions are rounded literature chemical shifts for brain metabolites at
high field, collapsed to singlets or a few lines per multiplet. They are
approximations for simulation only, not a measured basis set. Amplitudes are
proton counts times a global scale chosen so that the default noise prior
yields SNRs of roughly 0-40 dB.
"""
import json
import sys

SCALE = float(sys.argv[1]) if len(sys.argv) > 1 else 0.2
MM_GAUSS = 40.0

# name -> list of (ppm, protons)
METABOLITES = [
    ("Ala", [(1.460, 1.5), (1.474, 1.5), (3.775, 1.0)]),
    ("Asc", [(4.492, 1.0), (4.002, 1.0), (3.720, 2.0)]),
    ("Asp", [(3.891, 1.0), (2.801, 1.0), (2.653, 1.0)]),
    ("Cr", [(3.027, 3.0), (3.913, 2.0)]),
    ("GABA", [(3.013, 2.0), (1.889, 2.0), (2.284, 2.0)]),
    ("Gln", [(3.753, 1.0), (2.129, 2.0), (2.438, 2.0)]),
    ("Glu", [(3.744, 1.0), (2.042, 1.0), (2.120, 1.0), (2.336, 2.0)]),
    ("Gly", [(3.548, 2.0)]),
    ("GPC", [(3.212, 9.0), (3.659, 2.0), (4.312, 2.0)]),
    ("GSH", [(3.769, 1.0), (2.159, 2.0), (2.546, 2.0), (2.950, 2.0), (4.561, 1.0)]),
    ("mIns", [(3.522, 2.0), (3.614, 2.0), (4.054, 1.0), (3.269, 1.0)]),
    ("Lac", [(1.313, 3.0), (4.097, 1.0)]),
    ("NAAG", [(2.042, 3.0), (2.519, 1.0), (2.720, 1.0), (1.880, 2.0), (2.180, 2.0)]),
    ("NAA", [(2.008, 3.0), (2.486, 1.0), (2.673, 1.0), (4.382, 1.0)]),
    ("PCh", [(3.208, 9.0), (3.641, 2.0), (4.281, 2.0)]),
    ("PCr", [(3.029, 3.0), (3.930, 2.0)]),
    ("PE", [(3.216, 2.0), (3.980, 2.0)]),
    ("Scyllo", [(3.340, 6.0)]),
    ("Ser", [(3.835, 1.0), (3.976, 1.0), (3.938, 1.0)]),
    ("Tau", [(3.420, 2.0), (3.246, 2.0)]),
]

MM_PEAKS = [(0.90, 0.03), (1.21, 0.02), (1.39, 0.03), (1.67, 0.02), (2.04, 0.03),
            (2.26, 0.02), (2.99, 0.03), (3.21, 0.02), (3.79, 0.02)]


def main():
    doc = {
        "axis": {"n_points": 1024, "bandwidth_hz": 3000.0, "field_mhz": 298.03, "center_ppm": 4.65},
        "metabolites": [],
    }
    for name, peaks in METABOLITES:
        doc["metabolites"].append({
            "name": name,
            "is_mm": False,
            "peaks": [{"ppm": p, "amplitude": round(h * SCALE, 6), "intrinsic_gauss_per_s": 0.0}
                      for p, h in peaks],
        })
    doc["metabolites"].append({
        "name": "MM",
        "is_mm": True,
        "peaks": [{"ppm": p, "amplitude": round(h * SCALE, 6), "intrinsic_gauss_per_s": MM_GAUSS}
                  for p, h in MM_PEAKS],
    })
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
