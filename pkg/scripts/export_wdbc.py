"""Write the WDBC data bundled with scikit-learn as a UCI-style CSV.

Layout matches ``wdbc.data``: id, diagnosis (M/B), 30 real features.  The
bundled copy carries no patient ids, so sequential ids are written instead.

    python scripts/export_wdbc.py wdbc.csv
    awnmf table --data wdbc.csv --label-col 1 --drop-cols 0
"""

import csv
import sys

from sklearn.datasets import load_breast_cancer


def export(path):
    d = load_breast_cancer()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for i, (row, target) in enumerate(zip(d.data, d.target)):
            # sklearn encodes malignant as 0
            w.writerow([i + 1, "M" if target == 0 else "B"] + [repr(float(v)) for v in row])


if __name__ == "__main__":
    export(sys.argv[1] if len(sys.argv) > 1 else "wdbc.csv")
