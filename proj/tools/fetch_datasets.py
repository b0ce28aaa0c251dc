#!/usr/bin/env python3
"""Export the benchmark survival datasets to data/*.csv.

Requires scikit-survival (pip install scikit-survival) and network access on
first use, since sksurv ships the data with the package. Categorical columns
are integer-coded; the output columns are `time`, `event`, then features.

Run from the repository root:  python tools/fetch_datasets.py
"""
import os
import sys

import pandas as pd

try:
    from sksurv import datasets as skd
except ImportError:
    sys.exit("scikit-survival is required: pip install scikit-survival")

OUT_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")

LOADERS = {
    "whas500.csv": skd.load_whas500,
    "veterans.csv": skd.load_veteran,
    "gbsg2.csv": skd.load_gbsg2,
}


def export(name, loader):
    X, y = loader()
    event_field, time_field = y.dtype.names
    if y.dtype[event_field].kind == "f" and y.dtype[time_field].kind == "b":
        event_field, time_field = time_field, event_field
    df = pd.DataFrame(index=X.index)
    df["time"] = y[time_field].astype(float)
    df["event"] = y[event_field].astype(int)
    for col in X.columns:
        series = X[col]
        if series.dtype.name in ("object", "category"):
            series = pd.Series(pd.factorize(series, sort=True)[0], index=X.index)
        df[col] = pd.to_numeric(series)
    keep = df["time"] > 0
    df = df[keep]
    path = os.path.join(OUT_DIR, name)
    df.to_csv(path, index=False)
    print(f"{path}: {len(df)} rows, {df.shape[1] - 2} features, "
          f"{df['event'].mean():.1%} events")


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    for name, loader in LOADERS.items():
        export(name, loader)


if __name__ == "__main__":
    main()
