"""Rebuild data/nsw_long.csv from the public DRDID R package (CRAN).

The repository already ships the generated CSV; run this only if you need to
regenerate it. Requires `pyreadr` and network access to a CRAN mirror.

Usage: python scripts/fetch_nsw_data.py [--cran-url URL] [--out PATH]
"""
import argparse
import io
import tarfile
import tempfile
import urllib.request
from pathlib import Path

import numpy as np
import pandas as pd

DEFAULT_CRAN = "https://cran.r-project.org"
COVARIATES = ["age", "educ", "nodegree", "married", "black", "hisp"]


def find_tarball_name(cran_url: str) -> str:
    with urllib.request.urlopen(f"{cran_url}/src/contrib/PACKAGES") as r:
        packages = r.read().decode()
    version = None
    lines = iter(packages.splitlines())
    for line in lines:
        if line.strip() == "Package: DRDID":
            version = next(lines).split(":", 1)[1].strip()
            break
    if version is None:
        raise RuntimeError("DRDID not found in CRAN PACKAGES index")
    return f"DRDID_{version}.tar.gz"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cran-url", default=DEFAULT_CRAN)
    parser.add_argument("--out", default="data/nsw_long.csv")
    args = parser.parse_args()

    import pyreadr  # optional dependency, only needed here

    name = find_tarball_name(args.cran_url)
    url = f"{args.cran_url}/src/contrib/{name}"
    print(f"downloading {url}")
    with urllib.request.urlopen(url) as r:
        blob = r.read()
    with tarfile.open(fileobj=io.BytesIO(blob)) as tar, tempfile.TemporaryDirectory() as tmp:
        member = tar.getmember("DRDID/data/nsw.rda")
        tar.extract(member, tmp)
        nsw = list(pyreadr.read_r(str(Path(tmp) / "DRDID/data/nsw.rda")).values())[0]

    # Dehejia-Wahba experimental treated units plus the CPS comparison group.
    treated = nsw[(nsw.treated == 1) & (nsw.dwincl == 1)].copy()
    cps = nsw[nsw["sample"] == 2].copy()
    treated["treat"] = 1
    cps["treat"] = 0
    wide = pd.concat([treated, cps], ignore_index=True)
    wide["id"] = np.arange(1, len(wide) + 1)

    rows = []
    for year, col in [(1974, "re74"), (1975, "re75"), (1978, "re78")]:
        sub = wide[["id", "treat"] + COVARIATES].copy()
        sub["year"] = year
        sub["re"] = wide[col].values
        rows.append(sub)
    long = pd.concat(rows, ignore_index=True)[["id", "year", "re", "treat"] + COVARIATES]
    for c in ["id", "year", "treat"] + COVARIATES:
        long[c] = long[c].astype(int)
    long = long.sort_values(["id", "year"]).reset_index(drop=True)
    long.to_csv(args.out, index=False, float_format="%.10g")
    print(f"wrote {args.out}: {len(long)} rows, {long['id'].nunique()} units")


if __name__ == "__main__":
    main()
