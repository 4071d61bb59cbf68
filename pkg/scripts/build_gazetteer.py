"""Regenerate the bundled city gazetteer from GeoNames data.

Needs the ``geonamescache`` package at build time only; the CSV it writes is
committed under ``src/mvprofile/data/cities.csv``.

    python scripts/build_gazetteer.py --n 500
"""
import argparse
import csv
from pathlib import Path

import geonamescache

OUT = Path(__file__).resolve().parents[1] / "src" / "mvprofile" / "data" / "cities.csv"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args()

    gc = geonamescache.GeonamesCache()
    countries = gc.get_countries()
    cities = sorted(gc.get_cities().values(), key=lambda c: (-c["population"], c["geonameid"]))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "country_code", "country", "latitude", "longitude", "population"])
        for c in cities[: args.n]:
            cc = c["countrycode"]
            w.writerow([c["name"], cc, countries.get(cc, {}).get("name", ""),
                        round(c["latitude"], 5), round(c["longitude"], 5), c["population"]])
    print(f"wrote {args.n} cities to {args.out}")


if __name__ == "__main__":
    main()
