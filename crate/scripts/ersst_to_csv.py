#!/usr/bin/env python3
"""Convert a NOAA ERSST netCDF file into the gridded CSV schema used by qesn.

Subsets the tropical Pacific window (29S-29N, 124E-70W on the 2x2 degree
grid), drops land cells (any missing value across the requested months) and
writes monthly sea-surface temperatures with one column per ocean cell:

    time,c0001,c0002,...
    lat,-28.0,-28.0,...
    lon,124.0,126.0,...
    1970-01,2.4512e1,...

Works with both netCDF3 classic files (read via scipy) and netCDF4/HDF5
files (read via h5py), covering the IRI/LDEO data library and NOAA PSL
distributions of ERSST. Typical variable names (sst, lat/latitude/Y,
lon/longitude/X, time/T) are detected automatically.

Example:
    python3 scripts/ersst_to_csv.py sst.mnmean.nc data/ersst_tropical_pacific.csv \
        --start 1970-01 --end 2016-12
"""

import argparse
import sys
from datetime import date, timedelta

import numpy as np

LAT_NAMES = ("lat", "latitude", "Y", "y")
LON_NAMES = ("lon", "longitude", "X", "x")
TIME_NAMES = ("time", "T", "t")
SST_NAMES = ("sst", "ssta", "anom", "SST")


def load_netcdf(path):
    """Return (variables, attrs_fn) for netCDF3 or netCDF4 files."""
    try:
        from scipy.io import netcdf_file

        nc = netcdf_file(path, "r", mmap=False)
        vars_ = {name: np.array(var[:]) for name, var in nc.variables.items()}
        attrs = {
            name: {
                k: (v.decode() if isinstance(v, bytes) else v)
                for k, v in var._attributes.items()
            }
            for name, var in nc.variables.items()
        }
        nc.close()
        return vars_, attrs
    except Exception:
        pass

    import h5py

    vars_, attrs = {}, {}
    with h5py.File(path, "r") as f:
        def walk(name, obj):
            if isinstance(obj, h5py.Dataset):
                key = name.split("/")[-1]
                vars_[key] = np.array(obj[...])
                attrs[key] = {
                    k: (v.decode() if isinstance(v, bytes) else v)
                    for k, v in obj.attrs.items()
                }

        f.visititems(walk)
    return vars_, attrs


def pick(vars_, names, what):
    for name in names:
        if name in vars_:
            return name
    sys.exit(f"error: no {what} variable found (tried {names}); file has {sorted(vars_)}")


def month_labels(raw_time, units):
    """Decode a CF-style time axis into (year, month) pairs."""
    units = units.strip()
    lowered = units.lower()
    if "since" not in lowered:
        sys.exit(f"error: cannot interpret time units {units!r}")
    step, origin = units.split("since", 1)
    step = step.strip().lower()
    origin = origin.strip().split("T")[0].split()[0]
    y0, m0 = int(origin.split("-")[0]), int(origin.split("-")[1])
    d0 = int(origin.split("-")[2]) if origin.count("-") >= 2 else 1

    labels = []
    for v in np.asarray(raw_time, dtype=float):
        if step.startswith("month"):
            total = (y0 * 12 + (m0 - 1)) + int(round(v))
            labels.append((total // 12, total % 12 + 1))
        elif step.startswith("day"):
            d = date(y0, m0, d0) + timedelta(days=float(v))
            labels.append((d.year, d.month))
        elif step.startswith("hour"):
            d = date(y0, m0, d0) + timedelta(hours=float(v))
            labels.append((d.year, d.month))
        else:
            sys.exit(f"error: unsupported time step in {units!r}")
    return labels


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("input", help="ERSST netCDF file")
    ap.add_argument("output", help="gridded CSV to write")
    ap.add_argument("--start", default="1970-01", help="first month kept (YYYY-MM)")
    ap.add_argument("--end", default="2016-12", help="last month kept (YYYY-MM)")
    ap.add_argument("--lat-min", type=float, default=-29.0)
    ap.add_argument("--lat-max", type=float, default=29.0)
    ap.add_argument("--lon-min", type=float, default=124.0, help="degrees east, 0-360")
    ap.add_argument("--lon-max", type=float, default=290.0, help="degrees east, 0-360")
    args = ap.parse_args()

    vars_, attrs = load_netcdf(args.input)
    sst_name = pick(vars_, SST_NAMES, "sst")
    lat_name = pick(vars_, LAT_NAMES, "latitude")
    lon_name = pick(vars_, LON_NAMES, "longitude")
    time_name = pick(vars_, TIME_NAMES, "time")

    sst = np.asarray(vars_[sst_name], dtype=float)
    sst = np.squeeze(sst)  # drop singleton level axes
    if sst.ndim != 3:
        sys.exit(f"error: expected sst[time, lat, lon], got shape {sst.shape}")
    lats = np.asarray(vars_[lat_name], dtype=float)
    lons = np.asarray(vars_[lon_name], dtype=float) % 360.0

    sst_attrs = attrs.get(sst_name, {})
    for key in ("missing_value", "_FillValue"):
        if key in sst_attrs:
            sst = np.where(np.isclose(sst, float(sst_attrs[key])), np.nan, sst)
    if "scale_factor" in sst_attrs:
        sst = sst * float(sst_attrs["scale_factor"])
    if "add_offset" in sst_attrs:
        sst = sst + float(sst_attrs["add_offset"])

    labels = month_labels(vars_[time_name], attrs.get(time_name, {}).get("units", ""))
    if len(labels) != sst.shape[0]:
        sys.exit("error: time axis does not match the sst array")

    y0, m0 = (int(p) for p in args.start.split("-"))
    y1, m1 = (int(p) for p in args.end.split("-"))
    keep_t = [
        i
        for i, (y, m) in enumerate(labels)
        if (y, m) >= (y0, m0) and (y, m) <= (y1, m1)
    ]
    if not keep_t:
        sys.exit("error: no months inside the requested range")

    keep_lat = np.where((lats >= args.lat_min) & (lats <= args.lat_max))[0]
    keep_lon = np.where((lons >= args.lon_min) & (lons <= args.lon_max))[0]
    block = sst[np.ix_(keep_t, keep_lat, keep_lon)]

    # Land mask: keep cells observed in every requested month.
    ocean = ~np.any(np.isnan(block), axis=0)
    cells = [(i, j) for i in range(len(keep_lat)) for j in range(len(keep_lon)) if ocean[i, j]]
    if not cells:
        sys.exit("error: every cell has missing values in the requested window")

    with open(args.output, "w") as f:
        f.write("time" + "".join(f",c{k + 1:04d}" for k in range(len(cells))) + "\n")
        f.write("lat" + "".join(f",{lats[keep_lat[i]]}" for i, _ in cells) + "\n")
        f.write("lon" + "".join(f",{lons[keep_lon[j]]}" for _, j in cells) + "\n")
        for row, t in enumerate(keep_t):
            y, m = labels[t]
            f.write(f"{y:04d}-{m:02d}")
            for i, j in cells:
                f.write(f",{block[row, i, j]:.17e}")
            f.write("\n")

    print(
        f"wrote {args.output}: {len(keep_t)} months x {len(cells)} ocean cells "
        f"({labels[keep_t[0]][0]:04d}-{labels[keep_t[0]][1]:02d} to "
        f"{labels[keep_t[-1]][0]:04d}-{labels[keep_t[-1]][1]:02d})"
    )


if __name__ == "__main__":
    main()
